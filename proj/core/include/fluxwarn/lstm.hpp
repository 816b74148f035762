#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fluxwarn {

/// Gate rows are stacked in this order inside the 4H-row weight blocks.
enum class Gate : int { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

/// Trainable parameters of a single-layer LSTM with an affine multi-step head.
/// The same type holds gradients and Adam moments.
struct LstmParams {
  Eigen::MatrixXd input_weights;      // 4H x S
  Eigen::MatrixXd recurrent_weights;  // 4H x H
  Eigen::VectorXd bias;               // 4H
  Eigen::MatrixXd output_weights;     // horizon x H
  Eigen::VectorXd output_bias;        // horizon

  static constexpr std::array<std::string_view, 5> kBlockNames = {
      "input_weights", "recurrent_weights", "bias", "output_weights", "output_bias"};

  static LstmParams zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index horizon);

  /// Uniform in [-k, k] with k = 1/sqrt(fan-in) (S + H for gates, H for the head);
  /// forget-gate biases start at 1.
  static LstmParams initialize(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index horizon,
                               std::uint64_t seed);

  Eigen::Index inputs() const { return input_weights.cols(); }
  Eigen::Index hidden() const { return recurrent_weights.cols(); }
  Eigen::Index horizon() const { return output_weights.rows(); }
  std::size_t parameter_count() const;

  /// Throws DimensionMismatch unless all blocks agree on S, H and horizon.
  void check_consistent() const;
  bool all_finite() const;

  auto gate_input_weights(Gate g) { return input_weights.middleRows(gate_offset(g), hidden()); }
  auto gate_input_weights(Gate g) const {
    return input_weights.middleRows(gate_offset(g), hidden());
  }
  auto gate_recurrent_weights(Gate g) {
    return recurrent_weights.middleRows(gate_offset(g), hidden());
  }
  auto gate_recurrent_weights(Gate g) const {
    return recurrent_weights.middleRows(gate_offset(g), hidden());
  }
  auto gate_bias(Gate g) { return bias.segment(gate_offset(g), hidden()); }
  auto gate_bias(Gate g) const { return bias.segment(gate_offset(g), hidden()); }

  /// Flat views of the five blocks (column-major storage order), in kBlockNames order.
  std::array<std::span<double>, 5> blocks();
  std::array<std::span<const double>, 5> blocks() const;

  void set_zero();
  LstmParams& operator+=(const LstmParams& other);
  LstmParams& operator*=(double scale);

 private:
  Eigen::Index gate_offset(Gate g) const { return static_cast<Eigen::Index>(g) * hidden(); }
};

using LstmGradients = LstmParams;

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmState zeros(Eigen::Index hidden);
};

double sigmoid(double x);

/// One step of the recurrence: i,f,o = sigmoid, g = tanh,
/// c' = f*c + i*g, h' = o*tanh(c').
LstmState cell_step(const Eigen::VectorXd& x, const LstmState& state, const LstmParams& params);

/// Activations kept for backpropagation. Every matrix has one column per batch item.
struct LstmTape {
  std::vector<Eigen::MatrixXd> x;       // L entries, S x B
  std::vector<Eigen::MatrixXd> gates;   // L entries, 4H x B (post-activation i, f, o, g)
  std::vector<Eigen::MatrixXd> c;       // L + 1 entries, c[0] = 0
  std::vector<Eigen::MatrixXd> h;       // L + 1 entries, h[0] = 0
  std::vector<Eigen::MatrixXd> tanh_c;  // L entries
  Eigen::MatrixXd prediction;           // horizon x B

  std::size_t steps() const { return x.size(); }
  Eigen::Index batch() const { return prediction.cols(); }
};

/// Runs the recurrence over `steps` (each S x B) from a zero state;
/// prediction = V h_L + c_out per column.
LstmTape forward_batch(std::span<const Eigen::MatrixXd> steps, const LstmParams& params);

struct ForwardResult {
  Eigen::VectorXd prediction;
  LstmTape tape;
};

/// `window` is lookback x S, one row per time step, oldest first.
ForwardResult forward(const Eigen::MatrixXd& window, const LstmParams& params);

/// Prediction only, no tape.
Eigen::VectorXd predict_window(const Eigen::MatrixXd& window, const LstmParams& params);

double loss_mse(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target);
/// Mean over the batch of the per-column MSE.
double loss_mse_batch(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& targets);

/// Exact gradient of loss_mse_batch with respect to every parameter (BPTT).
LstmGradients backward_batch(const LstmTape& tape, const Eigen::MatrixXd& targets,
                             const LstmParams& params);
LstmGradients backward(const LstmTape& tape, const Eigen::VectorXd& target,
                       const LstmParams& params);

struct GradCheckResult {
  double max_relative_error = 0.0;
  /// Worst |analytic - numeric| among entries whose analytic gradient is below
  /// `absolute_branch_below`; those entries are excluded from the relative error.
  double max_absolute_error = 0.0;
  std::size_t relative_checked = 0;
  std::size_t absolute_checked = 0;

  static constexpr double absolute_branch_below = 1e-6;

  bool passed(double rel_tol = 1e-4, double abs_tol = 1e-7) const {
    return max_relative_error < rel_tol && max_absolute_error < abs_tol;
  }
};

/// Compares backward() with central differences of loss_mse on every parameter.
/// Throws InvalidArgument for a non-positive or non-finite epsilon.
GradCheckResult grad_check(const LstmParams& params, const Eigen::MatrixXd& window,
                           const Eigen::VectorXd& target, double epsilon = 1e-5);

}  // namespace fluxwarn
