#include "fluxwarn/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::DimensionMismatch, what);
}

template <class Scalar, class M>
std::span<Scalar> flat(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

/// In-place activation of a 4H x B pre-activation block.
void activate_gates(Eigen::MatrixXd& z, Eigen::Index hidden) {
  auto sig = z.topRows(3 * hidden).array();
  sig = 1.0 / (1.0 + (-sig).exp());
  z.bottomRows(hidden).array() = z.bottomRows(hidden).array().tanh();
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmParams LstmParams::zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index horizon) {
  if (inputs <= 0 || hidden <= 0 || horizon <= 0) {
    throw Error(ErrorKind::InvalidArgument, "LSTM dimensions must be positive");
  }
  LstmParams p;
  p.input_weights = Eigen::MatrixXd::Zero(4 * hidden, inputs);
  p.recurrent_weights = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  p.bias = Eigen::VectorXd::Zero(4 * hidden);
  p.output_weights = Eigen::MatrixXd::Zero(horizon, hidden);
  p.output_bias = Eigen::VectorXd::Zero(horizon);
  return p;
}

LstmParams LstmParams::initialize(Eigen::Index inputs, Eigen::Index hidden,
                                  Eigen::Index horizon, std::uint64_t seed) {
  LstmParams p = zeros(inputs, hidden, horizon);
  std::mt19937_64 rng(seed);
  const double k_gate = 1.0 / std::sqrt(static_cast<double>(inputs + hidden));
  const double k_head = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> gate(-k_gate, k_gate);
  std::uniform_real_distribution<double> head(-k_head, k_head);
  auto fill = [&rng](auto& m, auto& dist) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  };
  fill(p.input_weights, gate);
  fill(p.recurrent_weights, gate);
  fill(p.bias, gate);
  p.gate_bias(Gate::Forget).setOnes();
  fill(p.output_weights, head);
  fill(p.output_bias, head);
  return p;
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

void LstmParams::check_consistent() const {
  const Eigen::Index h = recurrent_weights.cols();
  require(h > 0 && recurrent_weights.rows() == 4 * h, "recurrent weights must be 4H x H");
  require(input_weights.rows() == 4 * h && input_weights.cols() > 0,
          "input weights must be 4H x S");
  require(bias.size() == 4 * h, "bias must have 4H entries");
  require(output_weights.cols() == h && output_weights.rows() > 0,
          "output weights must be horizon x H");
  require(output_bias.size() == output_weights.rows(), "output bias must have horizon entries");
}

bool LstmParams::all_finite() const {
  for (const auto& b : blocks()) {
    if (!std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); })) {
      return false;
    }
  }
  return true;
}

std::array<std::span<double>, 5> LstmParams::blocks() {
  return {flat<double>(input_weights), flat<double>(recurrent_weights), flat<double>(bias),
          flat<double>(output_weights), flat<double>(output_bias)};
}

std::array<std::span<const double>, 5> LstmParams::blocks() const {
  return {flat<const double>(input_weights), flat<const double>(recurrent_weights),
          flat<const double>(bias), flat<const double>(output_weights),
          flat<const double>(output_bias)};
}

void LstmParams::set_zero() {
  input_weights.setZero();
  recurrent_weights.setZero();
  bias.setZero();
  output_weights.setZero();
  output_bias.setZero();
}

LstmParams& LstmParams::operator+=(const LstmParams& other) {
  input_weights += other.input_weights;
  recurrent_weights += other.recurrent_weights;
  bias += other.bias;
  output_weights += other.output_weights;
  output_bias += other.output_bias;
  return *this;
}

LstmParams& LstmParams::operator*=(double scale) {
  input_weights *= scale;
  recurrent_weights *= scale;
  bias *= scale;
  output_weights *= scale;
  output_bias *= scale;
  return *this;
}

LstmState LstmState::zeros(Eigen::Index hidden) {
  return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

LstmState cell_step(const Eigen::VectorXd& x, const LstmState& state, const LstmParams& params) {
  params.check_consistent();
  const Eigen::Index h = params.hidden();
  require(x.size() == params.inputs(), "input has " + std::to_string(x.size()) +
                                           " entries, expected " +
                                           std::to_string(params.inputs()));
  require(state.h.size() == h && state.c.size() == h, "state size differs from hidden size");

  Eigen::MatrixXd z = params.input_weights * x + params.recurrent_weights * state.h + params.bias;
  activate_gates(z, h);
  LstmState next;
  next.c = z.col(0).segment(h, h).cwiseProduct(state.c) +
           z.col(0).segment(0, h).cwiseProduct(z.col(0).segment(3 * h, h));
  next.h = z.col(0).segment(2 * h, h).cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

LstmTape forward_batch(std::span<const Eigen::MatrixXd> steps, const LstmParams& params) {
  params.check_consistent();
  require(!steps.empty(), "forward needs at least one time step");
  const Eigen::Index h = params.hidden();
  const Eigen::Index batch = steps.front().cols();
  require(batch > 0, "empty batch");

  LstmTape tape;
  const std::size_t n = steps.size();
  tape.x.reserve(n);
  tape.gates.reserve(n);
  tape.tanh_c.reserve(n);
  tape.c.reserve(n + 1);
  tape.h.reserve(n + 1);
  tape.c.push_back(Eigen::MatrixXd::Zero(h, batch));
  tape.h.push_back(Eigen::MatrixXd::Zero(h, batch));

  for (const auto& x : steps) {
    require(x.rows() == params.inputs() && x.cols() == batch,
            "step input must be S x B with S = " + std::to_string(params.inputs()));
    Eigen::MatrixXd z = params.input_weights * x;
    z.noalias() += params.recurrent_weights * tape.h.back();
    z.colwise() += params.bias;
    activate_gates(z, h);

    Eigen::MatrixXd c = z.middleRows(h, h).cwiseProduct(tape.c.back()) +
                        z.topRows(h).cwiseProduct(z.bottomRows(h));
    Eigen::MatrixXd tc = c.array().tanh().matrix();
    Eigen::MatrixXd hn = z.middleRows(2 * h, h).cwiseProduct(tc);

    tape.x.push_back(x);
    tape.gates.push_back(std::move(z));
    tape.c.push_back(std::move(c));
    tape.tanh_c.push_back(std::move(tc));
    tape.h.push_back(std::move(hn));
  }
  tape.prediction = params.output_weights * tape.h.back();
  tape.prediction.colwise() += params.output_bias;
  return tape;
}

ForwardResult forward(const Eigen::MatrixXd& window, const LstmParams& params) {
  params.check_consistent();
  require(window.rows() > 0 && window.cols() == params.inputs(),
          "window must be lookback x S with S = " + std::to_string(params.inputs()));
  std::vector<Eigen::MatrixXd> steps;
  steps.reserve(static_cast<std::size_t>(window.rows()));
  for (Eigen::Index t = 0; t < window.rows(); ++t) steps.emplace_back(window.row(t).transpose());
  ForwardResult r;
  r.tape = forward_batch(steps, params);
  r.prediction = r.tape.prediction.col(0);
  return r;
}

Eigen::VectorXd predict_window(const Eigen::MatrixXd& window, const LstmParams& params) {
  params.check_consistent();
  require(window.rows() > 0 && window.cols() == params.inputs(),
          "window must be lookback x S with S = " + std::to_string(params.inputs()));
  const Eigen::Index h = params.hidden();
  Eigen::VectorXd hs = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(h);
  Eigen::MatrixXd z(4 * h, 1);
  for (Eigen::Index t = 0; t < window.rows(); ++t) {
    z.noalias() = params.input_weights * window.row(t).transpose();
    z.noalias() += params.recurrent_weights * hs;
    z.col(0) += params.bias;
    activate_gates(z, h);
    cs = z.col(0).segment(h, h).cwiseProduct(cs) +
         z.col(0).segment(0, h).cwiseProduct(z.col(0).segment(3 * h, h));
    hs = z.col(0).segment(2 * h, h).cwiseProduct(cs.array().tanh().matrix());
  }
  return params.output_weights * hs + params.output_bias;
}

double loss_mse(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target) {
  require(prediction.size() == target.size(), "prediction and target lengths differ");
  require(prediction.size() > 0, "empty prediction");
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

double loss_mse_batch(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& targets) {
  require(prediction.rows() == targets.rows() && prediction.cols() == targets.cols(),
          "prediction and target shapes differ");
  require(prediction.size() > 0, "empty prediction");
  return (prediction - targets).squaredNorm() / static_cast<double>(prediction.size());
}

LstmGradients backward_batch(const LstmTape& tape, const Eigen::MatrixXd& targets,
                             const LstmParams& params) {
  params.check_consistent();
  require(tape.steps() > 0 && tape.h.size() == tape.steps() + 1, "tape is incomplete");
  require(targets.rows() == tape.prediction.rows() && targets.cols() == tape.prediction.cols(),
          "targets must be horizon x B");
  const Eigen::Index h = params.hidden();

  LstmGradients g = LstmParams::zeros(params.inputs(), h, params.horizon());
  const Eigen::MatrixXd dy = (tape.prediction - targets) *
                             (2.0 / static_cast<double>(tape.prediction.size()));
  g.output_weights.noalias() = dy * tape.h.back().transpose();
  g.output_bias = dy.rowwise().sum();

  Eigen::MatrixXd dh = params.output_weights.transpose() * dy;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, dy.cols());
  Eigen::MatrixXd dz(4 * h, dy.cols());
  for (std::size_t step = tape.steps(); step-- > 0;) {
    const auto& z = tape.gates[step];
    const auto i = z.topRows(h).array();
    const auto f = z.middleRows(h, h).array();
    const auto o = z.middleRows(2 * h, h).array();
    const auto gg = z.bottomRows(h).array();
    const auto tc = tape.tanh_c[step].array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.middleRows(2 * h, h).array() = dh.array() * tc * o * (1.0 - o);
    dz.topRows(h).array() = dc.array() * gg * i * (1.0 - i);
    dz.middleRows(h, h).array() = dc.array() * tape.c[step].array() * f * (1.0 - f);
    dz.bottomRows(h).array() = dc.array() * i * (1.0 - gg.square());

    g.input_weights.noalias() += dz * tape.x[step].transpose();
    g.recurrent_weights.noalias() += dz * tape.h[step].transpose();
    g.bias += dz.rowwise().sum();

    dh.noalias() = params.recurrent_weights.transpose() * dz;
    dc.array() *= f;
  }
  return g;
}

LstmGradients backward(const LstmTape& tape, const Eigen::VectorXd& target,
                       const LstmParams& params) {
  require(tape.batch() == 1, "single-target backward needs a batch of one");
  return backward_batch(tape, Eigen::MatrixXd(target), params);
}

GradCheckResult grad_check(const LstmParams& params, const Eigen::MatrixXd& window,
                           const Eigen::VectorXd& target, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must be positive and finite");
  }
  const ForwardResult base = forward(window, params);
  const LstmGradients analytic = backward(base.tape, target, params);

  GradCheckResult result;
  LstmParams probe = params;
  const auto probe_blocks = probe.blocks();
  const auto grad_blocks = analytic.blocks();
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    for (std::size_t k = 0; k < probe_blocks[b].size(); ++k) {
      double& entry = probe_blocks[b][k];
      const double saved = entry;
      entry = saved + epsilon;
      const double up = loss_mse(predict_window(window, probe), target);
      entry = saved - epsilon;
      const double down = loss_mse(predict_window(window, probe), target);
      entry = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grad_blocks[b][k];
      const double diff = std::abs(a - numeric);
      if (std::abs(a) < GradCheckResult::absolute_branch_below) {
        result.max_absolute_error = std::max(result.max_absolute_error, diff);
        ++result.absolute_checked;
      } else {
        const double scale = std::max(std::abs(a), std::abs(numeric));
        result.max_relative_error = std::max(result.max_relative_error, diff / scale);
        ++result.relative_checked;
      }
    }
  }
  return result;
}

}  // namespace fluxwarn
