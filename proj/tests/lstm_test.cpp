#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fluxwarn/error.hpp"
#include "fluxwarn/lstm.hpp"
#include "naive_lstm.hpp"

namespace fluxwarn {
namespace {

using oracle::naive_forward;
using oracle::random_matrix;
using oracle::random_params;
using oracle::rows_of;

TEST(Lstm, ZeroParamsCellStep) {
  // x = 0, h = 0, c = 1: every gate is 0.5 and g = 0.
  const auto p = LstmParams::zeros(2, 1, 1);
  LstmState state{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const auto next = cell_step(Eigen::VectorXd::Zero(2), state, p);
  EXPECT_DOUBLE_EQ(next.c(0), 0.5);
  EXPECT_NEAR(next.h(0), 0.23105857863000487, 1e-15);
}

TEST(Lstm, ZeroParamsPredictOutputBias) {
  auto p = LstmParams::zeros(3, 4, 2);
  p.output_bias << 1.5, -2.0;
  std::mt19937_64 rng(1);
  EXPECT_EQ(predict_window(random_matrix(5, 3, rng), p), Eigen::Vector2d(1.5, -2.0));
}

TEST(Lstm, CellStepRejectsBadShapes) {
  const auto p = LstmParams::zeros(2, 3, 1);
  const auto s = LstmState::zeros(3);
  try {
    cell_step(Eigen::VectorXd::Zero(4), s, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Lstm, ForwardMatchesScalarReference) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const long S = 1 + trial % 5, H = 1 + trial % 7, K = 1 + trial % 3, L = 1 + trial % 8;
    const auto p = random_params(S, H, K, rng, 0.8);
    const auto w = random_matrix(L, S, rng, 2.0);
    const auto y = forward(w, p).prediction;
    const auto ref = naive_forward(rows_of(w), p);
    for (long k = 0; k < K; ++k) EXPECT_NEAR(y(k), ref[k], 1e-12);
    EXPECT_TRUE(predict_window(w, p).isApprox(y, 1e-14));
  }
}

TEST(Lstm, BatchColumnsMatchSingleWindows) {
  std::mt19937_64 rng(7);
  const long S = 3, H = 5, K = 3, L = 4, B = 6;
  const auto p = random_params(S, H, K, rng);
  std::vector<Eigen::MatrixXd> windows;
  for (long b = 0; b < B; ++b) windows.push_back(random_matrix(L, S, rng));
  std::vector<Eigen::MatrixXd> steps(L, Eigen::MatrixXd(S, B));
  for (long t = 0; t < L; ++t)
    for (long b = 0; b < B; ++b) steps[t].col(b) = windows[b].row(t).transpose();
  const auto tape = forward_batch(steps, p);
  for (long b = 0; b < B; ++b)
    EXPECT_TRUE(tape.prediction.col(b).isApprox(predict_window(windows[b], p), 1e-13));
}

TEST(Lstm, GatesStayInOpenUnitInterval) {
  std::mt19937_64 rng(3);
  const auto p = random_params(4, 6, 2, rng, 3.0);
  const auto tape = forward(random_matrix(10, 4, rng, 5.0), p).tape;
  const long H = 6;
  for (const auto& g : tape.gates) {
    const Eigen::MatrixXd sig = g.topRows(3 * H);
    EXPECT_GT(sig.minCoeff(), 0.0);
    EXPECT_LT(sig.maxCoeff(), 1.0);
    EXPECT_GE(g.bottomRows(H).minCoeff(), -1.0);
    EXPECT_LE(g.bottomRows(H).maxCoeff(), 1.0);
  }
}

// Central differences of the scalar reference, independent of backward().
TEST(Lstm, BackwardMatchesReferenceFiniteDifferences) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const long S = 1 + trial % 3, H = 2 + trial % 4, K = 1 + trial % 3, L = 2 + trial % 4;
    auto p = random_params(S, H, K, rng);
    const auto w = random_matrix(L, S, rng);
    const Eigen::VectorXd target = random_matrix(K, 1, rng);
    const auto grads = backward(forward(w, p).tape, target, p);
    const auto rows = rows_of(w);
    auto pb = p.blocks();
    const auto gb = grads.blocks();
    for (std::size_t b = 0; b < pb.size(); ++b) {
      for (std::size_t i = 0; i < pb[b].size(); ++i) {
        const double saved = pb[b][i];
        const double eps = 1e-6;
        pb[b][i] = saved + eps;
        const double up = oracle::naive_mse(naive_forward(rows, p), target);
        pb[b][i] = saved - eps;
        const double down = oracle::naive_mse(naive_forward(rows, p), target);
        pb[b][i] = saved;
        const double numeric = (up - down) / (2 * eps);
        EXPECT_NEAR(gb[b][i], numeric, 1e-7 + 1e-5 * std::abs(numeric))
            << LstmParams::kBlockNames[b] << "[" << i << "] trial " << trial;
      }
    }
  }
}

TEST(Lstm, BatchGradientIsMeanOfSingles) {
  std::mt19937_64 rng(5);
  const long S = 2, H = 3, K = 2, L = 3, B = 4;
  const auto p = random_params(S, H, K, rng);
  std::vector<Eigen::MatrixXd> steps(L, Eigen::MatrixXd(S, B));
  Eigen::MatrixXd targets = random_matrix(K, B, rng);
  LstmGradients sum = LstmParams::zeros(S, H, K);
  std::vector<Eigen::MatrixXd> windows;
  for (long b = 0; b < B; ++b) windows.push_back(random_matrix(L, S, rng));
  for (long t = 0; t < L; ++t)
    for (long b = 0; b < B; ++b) steps[t].col(b) = windows[b].row(t).transpose();
  for (long b = 0; b < B; ++b)
    sum += backward(forward(windows[b], p).tape, targets.col(b), p);
  sum *= 1.0 / B;
  const auto batch = backward_batch(forward_batch(steps, p), targets, p);
  const auto a = sum.blocks();
  const auto c = batch.blocks();
  for (std::size_t b = 0; b < a.size(); ++b)
    for (std::size_t i = 0; i < a[b].size(); ++i) EXPECT_NEAR(a[b][i], c[b][i], 1e-14);
}

TEST(Lstm, LossMse) {
  EXPECT_DOUBLE_EQ(loss_mse(Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 2)), 2.0);
}

TEST(Lstm, GradCheckPassesOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(3, 4, 3, rng);
    const auto r = grad_check(p, random_matrix(4, 3, rng), random_matrix(3, 1, rng));
    EXPECT_TRUE(r.passed()) << r.max_relative_error << " " << r.max_absolute_error;
    EXPECT_EQ(r.relative_checked + r.absolute_checked, p.parameter_count());
  }
}

TEST(Lstm, GradCheckZeroGradientUsesAbsoluteBranch) {
  // Zero recurrent and input weights with zero output weights: only the head
  // bias has a nonzero gradient, everything else lands in the absolute branch.
  auto p = LstmParams::zeros(2, 3, 1);
  std::mt19937_64 rng(4);
  const auto r = grad_check(p, random_matrix(3, 2, rng), Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.relative_checked, 1u);
  EXPECT_EQ(r.absolute_checked, p.parameter_count() - 1);
}

TEST(Lstm, GradCheckRejectsBadEpsilon) {
  const auto p = LstmParams::zeros(1, 1, 1);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::VectorXd t = Eigen::VectorXd::Zero(1);
  for (double eps : {0.0, -1e-5, std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::infinity()}) {
    try {
      grad_check(p, w, t, eps);
      FAIL() << eps;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
  }
}

TEST(Lstm, InitializeIsSeededAndBounded) {
  const auto a = LstmParams::initialize(4, 8, 3, 42);
  const auto b = LstmParams::initialize(4, 8, 3, 42);
  const auto c = LstmParams::initialize(4, 8, 3, 43);
  EXPECT_EQ(a.input_weights, b.input_weights);
  EXPECT_NE(a.input_weights, c.input_weights);
  EXPECT_LE(a.input_weights.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(12.0));
  EXPECT_LE(a.output_weights.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(8.0));
  EXPECT_TRUE((a.gate_bias(Gate::Forget).array() == 1.0).all());
  EXPECT_EQ(a.parameter_count(), std::size_t(4 * 8 * 4 + 4 * 8 * 8 + 4 * 8 + 3 * 8 + 3));
}

}  // namespace
}  // namespace fluxwarn
