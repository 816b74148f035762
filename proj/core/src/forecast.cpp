#include "fluxwarn/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "fluxwarn/adam.hpp"
#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

constexpr Eigen::Index kEvalChunk = 256;

/// Window inputs normalized and transposed to S x L so batch columns gather contiguously.
struct PreparedSet {
  std::vector<Eigen::MatrixXd> inputs;  // S x L
  std::vector<Eigen::VectorXd> targets;
};

PreparedSet prepare(const SupervisedWindowSet& w, std::size_t first, std::size_t count,
                    const NormStats& norm) {
  PreparedSet p;
  p.inputs.reserve(count);
  p.targets.reserve(count);
  const auto col = static_cast<Eigen::Index>(w.target_column);
  for (std::size_t i = first; i < first + count; ++i) {
    p.inputs.emplace_back(apply_norm(w.inputs[i], norm).transpose());
    p.targets.emplace_back((w.targets[i].array() - norm.mean(col)) / norm.std(col));
  }
  return p;
}

void gather(std::span<const Eigen::MatrixXd> inputs, std::span<const Eigen::VectorXd> targets,
            std::span<const std::size_t> index, std::vector<Eigen::MatrixXd>& steps,
            Eigen::MatrixXd& batch_targets) {
  const Eigen::Index lookback = inputs.front().cols();
  const Eigen::Index s = inputs.front().rows();
  const auto b = static_cast<Eigen::Index>(index.size());
  steps.resize(static_cast<std::size_t>(lookback));
  for (auto& m : steps) m.resize(s, b);
  batch_targets.resize(targets.front().size(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const std::size_t k = index[static_cast<std::size_t>(j)];
    for (Eigen::Index t = 0; t < lookback; ++t) {
      steps[static_cast<std::size_t>(t)].col(j) = inputs[k].col(t);
    }
    batch_targets.col(j) = targets[k];
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be > 0");
  if (epochs < 0) fail("epochs must be non-negative");
  if (batch_size <= 0) fail("batch size must be positive");
  if (!(validation_split > 0.0 && validation_split < 1.0)) {
    fail("validation split must lie in (0, 1)");
  }
  if (hidden_size <= 0) fail("hidden size must be positive");
}

double evaluate_loss(const LstmParams& params, std::span<const Eigen::MatrixXd> inputs,
                     std::span<const Eigen::VectorXd> targets) {
  if (inputs.empty()) return 0.0;
  std::vector<std::size_t> index(inputs.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::vector<Eigen::MatrixXd> steps;
  Eigen::MatrixXd batch_targets;
  double total = 0.0;
  for (std::size_t first = 0; first < index.size(); first += kEvalChunk) {
    const std::size_t n = std::min<std::size_t>(kEvalChunk, index.size() - first);
    gather(inputs, targets, std::span(index).subspan(first, n), steps, batch_targets);
    const LstmTape tape = forward_batch(steps, params);
    total += (tape.prediction - batch_targets).squaredNorm();
  }
  return total / static_cast<double>(inputs.size() * static_cast<std::size_t>(targets[0].size()));
}

ForecastModel train(const SupervisedWindowSet& windows, const TrainConfig& config,
                    const EpochCallback& on_epoch) {
  config.validate();
  if (windows.empty()) throw Error(ErrorKind::EmptyDataset, "no training windows");
  if (windows.inputs.size() != windows.targets.size()) {
    throw Error(ErrorKind::DimensionMismatch, "inputs and targets differ in count");
  }

  const std::size_t n = windows.size();
  std::size_t n_val = 0;
  if (n >= 2) {
    n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.validation_split));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  }
  const std::size_t n_train = n - n_val;

  Eigen::Index s = windows.inputs.front().cols();
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(n_train) * windows.lookback, s);
  for (std::size_t i = 0; i < n_train; ++i) {
    stacked.middleRows(static_cast<Eigen::Index>(i) * windows.lookback, windows.lookback) =
        windows.inputs[i];
  }

  ForecastModel model;
  model.norm = fit_norm(stacked);
  model.lookback = windows.lookback;
  model.horizon = windows.horizon;
  model.target_segment = windows.target_segment;
  model.target_column = windows.target_column;
  model.segments = windows.segments;
  model.config = config;
  model.params = LstmParams::initialize(s, config.hidden_size, windows.horizon, config.seed);

  const PreparedSet train_set = prepare(windows, 0, n_train, model.norm);
  const PreparedSet val_set =
      n_val > 0 ? prepare(windows, n_train, n_val, model.norm) : PreparedSet{};
  auto val_loss = [&](const LstmParams& p) {
    return n_val > 0 ? evaluate_loss(p, val_set.inputs, val_set.targets)
                     : evaluate_loss(p, train_set.inputs, train_set.targets);
  };

  const double initial_train = evaluate_loss(model.params, train_set.inputs, train_set.targets);
  model.history.push_back({0, initial_train, val_loss(model.params)});
  if (on_epoch) on_epoch(model.history.back());

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam = AdamState::zeros_like(model.params);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Eigen::MatrixXd> steps;
  Eigen::MatrixXd batch_targets;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t first = 0; first < n_train; first += batch) {
      const std::size_t count = std::min(batch, n_train - first);
      gather(train_set.inputs, train_set.targets, std::span(order).subspan(first, count), steps,
             batch_targets);
      const LstmTape tape = forward_batch(steps, model.params);
      loss_sum += loss_mse_batch(tape.prediction, batch_targets) * static_cast<double>(count);
      const LstmGradients grads = backward_batch(tape, batch_targets, model.params);
      adam_step(model.params, grads, adam, config.learning_rate);
    }
    model.history.push_back(
        {epoch, loss_sum / static_cast<double>(n_train), val_loss(model.params)});
    if (on_epoch) on_epoch(model.history.back());
  }
  return model;
}

std::vector<ForecastModel> train_targets(const TrafficMatrix& imputed,
                                         std::span<const std::string> targets, int lookback,
                                         int horizon, const TrainConfig& config,
                                         unsigned threads) {
  std::vector<ForecastModel> models(targets.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < targets.size(); k = next++) {
      try {
        TrainConfig cfg = config;
        cfg.seed = config.seed + k;
        models[k] = train(make_windows(imputed, targets[k], lookback, horizon), cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(targets.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return models;
}

Eigen::VectorXd predict(const ForecastModel& model, const Eigen::MatrixXd& recent, bool raw_units) {
  if (recent.rows() != model.lookback ||
      static_cast<std::size_t>(recent.cols()) != model.norm.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "recent window must be " + std::to_string(model.lookback) + " x " +
                    std::to_string(model.norm.size()));
  }
  const Eigen::VectorXd normalized = predict_window(apply_norm(recent, model.norm), model.params);
  if (!raw_units) return normalized;
  return invert_norm(normalized, model.norm, model.target_column).cwiseMax(0.0);
}

}  // namespace fluxwarn
