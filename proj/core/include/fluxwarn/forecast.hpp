#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fluxwarn/data_pipeline.hpp"
#include "fluxwarn/lstm.hpp"

namespace fluxwarn {

/// Training hyperparameters. The defaults target long full-scale runs.
struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 11000;
  int batch_size = 32;
  double validation_split = 0.10;
  int hidden_size = 64;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument.
  void validate() const;
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// A trained per-segment forecaster. Losses are in normalized units.
struct ForecastModel {
  LstmParams params;
  NormStats norm;
  int lookback = 6;
  int horizon = 3;
  std::string target_segment;
  std::size_t target_column = 0;
  std::vector<std::string> segments;
  TrainConfig config;
  std::vector<EpochLoss> history;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Holds out the chronologically last validation_split of the windows, fits
/// normalization on the remaining windows' inputs, then runs seeded
/// shuffled mini-batch Adam. history[0] evaluates the initial parameters;
/// later entries carry the epoch's mean batch loss and the post-epoch
/// validation loss.
ForecastModel train(const SupervisedWindowSet& windows, const TrainConfig& config,
                    const EpochCallback& on_epoch = {});

/// One model per target, `threads` workers. Target k is seeded with config.seed + k,
/// so the result does not depend on the thread count.
std::vector<ForecastModel> train_targets(const TrafficMatrix& imputed,
                                         std::span<const std::string> targets, int lookback,
                                         int horizon, const TrainConfig& config,
                                         unsigned threads);

/// `recent` is lookback x S in raw counts. raw_units de-normalizes and clamps at 0;
/// otherwise the normalized outputs are returned.
Eigen::VectorXd predict(const ForecastModel& model, const Eigen::MatrixXd& recent,
                        bool raw_units = true);

/// Mean loss of `params` over a set of normalized windows (S x L each).
double evaluate_loss(const LstmParams& params, std::span<const Eigen::MatrixXd> inputs_by_step,
                     std::span<const Eigen::VectorXd> targets);

// fluxmodel v1: text, one `key value...` per line, then `block <name> <rows> <cols>`
// sections in row-major order. Reals are printed in shortest round-trip form,
// so save/load is exact.
void save_model(std::ostream& out, const ForecastModel& model);
ForecastModel load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ForecastModel& model);
ForecastModel load_model(const std::filesystem::path& path);

}  // namespace fluxwarn
