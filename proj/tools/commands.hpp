#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fluxwarn/forecast.hpp"
#include "fluxwarn/synthetic_city.hpp"
#include "fluxwarn/time.hpp"

namespace fluxwarn::cli {

inline constexpr const char* kThreadsEnv = "FLUXWARN_THREADS";

struct GenerateOptions {
  CitySpec city;
  std::filesystem::path out_dir;
  bool pollution = true;
  std::string pollution_segment;  // empty: first segment
  double background = 20.0;
  double coupling = 0.5;
  double pollution_noise = 5.0;
  bool write_matrix = false;
};

struct TrainOptions {
  std::filesystem::path data;
  bool csv_header = true;
  std::vector<std::string> targets;
  bool all_targets = false;
  int lookback = 6;
  int horizon = 3;
  TrainConfig config;
  std::optional<Instant> from;
  std::optional<Instant> until;
  std::filesystem::path out_dir;
  unsigned parallel_targets = 1;
  bool verbose = false;
};

struct ThresholdsOptions {
  std::filesystem::path data;
  bool csv_header = true;
  std::optional<Instant> as_of;
  std::optional<Instant> window_start;
  std::vector<std::string> segments;
  std::filesystem::path out;
};

struct AlarmOptions {
  std::vector<std::filesystem::path> models;
  std::filesystem::path data;
  bool csv_header = true;
  std::filesystem::path thresholds;
  /// Recompute thresholds each evaluation day from the data up to that midnight
  /// instead of reading a frozen thresholds file.
  bool daily_thresholds = false;
  std::optional<Instant> from;
  std::optional<Instant> to;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path table;
  std::filesystem::path out;
  bool exclude_advisory = false;
};

struct CorrelateOptions {
  std::filesystem::path data;
  bool csv_header = true;
  std::string segment;
  std::filesystem::path pollution;
  int max_lag = 24;
  std::optional<Instant> from;
  std::optional<Instant> to;
  std::filesystem::path out_dir;
};

// Each command writes all of its outputs plus `<command>.manifest.json` (next to a
// file output, or inside an output directory) or nothing at all.
void cmd_generate(const GenerateOptions& opts, std::ostream& log);
void cmd_train(const TrainOptions& opts, std::ostream& log);
void cmd_thresholds(const ThresholdsOptions& opts, std::ostream& log);
void cmd_alarm(const AlarmOptions& opts, std::ostream& log);
void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
void cmd_correlate(const CorrelateOptions& opts, std::ostream& log);

/// min(requested, FLUXWARN_THREADS) when the variable is set to a positive integer.
unsigned effective_threads(unsigned requested);

}  // namespace fluxwarn::cli
