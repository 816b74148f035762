#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fluxwarn/data_pipeline.hpp"
#include "fluxwarn/time.hpp"

namespace fluxwarn {

enum class AlarmLevel : int { Low = 0, Medium = 1, High = 2 };

inline constexpr std::array<AlarmLevel, 3> kAlarmLevels = {AlarmLevel::Low, AlarmLevel::Medium,
                                                           AlarmLevel::High};

std::string_view to_string(AlarmLevel level);
/// Accepts "Low", "Medium", "High". Throws InvalidArgument otherwise.
AlarmLevel parse_alarm_level(std::string_view text);

/// Daytime hours [6, 22) feed the percentiles.
inline constexpr int kDaytimeFirstHour = 6;
inline constexpr int kDaytimeEndHour = 22;

struct AlarmThresholds {
  std::string segment_id;
  double p50 = 0.0;
  double p75 = 0.0;
  std::int64_t sample_count = 0;
  Instant window_start{};
  Instant window_end{};
};

struct TimedValue {
  Instant time;
  double value = 0.0;
};

/// Linear interpolation between closest order statistics of a sorted sample:
/// position q * (n - 1).
double percentile_sorted(std::span<const double> sorted, double q);

/// Percentiles of observations in [window_start, as_of) whose hour lies in [6, 22).
/// window_start defaults to January 1 of as_of's year. Throws NoDaytimeData.
AlarmThresholds compute_thresholds(const std::string& segment_id,
                                   std::span<const TimedValue> series, Instant as_of,
                                   std::optional<Instant> window_start = std::nullopt);

/// Same over the observed cells of one matrix column.
AlarmThresholds compute_thresholds(const TrafficMatrix& matrix, const std::string& segment_id,
                                   Instant as_of,
                                   std::optional<Instant> window_start = std::nullopt);

/// flux < p50 -> Low, p50 <= flux <= p75 -> Medium, flux > p75 -> High.
AlarmLevel classify(double flux, const AlarmThresholds& thresholds);

/// Night bins [23:00, 05:00) sit outside the daytime sample; levels there are advisory.
bool is_advisory(Instant t);

struct ConfusionMatrix3 {
  /// counts[true][predicted]
  std::array<std::array<std::int64_t, 3>, 3> counts{};

  void add(AlarmLevel truth, AlarmLevel predicted);
  std::int64_t at(AlarmLevel truth, AlarmLevel predicted) const;
  std::int64_t truth_total(AlarmLevel truth) const;
  std::int64_t total() const;
  /// Diagonal over row sum; nullopt when the class never occurs.
  std::optional<double> recall(AlarmLevel truth) const;
  std::optional<double> accuracy() const;
};

/// Throws LengthMismatch.
ConfusionMatrix3 evaluate(std::span<const AlarmLevel> truth, std::span<const AlarmLevel> predicted);

/// `segment_id,p50,p75,sample_count,window_start,window_end` with header.
void write_thresholds_csv(std::ostream& out, std::span<const AlarmThresholds> thresholds);
std::vector<AlarmThresholds> read_thresholds_csv(std::istream& in);

/// Maps a lookback x S raw window to a horizon-step raw forecast.
using Forecaster = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct AlarmRow {
  Instant time;
  std::string segment;
  double true_flux = 0.0;
  double pred_flux = 0.0;
  AlarmLevel true_level = AlarmLevel::Low;
  AlarmLevel pred_level = AlarmLevel::Low;
  bool advisory = false;
};

/// For every instant t in [from, to) that is the last forecast step of a complete
/// window, compares the horizon-th forecast with the observed flux at t.
std::vector<AlarmRow> alarm_rows(const TrafficMatrix& imputed, const std::string& segment,
                                 const Forecaster& forecaster, int lookback, int horizon,
                                 const AlarmThresholds& thresholds, Instant from, Instant to);

/// `time,segment,true_flux,pred_flux,true_level,pred_level` with header.
void write_alarm_table(std::ostream& out, std::span<const AlarmRow> rows);
std::vector<AlarmRow> read_alarm_table(std::istream& in);

}  // namespace fluxwarn
