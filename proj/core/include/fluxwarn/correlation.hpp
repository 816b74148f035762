#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluxwarn/data_pipeline.hpp"
#include "fluxwarn/time.hpp"

namespace fluxwarn {

struct HourlySeries {
  Instant start{};
  Seconds step = kHourStep;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  Instant time_at(std::size_t i) const { return start + step * static_cast<std::int64_t>(i); }
};

/// Sums each hour's six 10-minute counts. A trailing partial hour is dropped.
/// Throws MisalignedStart unless the matrix starts on the hour.
HourlySeries rebin_to_hourly(const TrafficMatrix& imputed, const std::string& segment);

/// Sample Pearson coefficient. Throws LengthMismatch, ConstantSeries,
/// InvalidArgument (fewer than 2 points).
double pearson(std::span<const double> x, std::span<const double> y);

struct LagScanResult {
  std::vector<int> lags;
  std::vector<double> rho;
  int best_lag = 0;

  double rho_at(int lag) const;
};

inline constexpr std::size_t kMinLagOverlap = 48;

/// For each k in [-max_lag, max_lag], correlates traffic at hour t with pollution
/// at hour t + k over their common span; positive k means traffic leads.
/// best_lag maximizes rho; ties go to the smallest |k|, then the negative one.
LagScanResult lag_scan(const HourlySeries& traffic, const HourlySeries& pollution, int max_lag);

struct DailyCorrelation {
  Instant day;
  std::optional<double> rho;  // nullopt when either series is constant that day
};

/// One coefficient per calendar day. Both series must start at the same midnight
/// and cover the same whole days (PartialDay, MisalignedStart, LengthMismatch).
std::vector<DailyCorrelation> daily_correlation(const HourlySeries& traffic,
                                                const HourlySeries& pollution);

void write_lag_scan_csv(std::ostream& out, const LagScanResult& scan);
/// Undefined days are written as `nan`.
void write_daily_csv(std::ostream& out, std::span<const DailyCorrelation> days);

/// `timestamp,value`, header optional, contiguous hourly rows.
void write_hourly_csv(std::ostream& out, const HourlySeries& series);
HourlySeries read_hourly_csv(std::istream& in);

}  // namespace fluxwarn
