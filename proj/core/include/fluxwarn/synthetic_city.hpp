#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxwarn/correlation.hpp"
#include "fluxwarn/data_pipeline.hpp"
#include "fluxwarn/time.hpp"

namespace fluxwarn {

/// Parameters of the synthetic city. `noise` is the log-scale standard deviation
/// of the per-bin multiplicative noise (and twice that of the shared daily factor);
/// `skewness` is the skew-normal shape of the log-noise.
struct CitySpec {
  int n_segments = 24;
  int n_weeks = 10;
  std::uint64_t seed = 7;
  /// Mean vehicles per 10 minutes at a unit profile; empty draws one per segment.
  std::vector<double> base_scale;
  double weekend_factor = 0.7;
  double noise = 0.1;
  double skewness = 2.0;
  /// 2018-01-01T00:00Z, a Monday.
  Instant start = Instant{std::chrono::sys_days{std::chrono::year{2018} / 1 / 1}};

  /// Throws InvalidSpec.
  void validate() const;
};

/// `S001`, `S002`, ... zero-padded to at least three digits.
std::string segment_name(int index, int n_segments);

/// Noise-free relative flux of one segment at a given instant (before base scale).
double diurnal_profile(Instant t, int segment, const CitySpec& spec);

/// Weekday: low daytime plateau plus morning and early-afternoon rush bumps;
/// weekend: damped plateau with a single midday bump; near zero from 23:00 to 05:00.
/// A shared daily factor correlates segments. Counts are non-negative integers.
TrafficMatrix generate_traffic(const CitySpec& spec);

/// background + coupling * traffic + N(0, noise^2), clamped at 0.
HourlySeries generate_pollution(const HourlySeries& traffic, double background, double coupling,
                                double noise, std::uint64_t seed);

}  // namespace fluxwarn
