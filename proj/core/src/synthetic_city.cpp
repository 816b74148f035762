#include "fluxwarn/synthetic_city.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "fluxwarn/error.hpp"
#include "fluxwarn/skew_normal.hpp"

namespace fluxwarn {
namespace {

struct SegmentTraits {
  double morning_amp;
  double afternoon_amp;
  double morning_shift;
  double afternoon_shift;
  double weekend_amp;
};

double bump(double h, double center, double width) {
  const double u = (h - center) / width;
  return std::exp(-0.5 * u * u);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double plateau(double h, double open, double close, double level) {
  return level * logistic((h - open) / 0.4) * logistic((close - h) / 0.4);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

SegmentTraits traits_for(int segment, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 1000 + static_cast<std::uint64_t>(segment)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SegmentTraits t;
  t.morning_amp = 0.6 + 0.6 * u(rng);
  t.afternoon_amp = 0.5 + 0.6 * u(rng);
  t.morning_shift = -0.5 + u(rng);
  t.afternoon_shift = -0.5 + u(rng);
  t.weekend_amp = 0.7 + 0.4 * u(rng);
  return t;
}

std::vector<double> base_scales(const CitySpec& spec) {
  if (!spec.base_scale.empty()) return spec.base_scale;
  std::mt19937_64 rng(mix(spec.seed, 1));
  std::uniform_real_distribution<double> u(std::log(20.0), std::log(150.0));
  std::vector<double> out(static_cast<std::size_t>(spec.n_segments));
  for (auto& b : out) b = std::exp(u(rng));
  return out;
}

double profile(double hour, bool weekend, const SegmentTraits& t, double weekend_factor) {
  if (weekend) {
    return weekend_factor *
               (plateau(hour, 7.0, 22.5, 0.3) + t.weekend_amp * bump(hour, 13.0, 3.0)) +
           0.005;
  }
  return plateau(hour, 6.0, 22.0, 0.25) + t.morning_amp * bump(hour, 8.0 + t.morning_shift, 1.0) +
         t.afternoon_amp * bump(hour, 14.0 + t.afternoon_shift, 1.5) + 0.005;
}

}  // namespace

void CitySpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); };
  if (n_segments < 1) fail("n_segments must be >= 1");
  if (n_weeks < 1) fail("n_weeks must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be non-negative");
  if (!(weekend_factor >= 0.0 && weekend_factor <= 1.0)) fail("weekend_factor must lie in [0, 1]");
  if (!std::isfinite(skewness)) fail("skewness must be finite");
  if (!base_scale.empty()) {
    if (base_scale.size() != static_cast<std::size_t>(n_segments)) {
      fail("base_scale needs one entry per segment");
    }
    for (double b : base_scale) {
      if (!(b > 0.0) || !std::isfinite(b)) fail("base_scale entries must be positive");
    }
  }
  if (!is_bin_aligned(start)) fail("start must be 10-minute aligned");
}

std::string segment_name(int index, int n_segments) {
  int width = 3;
  for (int n = n_segments; n >= 1000; n /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return "S" + digits;
}

double diurnal_profile(Instant t, int segment, const CitySpec& spec) {
  const auto tod = t - start_of_day(t) + Seconds{300};
  const double hour = static_cast<double>(tod.count()) / 3600.0;
  const bool weekend = weekday_index(t) >= 5;
  return profile(hour, weekend, traits_for(segment, spec.seed), spec.weekend_factor);
}

TrafficMatrix generate_traffic(const CitySpec& spec) {
  spec.validate();
  const std::size_t days = static_cast<std::size_t>(spec.n_weeks) * 7;
  const std::size_t rows = days * 144;
  const auto cols = static_cast<std::size_t>(spec.n_segments);
  const std::vector<double> scales = base_scales(spec);

  // Shared city-wide daily factor.
  std::vector<double> daily(days, 1.0);
  {
    std::mt19937_64 rng(mix(spec.seed, 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& f : daily) f = std::exp(0.5 * spec.noise * normal(rng));
  }

  const SkewNormalParams log_noise{0.0, 1.0, spec.skewness};
  const SkewNormalMoments standard = skew_normal_moments(log_noise);

  TrafficMatrix m;
  m.start = spec.start;
  m.step = kBinStep;
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.mask = MaskMatrix::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), true);
  for (std::size_t s = 0; s < cols; ++s) {
    m.segments.push_back(segment_name(static_cast<int>(s), spec.n_segments));
    const SegmentTraits traits = traits_for(static_cast<int>(s), spec.seed);
    std::mt19937_64 rng(mix(spec.seed, 5000 + s));
    for (std::size_t r = 0; r < rows; ++r) {
      const Instant t = m.time_at(r);
      const auto tod = t - start_of_day(t) + Seconds{300};
      const double hour = static_cast<double>(tod.count()) / 3600.0;
      const bool weekend = weekday_index(t) >= 5;
      double mean = scales[s] * profile(hour, weekend, traits, spec.weekend_factor) * daily[r / 144];
      if (spec.noise > 0.0) {
        const double z = (sample_skew_normal(log_noise, rng) - standard.mean) / standard.std;
        mean *= std::exp(spec.noise * z);
      }
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
          std::max(0.0, std::round(mean));
    }
  }
  return m;
}

HourlySeries generate_pollution(const HourlySeries& traffic, double background, double coupling,
                                double noise, std::uint64_t seed) {
  if (!(coupling >= 0.0)) throw Error(ErrorKind::InvalidArgument, "coupling must be >= 0");
  if (!(noise >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise must be >= 0");
  HourlySeries out;
  out.start = traffic.start;
  out.step = traffic.step;
  out.values.reserve(traffic.size());
  std::mt19937_64 rng(mix(seed, 3));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double v : traffic.values) {
    double p = background + coupling * v;
    if (noise > 0.0) p += noise * normal(rng);
    out.values.push_back(std::max(0.0, p));
  }
  return out;
}

}  // namespace fluxwarn
