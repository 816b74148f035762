#include "fluxwarn/skew_normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

constexpr double kMaxSkewness = 0.99;

void require_scale(const SkewNormalParams& p) {
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) {
    throw Error(ErrorKind::InvalidScale, "scale must be positive, got " + std::to_string(p.scale));
  }
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

using Point = std::array<double, 3>;

/// Downhill simplex minimizer.
class NelderMead {
 public:
  template <class F>
  Point minimize(F&& f, const Point& start, const Point& step, int max_iter, double tol,
                 int& iterations) {
    std::array<Point, 4> simplex;
    std::array<double, 4> value;
    simplex[0] = start;
    for (int i = 0; i < 3; ++i) {
      simplex[i + 1] = start;
      simplex[i + 1][i] += step[i];
    }
    for (int i = 0; i < 4; ++i) value[i] = f(simplex[i]);

    while (true) {
      std::array<int, 4> order{0, 1, 2, 3};
      std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
      const int best = order[0], worst = order[3], second = order[2];

      double size = 0.0;
      for (int i = 1; i < 4; ++i)
        for (int d = 0; d < 3; ++d)
          size = std::max(size, std::abs(simplex[order[i]][d] - simplex[best][d]));
      const double spread = std::abs(value[worst] - value[best]);
      if (spread <= tol * (std::abs(value[best]) + tol) && size <= 1e-9) return simplex[best];
      if (iterations >= max_iter) {
        throw Error(ErrorKind::NonConvergence,
                    "simplex did not converge in " + std::to_string(iterations) + " iterations");
      }
      ++iterations;

      Point centroid{0.0, 0.0, 0.0};
      for (int i = 0; i < 4; ++i) {
        if (i == worst) continue;
        for (int d = 0; d < 3; ++d) centroid[d] += simplex[i][d] / 3.0;
      }
      auto along = [&](double t) {
        Point p;
        for (int d = 0; d < 3; ++d) p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
        return p;
      };

      const Point reflected = along(-1.0);
      const double fr = f(reflected);
      if (fr < value[best]) {
        const Point expanded = along(-2.0);
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[worst] = expanded;
          value[worst] = fe;
        } else {
          simplex[worst] = reflected;
          value[worst] = fr;
        }
        continue;
      }
      if (fr < value[second]) {
        simplex[worst] = reflected;
        value[worst] = fr;
        continue;
      }
      const bool outside = fr < value[worst];
      const Point contracted = along(outside ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < (outside ? fr : value[worst])) {
        simplex[worst] = contracted;
        value[worst] = fc;
        continue;
      }
      for (int i = 0; i < 4; ++i) {
        if (i == best) continue;
        for (int d = 0; d < 3; ++d) simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
        value[i] = f(simplex[i]);
      }
    }
  }
};

}  // namespace

double SkewNormalParams::delta() const { return shape / std::sqrt(1.0 + shape * shape); }

double skew_normal_pdf(double x, const SkewNormalParams& p) {
  require_scale(p);
  const double z = (x - p.location) / p.scale;
  return 2.0 / p.scale * normal_pdf(z) * normal_cdf(p.shape * z);
}

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(normal_cdf(z));
  // Asymptotic series of the Mills ratio.
  const double inv2 = 1.0 / (z * z);
  const double series = 1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2 * inv2 * inv2;
  return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double skew_normal_log_pdf(double x, const SkewNormalParams& p) {
  require_scale(p);
  const double z = (x - p.location) / p.scale;
  return std::log(2.0 / p.scale) - 0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) +
         log_normal_cdf(p.shape * z);
}

SkewNormalMoments skew_normal_moments(const SkewNormalParams& p) {
  require_scale(p);
  const double d = p.delta();
  const double two_over_pi = 2.0 / std::numbers::pi;
  return {p.location + p.scale * d * std::sqrt(two_over_pi),
          p.scale * std::sqrt(1.0 - two_over_pi * d * d)};
}

double sample_skew_normal(const SkewNormalParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double d = p.delta();
  const double u0 = normal(rng);
  const double u1 = normal(rng);
  return p.location + p.scale * (d * std::abs(u0) + std::sqrt(1.0 - d * d) * u1);
}

SkewNormalParams method_of_moments(std::span<const double> samples) {
  if (samples.size() < 3) throw Error(ErrorKind::DegenerateSample, "need at least 3 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0) || !std::isfinite(m2)) {
    throw Error(ErrorKind::DegenerateSample, "sample variance is zero");
  }
  const double sd = std::sqrt(m2);
  const double skew = std::clamp(m3 / (m2 * sd), -kMaxSkewness, kMaxSkewness);

  const double g23 = std::pow(std::abs(skew), 2.0 / 3.0);
  const double c = std::pow((4.0 - std::numbers::pi) / 2.0, 2.0 / 3.0);
  const double delta = std::copysign(std::sqrt(std::numbers::pi / 2.0 * g23 / (g23 + c)), skew);
  const double two_over_pi = 2.0 / std::numbers::pi;

  SkewNormalParams p;
  p.shape = delta / std::sqrt(1.0 - delta * delta);
  p.scale = sd / std::sqrt(1.0 - two_over_pi * delta * delta);
  p.location = mean - p.scale * delta * std::sqrt(two_over_pi);
  return p;
}

SkewNormalFit fit_skew_normal(std::span<const double> samples,
                              const SkewNormalFitOptions& options) {
  if (samples.size() < kMinFitSamples) {
    throw Error(ErrorKind::DegenerateSample, "need at least " + std::to_string(kMinFitSamples) +
                                                 " samples, got " +
                                                 std::to_string(samples.size()));
  }
  if (!std::all_of(samples.begin(), samples.end(), [](double x) { return std::isfinite(x); })) {
    throw Error(ErrorKind::DegenerateSample, "non-finite sample");
  }

  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0.0)) throw Error(ErrorKind::DegenerateSample, "sample variance is zero");
  const double sd = std::sqrt(var);

  std::vector<double> z(samples.size());
  std::transform(samples.begin(), samples.end(), z.begin(),
                 [&](double x) { return (x - mean) / sd; });
  const SkewNormalParams init = method_of_moments(z);

  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  auto negative_mean_ll = [&](const Point& q) {
    const double scale = std::exp(q[1]);
    if (!std::isfinite(scale) || scale <= 0.0) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (double x : z) {
      const double u = (x - q[0]) / scale;
      total += -0.5 * u * u + log_normal_cdf(q[2] * u);
    }
    return -(total / n + std::log(2.0) - q[1] - log_norm);
  };

  int iterations = 0;
  NelderMead solver;
  Point best = solver.minimize(negative_mean_ll, {init.location, std::log(init.scale), init.shape},
                               {0.1, 0.1, 0.5}, options.max_iterations, options.tolerance,
                               iterations);
  // Restart from the optimum to escape a prematurely collapsed simplex.
  best = solver.minimize(negative_mean_ll, best, {0.02, 0.02, 0.1}, options.max_iterations,
                         options.tolerance, iterations);

  SkewNormalFit fit;
  fit.params = {mean + sd * best[0], sd * std::exp(best[1]), best[2]};
  fit.log_likelihood = -n * negative_mean_ll(best) - n * std::log(sd);
  fit.iterations = iterations;
  return fit;
}

}  // namespace fluxwarn
