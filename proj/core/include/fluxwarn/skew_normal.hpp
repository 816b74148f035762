#pragma once

#include <cstddef>
#include <random>
#include <span>

namespace fluxwarn {

/// Location eta, scale omega > 0, shape alpha.
struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  /// delta = alpha / sqrt(1 + alpha^2)
  double delta() const;
};

struct SkewNormalMoments {
  double mean = 0.0;
  double std = 0.0;
};

/// (2/omega) phi(z) Phi(alpha z), z = (x - eta)/omega. Throws InvalidScale for omega <= 0.
double skew_normal_pdf(double x, const SkewNormalParams& params);
double skew_normal_log_pdf(double x, const SkewNormalParams& params);

/// mean = eta + omega delta sqrt(2/pi), std = omega sqrt(1 - 2 delta^2 / pi).
SkewNormalMoments skew_normal_moments(const SkewNormalParams& params);

/// log of the standard normal cdf, accurate far into the lower tail.
double log_normal_cdf(double z);

/// Draws via delta |u0| + sqrt(1 - delta^2) u1 with independent standard normals u0, u1.
double sample_skew_normal(const SkewNormalParams& params, std::mt19937_64& rng);

/// Inverts the sample mean, std and skewness (skewness clipped to the attainable range).
SkewNormalParams method_of_moments(std::span<const double> samples);

struct SkewNormalFitOptions {
  int max_iterations = 20000;
  double tolerance = 1e-12;
};

struct SkewNormalFit {
  SkewNormalParams params;
  double log_likelihood = 0.0;
  int iterations = 0;
};

inline constexpr std::size_t kMinFitSamples = 50;

/// Maximum likelihood by Nelder-Mead over (eta, log omega, alpha) on standardized
/// data, started from method_of_moments. Throws DegenerateSample for fewer than
/// kMinFitSamples points or zero variance, NonConvergence past max_iterations.
SkewNormalFit fit_skew_normal(std::span<const double> samples,
                              const SkewNormalFitOptions& options = {});

}  // namespace fluxwarn
