// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "fluxwarn/alarm.hpp"
#include "fluxwarn/correlation.hpp"
#include "fluxwarn/forecast.hpp"
#include "fluxwarn/lstm.hpp"
#include "fluxwarn/skew_normal.hpp"
#include "fluxwarn/synthetic_city.hpp"
#include "naive_lstm.hpp"
#include "stat_oracles.hpp"

namespace fs = std::filesystem;
using namespace fluxwarn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_rel = 0.0, worst_abs = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::random_params(3, 4, 3, rng);
    const auto r = grad_check(p, oracle::random_matrix(4, 3, rng), oracle::random_matrix(3, 1, rng));
    worst_rel = std::max(worst_rel, r.max_relative_error);
    worst_abs = std::max(worst_abs, r.max_absolute_error);
  }
  const double elapsed = seconds_since(t0);
  return {worst_rel < 1e-4 && elapsed < 30.0,
          fmt("max relative error %.2e (< 1e-4), max absolute error on near-zero entries %.2e, "
              "%.2f s (< 30 s)",
              worst_rel, worst_abs, elapsed)};
}

// 2 -------------------------------------------------------------------------
Outcome forward_oracle() {
  std::mt19937_64 rng(2002);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const long S = 1 + i % 6, H = 2 + i % 9, K = 3, L = 1 + i % 10;
    const auto p = oracle::random_params(S, H, K, rng, 0.7);
    const auto w = oracle::random_matrix(L, S, rng, 3.0);
    const auto y = forward(w, p).prediction;
    const auto ref = oracle::naive_forward(oracle::rows_of(w), p);
    for (long k = 0; k < K; ++k) worst = std::max(worst, std::abs(y(k) - ref[k]));
  }
  return {worst <= 1e-12, fmt("max |forward - scalar reference| %.2e (<= 1e-12) over 20 instances", worst)};
}

// 3 -------------------------------------------------------------------------
Outcome pearson_oracle() {
  std::mt19937_64 rng(3003);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 1000);
  double worst = 0.0, worst_affine = 0.0;
  bool symmetric = true, bounded = true;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(len(rng)), y(x.size()), ax(x.size()), by(x.size());
    const double coupling = z(rng);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = 40.0 * z(rng) + 100.0;
      y[k] = coupling * x[k] + 25.0 * z(rng);
      ax[k] = 2.5 * x[k] + 7.0;
      by[k] = 0.01 * y[k] - 3.0;
    }
    const double r = pearson(x, y);
    worst = std::max(worst, std::abs(r - oracle::pearson_direct(x, y)));
    worst_affine = std::max({worst_affine, std::abs(pearson(ax, y) - r), std::abs(pearson(x, by) - r)});
    symmetric = symmetric && pearson(y, x) == r;
    bounded = bounded && std::abs(r) <= 1.0 + 1e-12;
  }
  return {worst <= 1e-12 && worst_affine <= 1e-12 && symmetric && bounded,
          fmt("max |pearson - direct| %.2e (<= 1e-12), affine drift %.2e (<= 1e-12), "
              "symmetric %s, bounded %s",
              worst, worst_affine, symmetric ? "yes" : "no", bounded ? "yes" : "no")};
}

// 4 -------------------------------------------------------------------------
Outcome percentile_oracle() {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> len(1, 2000), value(0, 25), minute(0, 1);
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<TimedValue> series;
    std::vector<double> daytime;
    Instant t = *parse_instant("2018-01-01T00:00Z");
    const int n = len(rng);
    while (static_cast<int>(daytime.size()) < n) {
      const double v = value(rng);  // small integer range forces ties
      series.push_back({t, v});
      const int h = hour_of_day(t);
      if (h >= 6 && h < 22) daytime.push_back(v);
      t += kBinStep;
    }
    const auto th = compute_thresholds("S001", series, t);
    if (th.p50 == oracle::percentile_by_sort(daytime, 0.50) &&
        th.p75 == oracle::percentile_by_sort(daytime, 0.75) &&
        th.sample_count == static_cast<std::int64_t>(daytime.size())) {
      ++exact;
    }
  }
  return {exact == 100, fmt("%d/100 series match the sort-and-interpolate oracle exactly", exact)};
}

// 5 -------------------------------------------------------------------------
Outcome skew_normal_checks() {
  const double shapes[] = {-5.0, -1.0, 0.0, 1.0, 5.0};
  double worst_mass = 0.0, worst_mean = 0.0, worst_std = 0.0;
  for (double a : shapes) {
    const SkewNormalParams p{0.0, 1.0, a};
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return skew_normal_pdf(x, p); }, -12.0, 12.0, 15, 1e-12);
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));

    const auto draws = oracle::skew_normal_draws(0.0, 1.0, a, 1'000'000, 5005 + static_cast<int>(a));
    double mean = 0.0;
    for (double x : draws) mean += x;
    mean /= static_cast<double>(draws.size());
    double var = 0.0;
    for (double x : draws) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(draws.size()));
    const auto m = skew_normal_moments(p);
    // At alpha = 0 the mean is 0; its error is taken relative to the spread.
    worst_mean = std::max(worst_mean, std::abs(mean - m.mean) / std::max(std::abs(m.mean), m.std));
    worst_std = std::max(worst_std, std::abs(sd - m.std) / m.std);
  }
  const auto sample = oracle::skew_normal_draws(100.0, 30.0, 4.0, 100'000, 5050);
  const auto fit = fit_skew_normal(sample).params;
  const double e_loc = std::abs(fit.location - 100.0) / 100.0;
  const double e_scale = std::abs(fit.scale - 30.0) / 30.0;
  const double e_shape = std::abs(fit.shape - 4.0) / 4.0;
  const bool pass = worst_mass <= 1e-6 && worst_mean <= 0.005 && worst_std <= 0.005 &&
                    e_loc <= 0.05 && e_scale <= 0.05 && e_shape <= 0.15;
  return {pass, fmt("|mass-1| %.1e (<= 1e-6); moments rel err mean %.2e std %.2e (<= 0.5%%); "
                    "fit (%.2f, %.2f, %.3f) rel err %.3f/%.3f (<= 5%%) shape %.3f (<= 15%%)",
                    worst_mass, worst_mean, worst_std, fit.location, fit.scale, fit.shape, e_loc,
                    e_scale, e_shape)};
}

// 6 and 7 share one set of trained models -------------------------------------
constexpr long kBinsPerWeek = 7 * 144;
const std::vector<std::string> kEvalSegments = {"S001", "S005", "S009", "S013", "S017", "S021"};

struct HoldoutRun {
  std::vector<double> relative_error;  // per evaluated segment
  ConfusionMatrix3 daytime;            // rows outside the advisory night window
  ConfusionMatrix3 all_rows;
  int max_epochs = 0;
  double slowest_model_seconds = 0.0;
};

TrainConfig desk_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.epochs = 25;
  c.batch_size = 32;
  c.validation_split = 0.10;
  c.hidden_size = 64;
  c.seed = 0;
  return c;
}

const HoldoutRun& holdout_run() {
  static const HoldoutRun run = [] {
    HoldoutRun out;
    const CitySpec spec;  // 24 segments x 10 weeks, seed 7
    const TrafficMatrix city = impute(generate_traffic(spec));
    const TrafficMatrix training = slice_rows(city, 0, 8 * kBinsPerWeek);
    const Instant final_week = city.time_at(9 * kBinsPerWeek);
    const Instant end = city.time_at(city.rows());
    const TrainConfig config = desk_config();
    out.max_epochs = config.epochs;
    for (std::size_t k = 0; k < kEvalSegments.size(); ++k) {
      const std::string& segment = kEvalSegments[k];
      const auto t0 = Clock::now();
      TrainConfig c = config;
      c.seed = config.seed + k;
      const ForecastModel model = train(make_windows(training, segment, 6, 3), c);
      const auto thresholds = compute_thresholds(city, segment, final_week);
      const auto rows = alarm_rows(
          city, segment, [&](const Eigen::MatrixXd& w) { return predict(model, w); }, 6, 3,
          thresholds, final_week, end);
      out.slowest_model_seconds = std::max(out.slowest_model_seconds, seconds_since(t0));
      double abs_err = 0.0, truth = 0.0;
      for (const auto& r : rows) {
        abs_err += std::abs(r.pred_flux - r.true_flux);
        truth += std::abs(r.true_flux);
        out.all_rows.add(r.true_level, r.pred_level);
        if (!r.advisory) out.daytime.add(r.true_level, r.pred_level);
      }
      out.relative_error.push_back(abs_err / truth);
    }
    return out;
  }();
  return run;
}

Outcome forecast_quality() {
  const auto& run = holdout_run();
  const double worst = *std::max_element(run.relative_error.begin(), run.relative_error.end());
  double mean = 0.0;
  for (double e : run.relative_error) mean += e;
  mean /= static_cast<double>(run.relative_error.size());
  const bool pass = worst <= 0.20 && run.max_epochs <= 2000 && run.slowest_model_seconds < 600.0;
  return {pass, fmt("final-week 30-min relative error over %zu segments: mean %.3f, worst %.3f "
                    "(<= 0.20); %d epochs (<= 2000); slowest model %.1f s (< 600 s)",
                    run.relative_error.size(), mean, worst, run.max_epochs,
                    run.slowest_model_seconds)};
}

Outcome alarm_quality() {
  const auto& run = holdout_run();
  const auto& cm = run.daytime;
  const double low = cm.recall(AlarmLevel::Low).value_or(0.0);
  const double high = cm.recall(AlarmLevel::High).value_or(0.0);
  const double low_as_high = static_cast<double>(cm.at(AlarmLevel::Low, AlarmLevel::High)) /
                             static_cast<double>(std::max<std::int64_t>(1, cm.truth_total(AlarmLevel::Low)));
  const double high_as_low = static_cast<double>(cm.at(AlarmLevel::High, AlarmLevel::Low)) /
                             static_cast<double>(std::max<std::int64_t>(1, cm.truth_total(AlarmLevel::High)));
  const bool pass = low >= 0.85 && high >= 0.60 && low_as_high <= 0.05 && high_as_low <= 0.05;
  return {pass, fmt("daytime rows (%lld): Low recall %.3f (>= 0.85), High recall %.3f (>= 0.60), "
                    "Low->High %.3f, High->Low %.3f (<= 0.05); all rows: Low %.3f, High %.3f",
                    static_cast<long long>(cm.total()), low, high, low_as_high, high_as_low,
                    run.all_rows.recall(AlarmLevel::Low).value_or(0.0),
                    run.all_rows.recall(AlarmLevel::High).value_or(0.0))};
}

// 8 -------------------------------------------------------------------------
Outcome prediction_latency() {
  const long S = 1472, H = 64;
  ForecastModel model;
  model.params = LstmParams::initialize(S, H, 3, 8008);
  model.norm.mean = Eigen::VectorXd::Constant(S, 50.0);
  model.norm.std = Eigen::VectorXd::Constant(S, 20.0);
  model.lookback = 6;
  model.horizon = 3;
  model.target_column = 0;
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd recent = (oracle::random_matrix(6, S, rng, 40.0).array() + 50.0).matrix();
  for (int i = 0; i < 20; ++i) predict(model, recent);  // warm-up
  std::vector<double> ms(1000);
  double sink = 0.0;
  for (auto& m : ms) {
    const auto t0 = Clock::now();
    sink += predict(model, recent)(2);
    m = 1e3 * seconds_since(t0);
  }
  std::nth_element(ms.begin(), ms.begin() + 500, ms.end());
  const double median = ms[500];
  return {median < 10.0 && std::isfinite(sink),
          fmt("median predict latency %.3f ms (< 10 ms) at S=1472, H=64 over 1000 calls", median)};
}

// 9 -------------------------------------------------------------------------
Outcome lag_scan_behavior() {
  const CitySpec spec;
  const TrafficMatrix city = impute(generate_traffic(spec));
  // Four weeks, a month of hourly samples.
  const HourlySeries traffic = rebin_to_hourly(slice_rows(city, 0, 4 * kBinsPerWeek), "S001");
  const HourlySeries pollution = generate_pollution(traffic, 20.0, 0.5, 5.0, 9009);
  const auto scan = lag_scan(traffic, pollution, 24);
  const double r0 = scan.rho_at(0);
  const double dm = std::abs(scan.rho_at(-24) - r0);
  const double dp = std::abs(scan.rho_at(24) - r0);
  return {scan.best_lag == 0 && dm <= 0.1 && dp <= 0.1,
          fmt("best_lag %d (= 0); rho(0) %.4f, |rho(-24)-rho(0)| %.4f, |rho(24)-rho(0)| %.4f (<= 0.1)",
              scan.best_lag, r0, dm, dp)};
}

// 10 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void cli_or_throw(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  if (cli::run(args, out, err) != 0) throw std::runtime_error("fluxwarn " + args[0] + ": " + err.str());
}

void pipeline(const fs::path& dir) {
  const std::string d = dir.string();
  cli_or_throw({"generate", "--segments", "6", "--weeks", "3", "--seed", "7", "--out", d + "/data"});
  cli_or_throw({"train", "--data", d + "/data/traffic.csv", "--target", "S001", "--target", "S004",
                "--epochs", "3", "--hidden", "16", "--lr", "1e-3", "--seed", "11", "--until",
                "2018-01-15T00:00Z", "--parallel-targets", "2", "--out", d + "/models"});
  cli_or_throw({"thresholds", "--data", d + "/data/traffic.csv", "--as-of", "2018-01-15T00:00Z",
                "--out", d + "/thresholds.csv"});
  cli_or_throw({"alarm", "--model", d + "/models/S001.fluxmodel", "--model",
                d + "/models/S004.fluxmodel", "--data", d + "/data/traffic.csv", "--thresholds",
                d + "/thresholds.csv", "--from", "2018-01-15T00:00Z", "--out", d + "/levels.csv"});
  cli_or_throw({"evaluate", "--table", d + "/levels.csv", "--out", d + "/confusion.json"});
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / "fluxwarn_acceptance_e2e";
  fs::remove_all(root);
  pipeline(root / "run1");
  pipeline(root / "run2");
  int compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "run1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "run1");
    if (rel.filename().string().ends_with(".manifest.json")) continue;  // carries wall time
    ++compared;
    if (slurp(entry.path()) != slurp(root / "run2" / rel)) ++differing;
  }
  fs::remove_all(root);
  return {compared >= 9 && differing == 0,
          fmt("%d data files compared across two runs, %d differ (= 0)", compared, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"forward-pass oracle equivalence", forward_oracle},
      {"Pearson oracle", pearson_oracle},
      {"percentile oracle", percentile_oracle},
      {"skew-normal", skew_normal_checks},
      {"forecast quality", forecast_quality},
      {"alarm quality", alarm_quality},
      {"prediction latency", prediction_latency},
      {"lag-scan behavior", lag_scan_behavior},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": "
              << o.detail << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  }
  std::cout << (criteria.size() - failures) << '/' << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
