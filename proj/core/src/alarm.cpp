#include "fluxwarn/alarm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

std::string real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::istringstream s(line);
  for (std::string f; std::getline(s, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(line, "bad number '" + text + "'");
  }
  return v;
}

Instant parse_time(const std::string& text, std::size_t line) {
  const auto t = parse_instant(text);
  if (!t) throw ParseError(line, "bad timestamp '" + text + "'");
  return *t;
}

}  // namespace

std::string_view to_string(AlarmLevel level) {
  switch (level) {
    case AlarmLevel::Low: return "Low";
    case AlarmLevel::Medium: return "Medium";
    case AlarmLevel::High: return "High";
  }
  return "?";
}

AlarmLevel parse_alarm_level(std::string_view text) {
  for (AlarmLevel l : kAlarmLevels) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown alarm level '" + std::string(text) + "'");
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "percentile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

AlarmThresholds compute_thresholds(const std::string& segment_id,
                                   std::span<const TimedValue> series, Instant as_of,
                                   std::optional<Instant> window_start) {
  const Instant begin = window_start.value_or(start_of_year(as_of));
  std::vector<double> sample;
  for (const auto& tv : series) {
    if (tv.time < begin || tv.time >= as_of) continue;
    const int hour = hour_of_day(tv.time);
    if (hour < kDaytimeFirstHour || hour >= kDaytimeEndHour) continue;
    sample.push_back(tv.value);
  }
  if (sample.empty()) {
    throw Error(ErrorKind::NoDaytimeData, "segment '" + segment_id + "' has no daytime data in [" +
                                              format_instant(begin) + ", " +
                                              format_instant(as_of) + ")");
  }
  std::sort(sample.begin(), sample.end());
  AlarmThresholds t;
  t.segment_id = segment_id;
  t.p50 = percentile_sorted(sample, 0.50);
  t.p75 = percentile_sorted(sample, 0.75);
  t.sample_count = static_cast<std::int64_t>(sample.size());
  t.window_start = begin;
  t.window_end = as_of;
  return t;
}

AlarmThresholds compute_thresholds(const TrafficMatrix& matrix, const std::string& segment_id,
                                   Instant as_of, std::optional<Instant> window_start) {
  const auto col = static_cast<Eigen::Index>(matrix.require_segment(segment_id));
  std::vector<TimedValue> series;
  series.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    if (matrix.mask(ri, col)) series.push_back({matrix.time_at(r), matrix.values(ri, col)});
  }
  return compute_thresholds(segment_id, series, as_of, window_start);
}

AlarmLevel classify(double flux, const AlarmThresholds& t) {
  if (flux < t.p50) return AlarmLevel::Low;
  if (flux > t.p75) return AlarmLevel::High;
  return AlarmLevel::Medium;
}

bool is_advisory(Instant t) {
  const int hour = hour_of_day(t);
  return hour >= 23 || hour < 5;
}

void ConfusionMatrix3::add(AlarmLevel truth, AlarmLevel predicted) {
  ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
}

std::int64_t ConfusionMatrix3::at(AlarmLevel truth, AlarmLevel predicted) const {
  return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
}

std::int64_t ConfusionMatrix3::truth_total(AlarmLevel truth) const {
  const auto& row = counts[static_cast<std::size_t>(truth)];
  return row[0] + row[1] + row[2];
}

std::int64_t ConfusionMatrix3::total() const {
  return truth_total(AlarmLevel::Low) + truth_total(AlarmLevel::Medium) +
         truth_total(AlarmLevel::High);
}

std::optional<double> ConfusionMatrix3::recall(AlarmLevel truth) const {
  const auto n = truth_total(truth);
  if (n == 0) return std::nullopt;
  return static_cast<double>(at(truth, truth)) / static_cast<double>(n);
}

std::optional<double> ConfusionMatrix3::accuracy() const {
  const auto n = total();
  if (n == 0) return std::nullopt;
  const auto diag = counts[0][0] + counts[1][1] + counts[2][2];
  return static_cast<double>(diag) / static_cast<double>(n);
}

ConfusionMatrix3 evaluate(std::span<const AlarmLevel> truth, std::span<const AlarmLevel> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(truth.size()) + " true levels vs " +
                                               std::to_string(predicted.size()) + " predicted");
  }
  ConfusionMatrix3 m;
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

void write_thresholds_csv(std::ostream& out, std::span<const AlarmThresholds> thresholds) {
  out << "segment_id,p50,p75,sample_count,window_start,window_end\n";
  for (const auto& t : thresholds) {
    out << t.segment_id << ',' << real(t.p50) << ',' << real(t.p75) << ',' << t.sample_count
        << ',' << format_instant(t.window_start) << ',' << format_instant(t.window_end) << '\n';
  }
}

std::vector<AlarmThresholds> read_thresholds_csv(std::istream& in) {
  std::vector<AlarmThresholds> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("segment_id", 0) == 0) continue;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw ParseError(line_no, "expected 6 fields");
    AlarmThresholds t;
    t.segment_id = f[0];
    t.p50 = parse_real(f[1], line_no);
    t.p75 = parse_real(f[2], line_no);
    t.sample_count = static_cast<std::int64_t>(parse_real(f[3], line_no));
    t.window_start = parse_time(f[4], line_no);
    t.window_end = parse_time(f[5], line_no);
    if (!(t.p50 <= t.p75) || t.sample_count <= 0) {
      throw ParseError(line_no, "thresholds violate p50 <= p75 or sample_count > 0");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<AlarmRow> alarm_rows(const TrafficMatrix& imputed, const std::string& segment,
                                 const Forecaster& forecaster, int lookback, int horizon,
                                 const AlarmThresholds& thresholds, Instant from, Instant to) {
  if (lookback <= 0 || horizon <= 0) {
    throw Error(ErrorKind::InvalidArgument, "lookback and horizon must be positive");
  }
  if (!imputed.fully_observed()) {
    throw Error(ErrorKind::InvalidArgument, "alarm evaluation needs an imputed matrix");
  }
  if (thresholds.segment_id != segment) {
    throw Error(ErrorKind::SchemaMismatch,
                "thresholds for '" + thresholds.segment_id + "' used on '" + segment + "'");
  }
  const auto col = static_cast<Eigen::Index>(imputed.require_segment(segment));
  std::vector<AlarmRow> rows;
  const auto first_row = static_cast<std::size_t>(lookback + horizon - 1);
  for (std::size_t r = first_row; r < imputed.rows(); ++r) {
    const Instant t = imputed.time_at(r);
    if (t < from || t >= to) continue;
    const auto input_start = static_cast<Eigen::Index>(r - first_row);
    const Eigen::MatrixXd recent = imputed.values.middleRows(input_start, lookback);
    const Eigen::VectorXd forecast = forecaster(recent);
    if (forecast.size() != horizon) {
      throw Error(ErrorKind::DimensionMismatch, "forecaster returned " +
                                                    std::to_string(forecast.size()) + " steps");
    }
    AlarmRow row;
    row.time = t;
    row.segment = segment;
    row.true_flux = imputed.values(static_cast<Eigen::Index>(r), col);
    row.pred_flux = forecast(horizon - 1);
    row.true_level = classify(row.true_flux, thresholds);
    row.pred_level = classify(row.pred_flux, thresholds);
    row.advisory = is_advisory(t);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_alarm_table(std::ostream& out, std::span<const AlarmRow> rows) {
  out << "time,segment,true_flux,pred_flux,true_level,pred_level\n";
  for (const auto& r : rows) {
    out << format_instant(r.time) << ',' << r.segment << ',' << real(r.true_flux) << ','
        << real(r.pred_flux) << ',' << to_string(r.true_level) << ',' << to_string(r.pred_level)
        << '\n';
  }
}

std::vector<AlarmRow> read_alarm_table(std::istream& in) {
  std::vector<AlarmRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("time,", 0) == 0) continue;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw ParseError(line_no, "expected 6 fields");
    AlarmRow r;
    r.time = parse_time(f[0], line_no);
    r.segment = f[1];
    r.true_flux = parse_real(f[2], line_no);
    r.pred_flux = parse_real(f[3], line_no);
    try {
      r.true_level = parse_alarm_level(f[4]);
      r.pred_level = parse_alarm_level(f[5]);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    r.advisory = is_advisory(r.time);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fluxwarn
