#include "fluxwarn/correlation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

std::string real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

HourlySeries rebin_to_hourly(const TrafficMatrix& imputed, const std::string& segment) {
  if (imputed.step != kBinStep) {
    throw Error(ErrorKind::InvalidArgument, "rebinning needs a 600 s matrix step");
  }
  if (!is_hour_aligned(imputed.start)) {
    throw Error(ErrorKind::MisalignedStart,
                "matrix starts at " + format_instant(imputed.start) + ", not on the hour");
  }
  const auto col = static_cast<Eigen::Index>(imputed.require_segment(segment));
  if (!imputed.mask.col(col).all()) {
    throw Error(ErrorKind::InvalidArgument, "segment '" + segment + "' has unobserved bins");
  }
  constexpr Eigen::Index kBinsPerHour = 6;
  HourlySeries out;
  out.start = imputed.start;
  const Eigen::Index hours = imputed.values.rows() / kBinsPerHour;
  out.values.reserve(static_cast<std::size_t>(hours));
  for (Eigen::Index h = 0; h < hours; ++h) {
    out.values.push_back(imputed.values.col(col).segment(h * kBinsPerHour, kBinsPerHour).sum());
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " points");
  }
  if (x.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::ConstantSeries, "a series is constant");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

double LagScanResult::rho_at(int lag) const {
  const auto it = std::find(lags.begin(), lags.end(), lag);
  if (it == lags.end()) throw Error(ErrorKind::InvalidArgument, "lag outside scanned range");
  return rho[static_cast<std::size_t>(it - lags.begin())];
}

LagScanResult lag_scan(const HourlySeries& traffic, const HourlySeries& pollution, int max_lag) {
  if (max_lag < 0) throw Error(ErrorKind::InvalidArgument, "max_lag must be non-negative");
  if (traffic.step != pollution.step) {
    throw Error(ErrorKind::InvalidArgument, "series steps differ");
  }
  const auto step = traffic.step.count();
  const auto offset_seconds = (pollution.start - traffic.start).count();
  if (offset_seconds % step != 0) {
    throw Error(ErrorKind::MisalignedStart, "series starts are not a whole number of steps apart");
  }
  // pollution index = traffic index + k - offset
  const long offset = static_cast<long>(offset_seconds / step);
  const long nt = static_cast<long>(traffic.size());
  const long np = static_cast<long>(pollution.size());

  LagScanResult result;
  for (int k = -max_lag; k <= max_lag; ++k) {
    const long shift = k - offset;
    const long first = std::max(0L, -shift);
    const long last = std::min(nt, np - shift);
    const long overlap = last - first;
    if (overlap < static_cast<long>(kMinLagOverlap)) {
      throw Error(ErrorKind::InsufficientOverlap,
                  "lag " + std::to_string(k) + " leaves " + std::to_string(std::max(overlap, 0L)) +
                      " overlapping hours");
    }
    const std::span<const double> x(traffic.values.data() + first, static_cast<std::size_t>(overlap));
    const std::span<const double> y(pollution.values.data() + first + shift,
                                    static_cast<std::size_t>(overlap));
    result.lags.push_back(k);
    result.rho.push_back(pearson(x, y));
  }

  std::vector<std::size_t> order(result.lags.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int la = result.lags[a], lb = result.lags[b];
    if (std::abs(la) != std::abs(lb)) return std::abs(la) < std::abs(lb);
    return la < lb;
  });
  std::size_t best = order.front();
  for (std::size_t i : order) {
    if (result.rho[i] > result.rho[best]) best = i;
  }
  result.best_lag = result.lags[best];
  return result;
}

std::vector<DailyCorrelation> daily_correlation(const HourlySeries& traffic,
                                                const HourlySeries& pollution) {
  if (traffic.step != kHourStep || pollution.step != kHourStep) {
    throw Error(ErrorKind::InvalidArgument, "daily correlation needs hourly series");
  }
  if (traffic.start != pollution.start) {
    throw Error(ErrorKind::MisalignedStart, "series start at different instants");
  }
  if (traffic.size() != pollution.size()) {
    throw Error(ErrorKind::LengthMismatch, "series cover different spans");
  }
  if (start_of_day(traffic.start) != traffic.start || traffic.size() % 24 != 0 ||
      traffic.size() == 0) {
    throw Error(ErrorKind::PartialDay, "series must cover whole days from midnight");
  }
  std::vector<DailyCorrelation> out;
  for (std::size_t d = 0; d < traffic.size() / 24; ++d) {
    const std::span<const double> x(traffic.values.data() + d * 24, 24);
    const std::span<const double> y(pollution.values.data() + d * 24, 24);
    DailyCorrelation day{traffic.time_at(d * 24), std::nullopt};
    try {
      day.rho = pearson(x, y);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ConstantSeries) throw;
    }
    out.push_back(day);
  }
  return out;
}

void write_lag_scan_csv(std::ostream& out, const LagScanResult& scan) {
  out << "lag,rho\n";
  for (std::size_t i = 0; i < scan.lags.size(); ++i) {
    out << scan.lags[i] << ',' << real(scan.rho[i]) << '\n';
  }
}

void write_daily_csv(std::ostream& out, std::span<const DailyCorrelation> days) {
  out << "date,rho\n";
  for (const auto& d : days) {
    out << format_date(d.day) << ',' << (d.rho ? real(*d.rho) : std::string("nan")) << '\n';
  }
}

void write_hourly_csv(std::ostream& out, const HourlySeries& series) {
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_instant(series.time_at(i)) << ',' << real(series.values[i]) << '\n';
  }
}

HourlySeries read_hourly_csv(std::istream& in) {
  HourlySeries s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("timestamp", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(line_no, "expected 2 fields");
    }
    const auto t = parse_instant(std::string_view(line).substr(0, comma));
    if (!t) throw ParseError(line_no, "bad timestamp");
    const std::string value_text = line.substr(comma + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), v);
    if (value_text.empty() || ec != std::errc{} || ptr != value_text.data() + value_text.size() ||
        !std::isfinite(v)) {
      throw ParseError(line_no, "bad value '" + value_text + "'");
    }
    if (s.values.empty()) {
      if (!is_hour_aligned(*t)) throw ParseError(line_no, "series must start on the hour");
      s.start = *t;
    } else if (*t != s.time_at(s.values.size())) {
      throw ParseError(line_no, "hourly rows must be contiguous");
    }
    s.values.push_back(v);
  }
  if (s.values.empty()) throw Error(ErrorKind::EmptyInput, "no hourly rows");
  return s;
}

}  // namespace fluxwarn
