#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fluxwarn/alarm.hpp"
#include "fluxwarn/error.hpp"
#include "stat_oracles.hpp"

namespace fluxwarn {
namespace {

Instant at(const char* text) { return *parse_instant(text); }

AlarmThresholds thresholds(double p50, double p75) {
  AlarmThresholds t;
  t.segment_id = "S001";
  t.p50 = p50;
  t.p75 = p75;
  t.sample_count = 1;
  return t;
}

/// Values placed on consecutive daytime bins of 2018, starting Jan 1 06:00.
std::vector<TimedValue> daytime_series(const std::vector<double>& values) {
  std::vector<TimedValue> out;
  Instant t = at("2018-01-01T06:00Z");
  for (double v : values) {
    if (hour_of_day(t) >= kDaytimeEndHour) t = start_of_day(t) + std::chrono::days{1} + std::chrono::hours{6};
    out.push_back({t, v});
    t += kBinStep;
  }
  return out;
}

TEST(Thresholds, UniformOneToHundred) {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = 100 - i;
  const auto th = compute_thresholds("S001", daytime_series(v), at("2018-06-01T00:00Z"));
  EXPECT_DOUBLE_EQ(th.p50, 50.5);
  EXPECT_DOUBLE_EQ(th.p75, 75.25);
  EXPECT_EQ(th.sample_count, 100);
  EXPECT_EQ(th.window_start, at("2018-01-01T00:00Z"));
  EXPECT_EQ(th.window_end, at("2018-06-01T00:00Z"));
}

TEST(Thresholds, AllEqual) {
  const auto th = compute_thresholds("S001", daytime_series(std::vector<double>(30, 40.0)),
                                     at("2018-06-01T00:00Z"));
  EXPECT_EQ(th.p50, 40.0);
  EXPECT_EQ(th.p75, 40.0);
}

TEST(Thresholds, FiltersNightAndWindow) {
  std::vector<TimedValue> s{{at("2018-03-01T03:00Z"), 1000},  // night
                            {at("2018-03-01T22:00Z"), 1000},  // first excluded hour
                            {at("2017-12-31T12:00Z"), 1000},  // previous year
                            {at("2018-03-02T12:00Z"), 1000},  // at as_of, excluded
                            {at("2018-03-01T06:00Z"), 10},
                            {at("2018-03-01T21:50Z"), 20}};
  const auto th = compute_thresholds("S001", s, at("2018-03-02T12:00Z"));
  EXPECT_EQ(th.sample_count, 2);
  EXPECT_DOUBLE_EQ(th.p50, 15.0);
  const auto wide = compute_thresholds("S001", s, at("2018-03-02T12:00Z"), at("2017-01-01T00:00Z"));
  EXPECT_EQ(wide.sample_count, 3);
}

TEST(Thresholds, NightOnlyIsError) {
  std::vector<TimedValue> s{{at("2018-03-01T03:00Z"), 5}, {at("2018-03-02T03:00Z"), 6}};
  try {
    compute_thresholds("S001", s, at("2018-04-01T00:00Z"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoDaytimeData);
  }
}

TEST(Thresholds, MatchSortOracleWithTies) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> small(0, 12), len(1, 300);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(len(rng));
    for (auto& x : v) x = small(rng);
    const auto th = compute_thresholds("S001", daytime_series(v), at("2018-12-31T00:00Z"));
    EXPECT_EQ(th.p50, oracle::percentile_by_sort(v, 0.50));
    EXPECT_EQ(th.p75, oracle::percentile_by_sort(v, 0.75));
    EXPECT_LE(th.p50, th.p75);
  }
}

TEST(Thresholds, MatrixOverloadUsesObservedCells) {
  TrafficMatrix m;
  m.start = at("2018-01-01T06:00Z");
  m.segments = {"A", "B"};
  m.values.resize(4, 2);
  m.values << 1, 9, 2, 9, 3, 9, 4, 9;
  m.mask = MaskMatrix::Constant(4, 2, true);
  m.mask(3, 0) = false;
  const auto th = compute_thresholds(m, "A", at("2018-01-02T00:00Z"));
  EXPECT_EQ(th.sample_count, 3);
  EXPECT_DOUBLE_EQ(th.p50, 2.0);
  EXPECT_DOUBLE_EQ(th.p75, 2.5);
}

TEST(Classify, BoundariesGoToMedium) {
  const auto t = thresholds(100, 150);
  EXPECT_EQ(classify(80, t), AlarmLevel::Low);
  EXPECT_EQ(classify(100, t), AlarmLevel::Medium);
  EXPECT_EQ(classify(150, t), AlarmLevel::Medium);
  EXPECT_EQ(classify(150.0001, t), AlarmLevel::High);
  EXPECT_EQ(classify(200, t), AlarmLevel::High);
}

TEST(Classify, Monotone) {
  const auto t = thresholds(10, 12);
  AlarmLevel prev = AlarmLevel::Low;
  for (double f = 0; f < 20; f += 0.125) {
    const auto level = classify(f, t);
    EXPECT_GE(static_cast<int>(level), static_cast<int>(prev));
    prev = level;
  }
}

TEST(Advisory, NightWindow) {
  EXPECT_TRUE(is_advisory(at("2018-01-01T23:00Z")));
  EXPECT_TRUE(is_advisory(at("2018-01-01T04:50Z")));
  EXPECT_FALSE(is_advisory(at("2018-01-01T05:00Z")));
  EXPECT_FALSE(is_advisory(at("2018-01-01T22:50Z")));
}

TEST(Evaluate, PerfectAndInverted) {
  using L = AlarmLevel;
  const std::vector<L> x{L::Low, L::High, L::Medium, L::Low};
  const auto cm = evaluate(x, x);
  for (auto t : kAlarmLevels)
    for (auto p : kAlarmLevels)
      if (t != p) EXPECT_EQ(cm.at(t, p), 0);
  EXPECT_EQ(cm.recall(L::Low), 1.0);
  EXPECT_EQ(cm.accuracy(), 1.0);

  const std::vector<L> lows(5, L::Low), highs(5, L::High);
  const auto inv = evaluate(lows, highs);
  EXPECT_EQ(inv.at(L::Low, L::High), 5);
  EXPECT_EQ(inv.recall(L::Low), 0.0);
  EXPECT_FALSE(inv.recall(L::Medium).has_value());
}

TEST(Evaluate, HandTally) {
  using L = AlarmLevel;
  const std::vector<L> truth{L::Low, L::Low, L::Medium, L::High, L::High, L::Medium};
  const std::vector<L> pred{L::Low, L::Medium, L::Medium, L::High, L::Medium, L::Low};
  const auto cm = evaluate(truth, pred);
  const std::array<std::array<std::int64_t, 3>, 3> expected{{{1, 1, 0}, {1, 1, 0}, {0, 1, 1}}};
  EXPECT_EQ(cm.counts, expected);
  EXPECT_EQ(cm.truth_total(L::High), 2);
  EXPECT_EQ(cm.total(), 6);
  EXPECT_DOUBLE_EQ(*cm.recall(L::High), 0.5);
  EXPECT_DOUBLE_EQ(*cm.accuracy(), 0.5);
}

TEST(Evaluate, LengthMismatch) {
  const std::vector<AlarmLevel> a(2), b(3);
  try {
    evaluate(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(AlarmLevelText, RoundTrip) {
  for (auto l : kAlarmLevels) EXPECT_EQ(parse_alarm_level(to_string(l)), l);
  EXPECT_THROW(parse_alarm_level("low"), Error);
}

TEST(ThresholdsCsv, RoundTrip) {
  AlarmThresholds a = thresholds(12.5, 30.25);
  a.sample_count = 77;
  a.window_start = at("2018-01-01T00:00Z");
  a.window_end = at("2018-03-05T00:00Z");
  std::stringstream buf;
  write_thresholds_csv(buf, std::span<const AlarmThresholds>(&a, 1));
  EXPECT_EQ(buf.str(),
            "segment_id,p50,p75,sample_count,window_start,window_end\n"
            "S001,12.5,30.25,77,2018-01-01T00:00Z,2018-03-05T00:00Z\n");
  const auto back = read_thresholds_csv(buf);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].p75, 30.25);
  EXPECT_EQ(back[0].window_end, a.window_end);
}

TrafficMatrix ramp_matrix(int rows) {
  TrafficMatrix m;
  m.start = at("2018-01-01T00:00Z");
  m.segments = {"S001", "S002"};
  m.values.resize(rows, 2);
  for (int r = 0; r < rows; ++r) m.values.row(r) << r, 2 * r;
  m.mask = MaskMatrix::Constant(rows, 2, true);
  return m;
}

TEST(AlarmRows, ComparesThirdStepWithTruth) {
  const auto m = ramp_matrix(20);
  // A perfect forecaster for a linear ramp in the first column.
  Forecaster f = [](const Eigen::MatrixXd& w) {
    const double last = w(w.rows() - 1, 0);
    return Eigen::Vector3d(last + 1, last + 2, last + 3);
  };
  const auto th = thresholds(10, 15);
  const auto rows = alarm_rows(m, "S001", f, 6, 3, th, m.start, m.time_at(20));
  ASSERT_EQ(rows.size(), 20u - 8u);
  EXPECT_EQ(rows.front().time, m.time_at(8));
  for (const auto& r : rows) {
    EXPECT_EQ(r.true_flux, r.pred_flux);
    EXPECT_EQ(r.true_level, r.pred_level);
    EXPECT_EQ(r.true_level, classify(r.true_flux, th));
  }
  const auto tail = alarm_rows(m, "S001", f, 6, 3, th, m.time_at(15), m.time_at(18));
  EXPECT_EQ(tail.size(), 3u);
  auto other = th;
  other.segment_id = "S002";
  EXPECT_THROW(alarm_rows(m, "S001", f, 6, 3, other, m.start, m.time_at(20)), Error);
}

TEST(AlarmTable, RoundTrip) {
  std::vector<AlarmRow> rows{
      {at("2018-01-01T08:00Z"), "S001", 12, 14.5, AlarmLevel::Low, AlarmLevel::Medium, false},
      {at("2018-01-01T23:10Z"), "S002", 3, 0, AlarmLevel::High, AlarmLevel::Low, true}};
  std::stringstream buf;
  write_alarm_table(buf, rows);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')),
            "time,segment,true_flux,pred_flux,true_level,pred_level");
  const auto back = read_alarm_table(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].pred_flux, 14.5);
  EXPECT_EQ(back[1].true_level, AlarmLevel::High);
  EXPECT_TRUE(back[1].advisory);
}

}  // namespace
}  // namespace fluxwarn
