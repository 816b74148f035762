#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "fluxwarn/alarm.hpp"
#include "fluxwarn/correlation.hpp"
#include "fluxwarn/error.hpp"
#include "fluxwarn/matrix_io.hpp"
#include "json.hpp"
#include "output_set.hpp"

#ifndef FLUXWARN_VERSION
#define FLUXWARN_VERSION "dev"
#endif

namespace fluxwarn::cli {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

json opt_instant(const std::optional<Instant>& t) {
  return t ? json(format_instant(*t)) : json(nullptr);
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"validation_split", c.validation_split},
          {"hidden_size", c.hidden_size},     {"seed", c.seed}};
}

/// Stages the manifest last so it lists every other output.
void finish(OutputSet& outputs, const fs::path& manifest_path, const std::string& command,
            json config, std::vector<fs::path> inputs, std::uint64_t seed,
            Clock::time_point started) {
  json manifest;
  manifest["tool"] = "fluxwarn";
  manifest["version"] = FLUXWARN_VERSION;
  manifest["command"] = command;
  manifest["config"] = std::move(config);
  manifest["seed"] = seed;
  json in = json::array();
  for (const auto& p : inputs) in.push_back(p.string());
  manifest["inputs"] = std::move(in);
  json out = json::array();
  for (const auto& p : outputs.final_paths()) out.push_back(p.string());
  manifest["outputs"] = std::move(out);
  manifest["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - started).count();

  const fs::path staged = outputs.stage(manifest_path);
  auto f = open_out(staged);
  f << manifest.dump(2) << '\n';
  close_checked(f, staged);
  outputs.commit();
}

fs::path manifest_beside(const fs::path& file, const std::string& command) {
  return file.parent_path() / (command + ".manifest.json");
}

/// Rows with time in [from, to).
TrafficMatrix restrict_rows(const TrafficMatrix& m, std::optional<Instant> from,
                            std::optional<Instant> to) {
  std::size_t first = 0, last = m.rows();
  while (first < last && from && m.time_at(first) < *from) ++first;
  while (last > first && to && m.time_at(last - 1) >= *to) --last;
  if (first == last) throw Error(ErrorKind::EmptyDataset, "no data in the requested time range");
  return slice_rows(m, first, last - first);
}

HourlySeries restrict_hours(const HourlySeries& s, std::optional<Instant> from,
                            std::optional<Instant> to) {
  HourlySeries out;
  out.step = s.step;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Instant t = s.time_at(i);
    if ((from && t < *from) || (to && t >= *to)) continue;
    if (out.values.empty()) out.start = t;
    out.values.push_back(s.values[i]);
  }
  if (out.values.empty()) throw Error(ErrorKind::EmptyDataset, "no hourly data in range");
  return out;
}

}  // namespace

unsigned effective_threads(unsigned requested) {
  unsigned n = std::max(1u, requested);
  if (const char* env = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

void cmd_generate(const GenerateOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  const TrafficMatrix traffic = generate_traffic(opts.city);
  OutputSet outputs;

  const fs::path traffic_path = opts.out_dir / "traffic.csv";
  {
    const auto staged = outputs.stage(traffic_path);
    auto f = open_out(staged);
    write_records_csv(f, traffic, true);
    close_checked(f, staged);
  }
  if (opts.write_matrix) {
    const auto staged = outputs.stage(opts.out_dir / "traffic.fluxmatrix");
    auto f = open_out(staged);
    write_fluxmatrix(f, traffic);
    close_checked(f, staged);
  }
  std::string pollution_segment;
  if (opts.pollution) {
    pollution_segment = opts.pollution_segment.empty() ? traffic.segments.front()
                                                       : opts.pollution_segment;
    const HourlySeries hourly = rebin_to_hourly(traffic, pollution_segment);
    const HourlySeries pollution = generate_pollution(hourly, opts.background, opts.coupling,
                                                      opts.pollution_noise, opts.city.seed);
    const auto staged = outputs.stage(opts.out_dir / "pollution.csv");
    auto f = open_out(staged);
    write_hourly_csv(f, pollution);
    close_checked(f, staged);
  }

  const auto& c = opts.city;
  json config = {{"segments", c.n_segments},
                 {"weeks", c.n_weeks},
                 {"noise", c.noise},
                 {"weekend_factor", c.weekend_factor},
                 {"skewness", c.skewness},
                 {"start", format_instant(c.start)},
                 {"pollution", opts.pollution},
                 {"pollution_segment", pollution_segment},
                 {"background", opts.background},
                 {"coupling", opts.coupling},
                 {"pollution_noise", opts.pollution_noise}};
  finish(outputs, opts.out_dir / "generate.manifest.json", "generate", std::move(config), {},
         c.seed, started);
  log << "generated " << traffic.rows() << " bins x " << traffic.cols() << " segments into "
      << opts.out_dir.string() << '\n';
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  opts.config.validate();
  const TrafficMatrix data =
      impute(restrict_rows(load_traffic(opts.data, opts.csv_header), opts.from, opts.until));

  std::vector<std::string> targets = opts.all_targets ? data.segments : opts.targets;
  if (targets.empty()) throw Error(ErrorKind::InvalidArgument, "no --target given");
  for (const auto& t : targets) data.require_segment(t);

  const unsigned threads = effective_threads(opts.parallel_targets);
  std::vector<ForecastModel> models;
  if (targets.size() == 1) {
    EpochCallback progress;
    if (opts.verbose) {
      progress = [&log](const EpochLoss& e) {
        log << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << '\n';
      };
    }
    models.push_back(
        train(make_windows(data, targets.front(), opts.lookback, opts.horizon), opts.config, progress));
  } else {
    models = train_targets(data, targets, opts.lookback, opts.horizon, opts.config, threads);
  }

  OutputSet outputs;
  for (const auto& model : models) {
    const fs::path model_path = opts.out_dir / (model.target_segment + ".fluxmodel");
    {
      const auto staged = outputs.stage(model_path);
      auto f = open_out(staged);
      save_model(f, model);
      close_checked(f, staged);
    }
    const auto staged = outputs.stage(opts.out_dir / (model.target_segment + ".history.csv"));
    auto f = open_out(staged);
    f << "epoch,train_loss,val_loss\n";
    for (const auto& e : model.history) {
      f << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
    }
    close_checked(f, staged);
    log << model.target_segment << ": val loss " << model.history.front().val_loss << " -> "
        << model.history.back().val_loss << '\n';
  }

  json config = train_config_json(opts.config);
  config["lookback"] = opts.lookback;
  config["horizon"] = opts.horizon;
  config["targets"] = targets;
  config["from"] = opt_instant(opts.from);
  config["until"] = opt_instant(opts.until);
  config["parallel_targets"] = threads;
  finish(outputs, opts.out_dir / "train.manifest.json", "train", std::move(config), {opts.data},
         opts.config.seed, started);
}

void cmd_thresholds(const ThresholdsOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  const TrafficMatrix data = load_traffic(opts.data, opts.csv_header);
  const Instant as_of = opts.as_of.value_or(data.time_at(data.rows()));
  const std::vector<std::string>& segments = opts.segments.empty() ? data.segments : opts.segments;

  std::vector<AlarmThresholds> thresholds;
  for (const auto& s : segments) {
    thresholds.push_back(compute_thresholds(data, s, as_of, opts.window_start));
  }

  OutputSet outputs;
  {
    const auto staged = outputs.stage(opts.out);
    auto f = open_out(staged);
    write_thresholds_csv(f, thresholds);
    close_checked(f, staged);
  }
  json config = {{"as_of", format_instant(as_of)},
                 {"window_start", opt_instant(opts.window_start)},
                 {"segments", segments}};
  finish(outputs, manifest_beside(opts.out, "thresholds"), "thresholds", std::move(config),
         {opts.data}, 0, started);
  log << "thresholds for " << thresholds.size() << " segments as of " << format_instant(as_of)
      << '\n';
}

void cmd_alarm(const AlarmOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  if (opts.models.empty()) throw Error(ErrorKind::InvalidArgument, "no --model given");
  const TrafficMatrix data = impute(load_traffic(opts.data, opts.csv_header));
  if (opts.daily_thresholds == !opts.thresholds.empty()) {
    throw Error(ErrorKind::InvalidArgument, "give exactly one of --thresholds, --daily-thresholds");
  }
  std::map<std::string, AlarmThresholds> thresholds;
  std::vector<fs::path> inputs{opts.data};
  if (!opts.daily_thresholds) {
    auto in = open_in(opts.thresholds);
    for (auto& t : read_thresholds_csv(in)) thresholds.emplace(t.segment_id, t);
    inputs.push_back(opts.thresholds);
  }
  const Instant from = opts.from.value_or(data.start);
  const Instant to = opts.to.value_or(data.time_at(data.rows()));

  std::vector<AlarmRow> rows;
  for (const auto& model_path : opts.models) {
    const ForecastModel model = load_model(model_path);
    inputs.push_back(model_path);
    if (model.segments != data.segments) {
      throw Error(ErrorKind::SchemaMismatch,
                  "model '" + model_path.string() + "' was trained on a different segment set");
    }
    auto forecaster = [&model](const Eigen::MatrixXd& recent) {
      return predict(model, recent, true);
    };
    auto append = [&](const AlarmThresholds& th, Instant lo, Instant hi) {
      auto part = alarm_rows(data, model.target_segment, forecaster, model.lookback,
                             model.horizon, th, lo, hi);
      rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
    };
    if (opts.daily_thresholds) {
      for (Instant day = start_of_day(from); day < to; day += std::chrono::days{1}) {
        const Instant lo = std::max(day, from);
        const Instant hi = std::min(day + std::chrono::days{1}, to);
        append(compute_thresholds(data, model.target_segment, day), lo, hi);
      }
      continue;
    }
    const auto it = thresholds.find(model.target_segment);
    if (it == thresholds.end()) {
      throw Error(ErrorKind::SchemaMismatch,
                  "thresholds file lacks segment '" + model.target_segment + "'");
    }
    append(it->second, from, to);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AlarmRow& a, const AlarmRow& b) {
    return a.time != b.time ? a.time < b.time : a.segment < b.segment;
  });

  OutputSet outputs;
  {
    const auto staged = outputs.stage(opts.out);
    auto f = open_out(staged);
    write_alarm_table(f, rows);
    close_checked(f, staged);
  }
  json config = {{"from", format_instant(from)},
                 {"to", format_instant(to)},
                 {"daily_thresholds", opts.daily_thresholds}};
  finish(outputs, manifest_beside(opts.out, "alarm"), "alarm", std::move(config), inputs, 0,
         started);
  log << "wrote " << rows.size() << " alarm rows\n";
}

void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  std::vector<AlarmRow> rows;
  {
    auto in = open_in(opts.table);
    rows = read_alarm_table(in);
  }
  std::vector<AlarmLevel> truth, predicted;
  for (const auto& r : rows) {
    if (opts.exclude_advisory && r.advisory) continue;
    truth.push_back(r.true_level);
    predicted.push_back(r.pred_level);
  }
  const ConfusionMatrix3 cm = evaluate(truth, predicted);

  json result;
  result["labels"] = {"Low", "Medium", "High"};
  json counts = json::array();
  for (const auto& row : cm.counts) counts.push_back(row);
  result["counts"] = std::move(counts);
  json recall = json::object();
  for (AlarmLevel l : kAlarmLevels) {
    const auto r = cm.recall(l);
    recall[std::string(to_string(l))] = r ? json(*r) : json(nullptr);
  }
  result["recall"] = std::move(recall);
  const auto acc = cm.accuracy();
  result["accuracy"] = acc ? json(*acc) : json(nullptr);
  result["total"] = cm.total();

  OutputSet outputs;
  {
    const auto staged = outputs.stage(opts.out);
    auto f = open_out(staged);
    f << result.dump(2) << '\n';
    close_checked(f, staged);
  }
  finish(outputs, manifest_beside(opts.out, "evaluate"), "evaluate",
         {{"exclude_advisory", opts.exclude_advisory}}, {opts.table}, 0, started);
  log << "evaluated " << cm.total() << " rows\n";
}

void cmd_correlate(const CorrelateOptions& opts, std::ostream& log) {
  const auto started = Clock::now();
  const TrafficMatrix data = impute(load_traffic(opts.data, opts.csv_header));
  const std::string segment = opts.segment.empty() ? data.segments.front() : opts.segment;
  const HourlySeries traffic = restrict_hours(rebin_to_hourly(data, segment), opts.from, opts.to);
  HourlySeries pollution;
  {
    auto in = open_in(opts.pollution);
    pollution = restrict_hours(read_hourly_csv(in), opts.from, opts.to);
  }
  const LagScanResult scan = lag_scan(traffic, pollution, opts.max_lag);
  const auto daily = daily_correlation(traffic, pollution);

  OutputSet outputs;
  {
    const auto staged = outputs.stage(opts.out_dir / "lag_scan.csv");
    auto f = open_out(staged);
    write_lag_scan_csv(f, scan);
    close_checked(f, staged);
  }
  {
    const auto staged = outputs.stage(opts.out_dir / "daily_correlation.csv");
    auto f = open_out(staged);
    write_daily_csv(f, daily);
    close_checked(f, staged);
  }
  json config = {{"segment", segment},
                 {"max_lag", opts.max_lag},
                 {"from", opt_instant(opts.from)},
                 {"to", opt_instant(opts.to)},
                 {"best_lag", scan.best_lag}};
  finish(outputs, opts.out_dir / "correlate.manifest.json", "correlate", std::move(config),
         {opts.data, opts.pollution}, 0, started);
  log << "best lag " << scan.best_lag << " h, rho " << scan.rho_at(scan.best_lag) << '\n';
}

}  // namespace fluxwarn::cli
