#include "app.hpp"

#include <exception>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "fluxwarn/error.hpp"

namespace fluxwarn::cli {
namespace {

/// Binds an RFC-3339 instant option.
CLI::Option* add_instant(CLI::App* app, const std::string& name, std::optional<Instant>& target,
                         const std::string& help) {
  return app->add_option_function<std::string>(
                name,
                [&target, name](const std::string& text) {
                  const auto t = parse_instant(text);
                  if (!t) throw CLI::ValidationError(name, "expected YYYY-MM-DDTHH:MMZ");
                  target = *t;
                },
                help)
      ->type_name("TIME");
}

void add_train_flags(CLI::App* app, TrainOptions& o) {
  app->add_option("--lookback", o.lookback, "Past 10-minute steps per window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--horizon", o.horizon, "Future steps predicted")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--lr", o.config.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--epochs", o.config.epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--batch", o.config.batch_size, "Mini-batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--val-split", o.config.validation_split, "Chronological hold-out fraction")
      ->capture_default_str();
  app->add_option("--hidden", o.config.hidden_size, "LSTM hidden units")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--seed", o.config.seed, "Initialization and shuffling seed")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fluxwarn: per-segment traffic flux forecasting and alarm levels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FLUXWARN_VERSION);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic city (traffic + pollution)");
  generate->add_option("--segments", gen.city.n_segments, "Road segments")->capture_default_str();
  generate->add_option("--weeks", gen.city.n_weeks, "Weeks of 10-minute data")->capture_default_str();
  generate->add_option("--seed", gen.city.seed, "Generator seed")->capture_default_str();
  generate->add_option("--noise", gen.city.noise, "Log-scale multiplicative noise")->capture_default_str();
  generate->add_option("--weekend-factor", gen.city.weekend_factor, "Weekend damping")->capture_default_str();
  generate->add_option("--skewness", gen.city.skewness, "Skew-normal shape of the log-noise")->capture_default_str();
  generate->add_option("--out", gen.out_dir, "Output directory")->required();
  generate->add_flag("!--no-pollution", gen.pollution, "Skip the pollution channel");
  generate->add_option("--pollution-segment", gen.pollution_segment, "Segment driving pollution");
  generate->add_option("--background", gen.background, "Pollution background level")->capture_default_str();
  generate->add_option("--coupling", gen.coupling, "Pollution per hourly vehicle")->capture_default_str();
  generate->add_option("--pollution-noise", gen.pollution_noise, "Pollution noise std")->capture_default_str();
  generate->add_flag("--matrix", gen.write_matrix, "Also write traffic.fluxmatrix");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train one forecaster per target segment");
  train_cmd->add_option("--data", tr.data, "Traffic CSV or fluxmatrix")->required();
  train_cmd->add_flag("--header,!--no-header", tr.csv_header, "CSV input has a header line");
  train_cmd->add_option("--target", tr.targets, "Target segment (repeatable)");
  train_cmd->add_flag("--all-targets", tr.all_targets, "Train every segment");
  train_cmd->add_option("--out", tr.out_dir, "Output directory")->required();
  train_cmd->add_option("--parallel-targets", tr.parallel_targets, "Models trained concurrently")
      ->check(CLI::PositiveNumber);
  train_cmd->add_flag("--verbose", tr.verbose, "Print per-epoch losses");
  add_instant(train_cmd, "--from", tr.from, "First training instant (inclusive)");
  add_instant(train_cmd, "--until", tr.until, "End of training data (exclusive)");
  add_train_flags(train_cmd, tr);

  ThresholdsOptions th;
  auto* thresholds = app.add_subcommand("thresholds", "Per-segment p50/p75 daytime thresholds");
  thresholds->add_option("--data", th.data, "Traffic CSV or fluxmatrix")->required();
  thresholds->add_flag("--header,!--no-header", th.csv_header, "CSV input has a header line");
  thresholds->add_option("--segment", th.segments, "Segment (repeatable; default all)");
  thresholds->add_option("--out", th.out, "Thresholds CSV")->required();
  add_instant(thresholds, "--as-of", th.as_of, "Exclusive end of the sample (default: end of data)");
  add_instant(thresholds, "--window-start", th.window_start,
              "Start of the sample (default: January 1 of the as-of year)");

  AlarmOptions al;
  auto* alarm = app.add_subcommand("alarm", "Forecast and classify alarm levels");
  alarm->add_option("--model", al.models, "Model file (repeatable)")->required();
  alarm->add_option("--data", al.data, "Traffic CSV or fluxmatrix")->required();
  alarm->add_flag("--header,!--no-header", al.csv_header, "CSV input has a header line");
  auto* thresholds_opt = alarm->add_option("--thresholds", al.thresholds, "Thresholds CSV");
  alarm->add_flag("--daily-thresholds", al.daily_thresholds,
                  "Recompute thresholds at each evaluation midnight")
      ->excludes(thresholds_opt);
  alarm->add_option("--out", al.out, "Level table CSV")->required();
  add_instant(alarm, "--from", al.from, "First evaluation instant (inclusive)");
  add_instant(alarm, "--to", al.to, "End of evaluation (exclusive)");

  EvaluateOptions ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Confusion matrix of a level table");
  evaluate_cmd->add_option("--table", ev.table, "Level table CSV")->required();
  evaluate_cmd->add_option("--out", ev.out, "Confusion JSON")->required();
  evaluate_cmd->add_flag("--exclude-advisory", ev.exclude_advisory,
                         "Drop night rows (23:00-05:00)");

  CorrelateOptions co;
  auto* correlate = app.add_subcommand("correlate", "Traffic/pollution lag scan and daily correlation");
  correlate->add_option("--data", co.data, "Traffic CSV or fluxmatrix")->required();
  correlate->add_flag("--header,!--no-header", co.csv_header, "CSV input has a header line");
  correlate->add_option("--segment", co.segment, "Traffic segment (default: first)");
  correlate->add_option("--pollution", co.pollution, "Hourly pollution CSV")->required();
  correlate->add_option("--max-lag", co.max_lag, "Largest shift in hours")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  correlate->add_option("--out", co.out_dir, "Output directory")->required();
  add_instant(correlate, "--from", co.from, "First hour (inclusive)");
  add_instant(correlate, "--to", co.to, "End hour (exclusive)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*generate) cmd_generate(gen, out);
    if (*train_cmd) cmd_train(tr, out);
    if (*thresholds) cmd_thresholds(th, out);
    if (*alarm) cmd_alarm(al, out);
    if (*evaluate_cmd) cmd_evaluate(ev, out);
    if (*correlate) cmd_correlate(co, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fluxwarn::cli
