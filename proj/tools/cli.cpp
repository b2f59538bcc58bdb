#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "driftbench/config_file.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/streams.hpp"

namespace driftbench::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_file;
  std::string out_dir = ".";
  std::string log_level;

  std::string dataset;
  std::string format = "auto";
  std::string truth;
  std::string strategy = "driftgan";
  std::string strategies = "all";
  std::size_t rho = 100;
  std::size_t batch_size = 100;
  std::size_t seq_len = 4;
  double lambda = 1.0;
  std::size_t retrain_interval = 0;
  std::size_t max_instances = 0;
  std::size_t per_dist_cap = 10000;
  std::uint64_t seed = 0;

  std::string spec_file;
  std::string name = "synthetic";
  std::string order = "A,B,A,B";
  std::size_t length = 2000;
  std::size_t features = 32;
  double separation = 4.0;
  double noise = 1.0;
};

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--config", o.config_file, "flat key=value file; keys are flag names, flags win");
  cmd.add_option("--out", o.out_dir, "output directory");
  cmd.add_option("--log-level", o.log_level, "error, info or debug (default: $DRIFTBENCH_LOG, else info)");
}

void add_run_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--dataset", o.dataset, "CSV or ARFF file, last column is the label")->required();
  cmd.add_option("--format", o.format, "auto, csv or arff");
  cmd.add_option("--truth", o.truth, "ground-truth JSON written by `synth`, enables detection scoring");
  cmd.add_option("--rho", o.rho, "initial/new-distribution window size")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
  cmd.add_option("--batch-size", o.batch_size, "instances that must agree before a drift is signalled")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--seq-len", o.seq_len, "generator input length in feature vectors")->check(CLI::PositiveNumber);
  cmd.add_option("--lambda", o.lambda, "fraction of stored exemplars replayed on recurrence")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--retrain-interval", o.retrain_interval, "regular_retrain period (0 = rho)");
  cmd.add_option("--max-instances", o.max_instances, "read at most this many instances (0 = all)");
  cmd.add_option("--per-dist-cap", o.per_dist_cap, "stored exemplars per distribution");
  cmd.add_option("--seed", o.seed, "random seed");
}

spdlog::level::level_enum parse_level(const std::string& name) {
  if (name == "error") return spdlog::level::err;
  if (name == "info") return spdlog::level::info;
  if (name == "debug") return spdlog::level::debug;
  throw UsageError("log level must be error, info or debug, got '" + name + "'");
}

std::shared_ptr<spdlog::logger> make_logger(const Options& o, std::ostream& err) {
  std::string level = o.log_level;
  if (level.empty()) {
    const char* env = std::getenv("DRIFTBENCH_LOG");
    level = env && *env ? env : "info";
  }
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("driftbench", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(parse_level(level));
  return logger;
}

// Appends `--key value` for every config-file entry the command line does
// not already set, so flags always win.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* cmd = app.get_subcommand_no_throw(args.front());
  if (!cmd) return args;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::vector<std::string> merged = args;
  for (const auto& entry : read_key_values(fs::path(path))) {
    std::string key = entry.key;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    if (key == "config" || !cmd->get_option_no_throw(flag)) {
      throw UsageError(path + ":" + std::to_string(entry.line) + ": unknown key '" + entry.key + "' for " +
                       args.front());
    }
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) {
      merged.push_back(flag);
      merged.push_back(entry.value);
    }
  }
  return merged;
}

StrategyConfig strategy_config(const Options& o, StrategyKind kind) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.detector.rho = o.rho;
  cfg.detector.batch_size = o.batch_size;
  cfg.detector.seq_len = o.seq_len;
  cfg.detector.lambda = o.lambda;
  cfg.detector.per_dist_cap = o.per_dist_cap;
  cfg.detector.seed = o.seed;
  if (o.retrain_interval > 0) cfg.retrain_interval = o.retrain_interval;
  cfg.validate();
  return cfg;
}

Stream load_input(const Options& o, spdlog::logger& log) {
  std::optional<FileFormat> format;
  if (o.format != "auto") format = file_format_from_string(o.format);
  std::optional<std::size_t> limit;
  if (o.max_instances > 0) limit = o.max_instances;
  Stream stream = load_stream(o.dataset, format, limit);
  if (!o.truth.empty()) {
    std::ifstream in(o.truth);
    if (!in) throw std::runtime_error("cannot open ground truth " + o.truth);
    stream.truth = GroundTruth::from_json(nlohmann::json::parse(in));
  }
  log.info("loaded {}: {} instances, {} features, {} labels", o.dataset, stream.instances.size(),
           stream.feature_count(), stream.label_count());
  return stream;
}

RunReport run_one(const Stream& stream, const Options& o, StrategyKind kind, spdlog::logger& log, std::ostream& out) {
  const StrategyConfig cfg = strategy_config(o, kind);
  log.info("running {} on {}", to_string(kind), stream.name);
  RunReport report = run_strategy(stream, cfg);
  for (const auto& e : report.drift_events) {
    log.debug("drift at {}: {} {}", e.instance_index, to_string(e.kind), e.distribution);
  }
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_report(report, dir / ("report_" + report.strategy + ".json"));
  write_drift_log(report.drift_events, dir / ("drifts_" + report.strategy + ".csv"));
  out << std::left << std::setw(16) << report.strategy << " accuracy " << std::fixed << std::setprecision(4)
      << report.accuracy << "  drifts " << report.drift_events.size();
  if (report.detection) {
    out << "  detected " << report.detection->detected << "/" << report.detection->change_points << "  false alarms "
        << report.detection->false_alarms;
  }
  out << '\n';
  return report;
}

int cmd_run(const Options& o, spdlog::logger& log, std::ostream& out) {
  const StrategyKind kind = strategy_kind_from_string(o.strategy);
  strategy_config(o, kind);
  const Stream stream = load_input(o, log);
  run_one(stream, o, kind, log, out);
  return kExitOk;
}

int cmd_compare(const Options& o, spdlog::logger& log, std::ostream& out) {
  std::vector<StrategyKind> kinds;
  if (o.strategies == "all") {
    kinds = all_strategies();
  } else {
    for (const auto& name : split(o.strategies, ',')) kinds.push_back(strategy_kind_from_string(name));
  }
  for (StrategyKind kind : kinds) strategy_config(o, kind);
  const Stream stream = load_input(o, log);
  std::vector<RunReport> reports;
  for (StrategyKind kind : kinds) reports.push_back(run_one(stream, o, kind, log, out));
  const fs::path path = fs::path(o.out_dir) / "comparison.csv";
  compare_reports(reports, path);
  log.info("wrote {}", path.string());
  return kExitOk;
}

int cmd_synth(const Options& o, const CLI::App& cmd, spdlog::logger& log, std::ostream& out) {
  SynthSpec spec = o.spec_file.empty() ? SynthSpec{} : SynthSpec::load(o.spec_file);
  const auto given = [&](const char* flag) { return o.spec_file.empty() || cmd.get_option(flag)->count() > 0; };
  if (given("--order")) spec.order = split(o.order, ',');
  if (given("--len")) spec.lengths = {o.length};
  if (given("--features")) spec.features = o.features;
  if (given("--separation")) spec.separation = o.separation;
  if (given("--noise")) spec.noise = o.noise;
  if (given("--seed")) spec.seed = o.seed;
  spec.validate(o.rho + o.batch_size);

  const Stream stream = synth_recurring(spec);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  const fs::path csv = dir / (o.name + ".csv");
  const fs::path truth = dir / (o.name + "_truth.json");
  write_csv(stream, csv);
  std::ofstream t(truth);
  if (!t) throw std::runtime_error("cannot write " + truth.string());
  t << stream.truth->to_json().dump(2) << '\n';
  log.info("{} instances, {} segments", stream.instances.size(), stream.truth->segments.size());
  out << csv.string() << '\n' << truth.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Recurring concept-drift detection with a growing GAN discriminator, evaluated prequentially."};
  app.name("driftbench");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "evaluate one strategy on a dataset");
  add_common(*run, o);
  add_run_options(*run, o);
  run->add_option("--strategy", o.strategy, "driftgan, initial_learn, regular_retrain or regular_update");

  CLI::App* compare = app.add_subcommand("compare", "evaluate several strategies on one dataset");
  add_common(*compare, o);
  add_run_options(*compare, o);
  compare->add_option("--strategies", o.strategies, "comma list of strategies, or all");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic recurring-drift stream and its ground truth");
  add_common(*synth, o);
  synth->add_option("--spec", o.spec_file, "synthetic stream spec (key=value); flags override it");
  synth->add_option("--name", o.name, "output file stem");
  synth->add_option("--order", o.order, "comma list of concept names, one per segment");
  synth->add_option("--len", o.length, "instances per segment");
  synth->add_option("--features", o.features, "feature count");
  synth->add_option("--separation", o.separation, "per-feature distance between concept means, in noise sigmas");
  synth->add_option("--noise", o.noise, "noise standard deviation");
  synth->add_option("--seed", o.seed, "random seed");
  synth->add_option("--rho", o.rho, "segments must hold at least rho + batch-size instances");
  synth->add_option("--batch-size", o.batch_size, "see --rho");

  try {
    const std::vector<std::string> merged = merge_config(args, app);
    std::vector<const char*> argv{"driftbench"};
    for (const auto& a : merged) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  try {
    const auto log = make_logger(o, err);
    if (run->parsed()) return cmd_run(o, *log, out);
    if (compare->parsed()) return cmd_compare(o, *log, out);
    return cmd_synth(o, *synth, *log, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace driftbench::cli
