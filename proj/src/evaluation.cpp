#include "driftbench/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "driftbench/config_file.hpp"

namespace driftbench {

namespace {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& doc) {
  if (doc.is_null()) return std::nullopt;
  return doc.get<T>();
}

std::string normalized(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
  }
  return out;
}

}  // namespace

nlohmann::json DetectionMetrics::to_json() const {
  nlohmann::json delay_list = nlohmann::json::array();
  for (const auto& d : delays) delay_list.push_back(optional_json(d));
  return {{"change_points", change_points},
          {"detected", detected},
          {"detected_within_3b", detected_within_3b},
          {"mean_delay", optional_json(mean_delay)},
          {"delays", std::move(delay_list)},
          {"false_alarms", false_alarms},
          {"false_alarms_per_segment", false_alarms_per_segment},
          {"recurring_segments", recurring_segments},
          {"recurrence_id_accuracy", optional_json(recurrence_id_accuracy)}};
}

DetectionMetrics DetectionMetrics::from_json(const nlohmann::json& doc) {
  DetectionMetrics m;
  m.change_points = doc.at("change_points").get<std::size_t>();
  m.detected = doc.at("detected").get<std::size_t>();
  m.detected_within_3b = doc.at("detected_within_3b").get<std::size_t>();
  m.mean_delay = optional_from<double>(doc.at("mean_delay"));
  for (const auto& d : doc.at("delays")) m.delays.push_back(optional_from<std::size_t>(d));
  m.false_alarms = doc.at("false_alarms").get<std::size_t>();
  m.false_alarms_per_segment = doc.at("false_alarms_per_segment").get<std::vector<std::size_t>>();
  m.recurring_segments = doc.at("recurring_segments").get<std::size_t>();
  m.recurrence_id_accuracy = optional_from<double>(doc.at("recurrence_id_accuracy"));
  return m;
}

DetectionMetrics score_detection(const std::vector<DriftEvent>& events, const GroundTruth& truth,
                                 std::size_t batch_size) {
  DetectionMetrics m;
  const auto& segs = truth.segments;
  m.change_points = segs.empty() ? 0 : segs.size() - 1;
  m.false_alarms_per_segment.assign(segs.size(), 0);
  std::vector<std::optional<DriftEvent>> matched(segs.size());

  for (const auto& event : events) {
    const auto seg = std::find_if(segs.begin(), segs.end(), [&](const Segment& s) {
      return event.instance_index >= s.start && event.instance_index < s.start + s.length;
    });
    if (seg == segs.end()) {
      ++m.false_alarms;
      continue;
    }
    const auto s = static_cast<std::size_t>(seg - segs.begin());
    if (s > 0 && !matched[s]) {
      matched[s] = event;
    } else {
      ++m.false_alarms;
      ++m.false_alarms_per_segment[s];
    }
  }

  double delay_sum = 0.0;
  for (std::size_t s = 1; s < segs.size(); ++s) {
    if (!matched[s]) {
      m.delays.emplace_back();
      continue;
    }
    const std::size_t delay = matched[s]->instance_index - segs[s].start;
    m.delays.emplace_back(delay);
    ++m.detected;
    if (delay <= 3 * batch_size) ++m.detected_within_3b;
    delay_sum += static_cast<double>(delay);
  }
  if (m.detected > 0) m.mean_delay = delay_sum / static_cast<double>(m.detected);

  std::map<std::string, DistributionId> first_id;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::string& name = segs[s].concept_name;
    const auto known = first_id.find(name);
    if (known == first_id.end()) {
      if (s == 0) {
        first_id[name] = 1;
      } else if (matched[s] && matched[s]->kind == DriftKind::new_distribution) {
        first_id[name] = matched[s]->distribution;
      }
      continue;
    }
    ++m.recurring_segments;
    if (matched[s] && matched[s]->distribution == known->second) ++correct;
  }
  if (m.recurring_segments > 0) {
    m.recurrence_id_accuracy = static_cast<double>(correct) / static_cast<double>(m.recurring_segments);
  }
  return m;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json event_list = nlohmann::json::array();
  for (const auto& e : drift_events) {
    event_list.push_back({{"instance_index", e.instance_index}, {"kind", to_string(e.kind)}, {"distribution", e.distribution}});
  }
  return {{"schema_version", schema_version},
          {"dataset", dataset},
          {"strategy", strategy},
          {"config", config},
          {"accuracy", accuracy},
          {"instances", instances},
          {"warmup", warmup},
          {"scored", scored},
          {"correct", correct},
          {"drift_events", std::move(event_list)},
          {"detection", detection ? detection->to_json() : nlohmann::json(nullptr)},
          {"wall_time_seconds", wall_time_seconds}};
}

RunReport RunReport::from_json(const nlohmann::json& doc) {
  RunReport r;
  r.schema_version = doc.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion) {
    throw std::runtime_error("unsupported report schema_version " + std::to_string(r.schema_version));
  }
  r.dataset = doc.at("dataset").get<std::string>();
  r.strategy = doc.at("strategy").get<std::string>();
  r.config = doc.at("config");
  r.accuracy = doc.at("accuracy").get<double>();
  r.instances = doc.at("instances").get<std::size_t>();
  r.warmup = doc.at("warmup").get<std::size_t>();
  r.scored = doc.at("scored").get<std::size_t>();
  r.correct = doc.at("correct").get<std::size_t>();
  for (const auto& e : doc.at("drift_events")) {
    r.drift_events.push_back({e.at("instance_index").get<std::size_t>(),
                              drift_kind_from_string(e.at("kind").get<std::string>()),
                              e.at("distribution").get<DistributionId>()});
  }
  if (!doc.at("detection").is_null()) r.detection = DetectionMetrics::from_json(doc.at("detection"));
  r.wall_time_seconds = doc.at("wall_time_seconds").get<double>();
  return r;
}

RunReport prequential_run(const Stream& stream, StreamLearner& learner, std::vector<bool>* correctness) {
  const std::size_t warmup = learner.warmup();
  if (stream.instances.size() < warmup + 1) {
    throw UsageError("stream has " + std::to_string(stream.instances.size()) + " instances; " + learner.name() +
                     " needs at least " + std::to_string(warmup + 1));
  }
  const auto start = std::chrono::steady_clock::now();
  const std::span<const LabeledInstance> all(stream.instances);
  learner.initialize(all.first(warmup));

  RunReport report;
  report.dataset = stream.name;
  report.strategy = learner.name();
  report.instances = stream.instances.size();
  report.warmup = warmup;
  if (correctness) correctness->clear();
  for (const auto& instance : all.subspan(warmup)) {
    const bool hit = learner.step(instance) == instance.label;
    report.correct += hit ? 1 : 0;
    ++report.scored;
    if (correctness) correctness->push_back(hit);
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.scored);
  report.drift_events = learner.drift_events();
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RunReport run_strategy(const Stream& stream, const StrategyConfig& config, std::vector<bool>* correctness) {
  if (stream.label_count() == 0) throw UsageError("stream has no labels");
  Strategy strategy(config, stream.feature_count(), stream.label_count());
  RunReport report = prequential_run(stream, strategy, correctness);
  report.config = config.to_json();
  if (stream.truth) report.detection = score_detection(report.drift_events, *stream.truth, config.detector.batch_size);
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report " + path.string());
  out << report.to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing report " + path.string());
}

RunReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path.string());
  return RunReport::from_json(nlohmann::json::parse(in));
}

void write_drift_log(const std::vector<DriftEvent>& events, std::ostream& out) {
  out << "instance_index,kind,distribution_id\n";
  for (const auto& e : events) out << e.instance_index << ',' << to_string(e.kind) << ',' << e.distribution << '\n';
}

void write_drift_log(const std::vector<DriftEvent>& events, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write drift log " + path.string());
  write_drift_log(events, out);
}

std::vector<DriftEvent> read_drift_log(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  std::vector<DriftEvent> events;
  if (!std::getline(in, line) || trim(line) != "instance_index,kind,distribution_id") {
    throw ParseError(source, 1, "expected header instance_index,kind,distribution_id");
  }
  ++number;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError(source, number, "expected 3 fields");
    try {
      events.push_back({parse_unsigned(fields[0], "instance_index"), drift_kind_from_string(fields[1]),
                        static_cast<DistributionId>(parse_unsigned(fields[2], "distribution_id"))});
    } catch (const UsageError& err) {
      throw ParseError(source, number, err.what());
    }
  }
  return events;
}

std::optional<double> reference_accuracy(const std::string& dataset, const std::string& strategy) {
  // Hoeffding-tree accuracies (%) for the eight public datasets:
  // initial_learn, regular_update, regular_retrain, driftgan.
  static const std::map<std::string, std::array<double, 4>> table{
      {"electricity", {56.44, 77.69, 75.4, 79.86}}, {"poker", {50.12, 74.08, 63.05, 76.99}},
      {"covertype", {47.69, 82.49, 55.48, 82.49}},  {"rialto", {9.95, 31.373, 51.02, 54.84}},
      {"spam", {66.48, 88.35, 75.81, 89.28}},       {"phishing", {83.49, 90.26, 89.18, 91.37}},
      {"airlines", {56.13, 63.88, 59.72, 65.59}},   {"outdoor", {15.21, 57.15, 12.00, 62.57}}};
  const std::string key = normalized(dataset);
  for (const auto& [name, row] : table) {
    if (key.find(name) == std::string::npos) continue;
    switch (strategy_kind_from_string(strategy)) {
      case StrategyKind::initial_learn:
        return row[0];
      case StrategyKind::regular_update:
        return row[1];
      case StrategyKind::regular_retrain:
        return row[2];
      case StrategyKind::driftgan:
        return row[3];
    }
  }
  return std::nullopt;
}

void compare_reports(const std::vector<RunReport>& reports, std::ostream& out) {
  out << "dataset,strategy,accuracy,scored,drift_events,reference_accuracy\n";
  for (const auto& r : reports) {
    out << r.dataset << ',' << r.strategy << ',' << r.accuracy * 100.0 << ',' << r.scored << ','
        << r.drift_events.size() << ',';
    if (const auto ref = reference_accuracy(r.dataset, r.strategy)) out << *ref;
    out << '\n';
  }
}

void compare_reports(const std::vector<RunReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write comparison " + path.string());
  compare_reports(reports, out);
  if (!out) throw std::runtime_error("failed writing comparison " + path.string());
}

}  // namespace driftbench
