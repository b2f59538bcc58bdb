#ifndef DRIFTBENCH_EVALUATION_HPP
#define DRIFTBENCH_EVALUATION_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftbench/streams.hpp"
#include "driftbench/strategies.hpp"
#include "driftbench/types.hpp"

namespace driftbench {

inline constexpr int kReportSchemaVersion = 1;

struct DetectionMetrics {
  std::size_t change_points = 0;
  std::size_t detected = 0;              // change points with an event inside their segment
  std::size_t detected_within_3b = 0;    // ... whose delay is at most 3 * batch_size
  std::optional<double> mean_delay;      // over detected change points
  std::vector<std::optional<std::size_t>> delays;  // one per change point
  std::size_t false_alarms = 0;
  std::vector<std::size_t> false_alarms_per_segment;
  std::size_t recurring_segments = 0;    // segments whose concept appeared earlier
  std::optional<double> recurrence_id_accuracy;

  nlohmann::json to_json() const;
  static DetectionMetrics from_json(const nlohmann::json& doc);
  friend bool operator==(const DetectionMetrics&, const DetectionMetrics&) = default;
};

/// Matches each change point to the first event inside its segment. Every
/// other event is a false alarm. A segment repeating an earlier concept
/// counts as correctly identified when its matched event carries the id
/// that concept received on first appearance (the first segment's concept
/// is distribution 1, later new concepts take the id of their matching
/// "new" event).
DetectionMetrics score_detection(const std::vector<DriftEvent>& events, const GroundTruth& truth,
                                 std::size_t batch_size);

struct RunReport {
  int schema_version = kReportSchemaVersion;
  std::string dataset;
  std::string strategy;
  nlohmann::json config = nlohmann::json::object();
  double accuracy = 0.0;         // correct / scored
  std::size_t instances = 0;     // stream length, warm-up included
  std::size_t warmup = 0;        // leading instances used for initialization only
  std::size_t scored = 0;
  std::size_t correct = 0;
  std::vector<DriftEvent> drift_events;
  std::optional<DetectionMetrics> detection;
  double wall_time_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& doc);
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Interleaved test-then-train. The first learner.warmup() instances
/// initialize the learner and are not scored; each later instance is
/// predicted and then learned. `correctness` receives one entry per scored
/// instance when non-null.
RunReport prequential_run(const Stream& stream, StreamLearner& learner, std::vector<bool>* correctness = nullptr);

/// Builds a Strategy for `config`, runs it and scores detection when the
/// stream has ground truth.
RunReport run_strategy(const Stream& stream, const StrategyConfig& config, std::vector<bool>* correctness = nullptr);

void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

/// `instance_index,kind,distribution_id` with a header row.
void write_drift_log(const std::vector<DriftEvent>& events, std::ostream& out);
void write_drift_log(const std::vector<DriftEvent>& events, const std::filesystem::path& path);
std::vector<DriftEvent> read_drift_log(std::istream& in, const std::string& source);

/// Published accuracy for a dataset/strategy pair, when known.
std::optional<double> reference_accuracy(const std::string& dataset, const std::string& strategy);

/// One row per report: dataset,strategy,accuracy,scored,drift_events,reference_accuracy.
void compare_reports(const std::vector<RunReport>& reports, std::ostream& out);
void compare_reports(const std::vector<RunReport>& reports, const std::filesystem::path& path);

}  // namespace driftbench

#endif  // DRIFTBENCH_EVALUATION_HPP
