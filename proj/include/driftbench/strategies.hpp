#ifndef DRIFTBENCH_STRATEGIES_HPP
#define DRIFTBENCH_STRATEGIES_HPP

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftbench/gan_drift.hpp"
#include "driftbench/hoeffding_tree.hpp"
#include "driftbench/types.hpp"

namespace driftbench {

/// Anything the prequential loop can drive.
class StreamLearner {
 public:
  virtual ~StreamLearner() = default;

  virtual std::string name() const = 0;
  /// Instances needed by initialize(); they are never scored.
  virtual std::size_t warmup() const = 0;
  virtual void initialize(std::span<const LabeledInstance> initial) = 0;
  /// Predicts the label of `instance` without looking at it, then learns
  /// from it. Returns the prediction.
  virtual int step(const LabeledInstance& instance) = 0;
  virtual const std::vector<DriftEvent>& drift_events() const = 0;
};

enum class StrategyKind { driftgan, initial_learn, regular_retrain, regular_update };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);
std::vector<StrategyKind> all_strategies();

struct StrategyConfig {
  StrategyKind kind = StrategyKind::driftgan;
  DetectorConfig detector;  // rho doubles as every strategy's warm-up size
  TreeConfig tree;
  std::optional<std::size_t> retrain_interval;  // regular_retrain; defaults to rho

  std::size_t interval() const { return retrain_interval.value_or(detector.rho); }
  void validate() const;
  nlohmann::json to_json() const;
};

/// A streaming strategy: a Hoeffding tree plus, for driftgan, the GAN
/// detector that decides when the tree is reset.
class Strategy : public StreamLearner {
 public:
  Strategy(StrategyConfig config, std::size_t feature_count, std::size_t label_count);

  std::string name() const override { return to_string(config_.kind); }
  std::size_t warmup() const override { return config_.detector.rho; }
  void initialize(std::span<const LabeledInstance> initial) override;
  int step(const LabeledInstance& instance) override;
  const std::vector<DriftEvent>& drift_events() const override { return events_; }

  const StrategyConfig& config() const { return config_; }
  const HoeffdingTree& classifier() const { return tree_; }
  /// Null unless the kind is driftgan.
  const DriftGanDetector* detector() const { return detector_.get(); }

 private:
  void learn(const LabeledInstance& instance);
  void handle_drift(const DriftDecision& decision);

  StrategyConfig config_;
  HoeffdingTree tree_;
  std::unique_ptr<DriftGanDetector> detector_;
  std::deque<LabeledInstance> trailing_;  // regular_retrain window
  std::size_t since_retrain_ = 0;
  std::vector<DriftEvent> events_;
  bool initialized_ = false;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_STRATEGIES_HPP
