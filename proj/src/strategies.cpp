#include "driftbench/strategies.hpp"

namespace driftbench {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::initial_learn:
      return "initial_learn";
    case StrategyKind::regular_retrain:
      return "regular_retrain";
    case StrategyKind::regular_update:
      return "regular_update";
    case StrategyKind::driftgan:
      break;
  }
  return "driftgan";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  for (StrategyKind kind : all_strategies()) {
    if (to_string(kind) == name) return kind;
  }
  throw UsageError("unknown strategy '" + name + "' (driftgan, initial_learn, regular_retrain, regular_update)");
}

std::vector<StrategyKind> all_strategies() {
  return {StrategyKind::driftgan, StrategyKind::initial_learn, StrategyKind::regular_retrain,
          StrategyKind::regular_update};
}

void StrategyConfig::validate() const {
  detector.validate();
  tree.validate();
  if (retrain_interval && *retrain_interval == 0) throw UsageError("retrain_interval must be at least 1");
}

nlohmann::json StrategyConfig::to_json() const {
  const DetectorConfig& d = detector;
  nlohmann::json doc{{"strategy", to_string(kind)},
                     {"rho", d.rho},
                     {"batch_size", d.batch_size},
                     {"seq_len", d.seq_len},
                     {"lambda", d.lambda},
                     {"per_dist_cap", d.per_dist_cap},
                     {"seed", d.seed},
                     {"minibatch", d.minibatch},
                     {"max_epochs", d.max_epochs},
                     {"loss_threshold", d.loss_threshold},
                     {"plateau_patience", d.plateau_patience},
                     {"plateau_tolerance", d.plateau_tolerance},
                     {"discriminator_steps", d.discriminator_steps},
                     {"fake_fraction", d.fake_fraction},
                     {"background_ratio", d.background_ratio},
                     {"adversarial_weight", d.adversarial_weight},
                     {"reset_generator", d.reset_generator},
                     {"generator_hidden", d.generator_hidden},
                     {"discriminator_hidden", d.discriminator_hidden},
                     {"retrain_interval", interval()},
                     {"grace_period", tree.grace_period},
                     {"split_confidence", tree.split_confidence},
                     {"tie_threshold", tree.tie_threshold}};
  return doc;
}

Strategy::Strategy(StrategyConfig config, std::size_t feature_count, std::size_t label_count)
    : config_(std::move(config)), tree_(feature_count, label_count, config_.tree) {
  config_.validate();
  if (config_.kind == StrategyKind::driftgan) detector_ = std::make_unique<DriftGanDetector>(config_.detector);
}

void Strategy::initialize(std::span<const LabeledInstance> initial) {
  if (initial.size() < warmup()) {
    throw UsageError(name() + " needs " + std::to_string(warmup()) + " initial instances, got " +
                     std::to_string(initial.size()));
  }
  const auto first = initial.first(warmup());
  tree_.reset();
  for (const auto& instance : first) tree_.partial_fit(instance.features, instance.label);
  trailing_.assign(first.begin(), first.end());
  since_retrain_ = 0;
  events_.clear();
  if (detector_) detector_->initialize(first);
  initialized_ = true;
}

int Strategy::step(const LabeledInstance& instance) {
  if (!initialized_) throw UsageError(name() + " used before initialize()");
  const int predicted = tree_.predict(instance.features);
  learn(instance);
  return predicted;
}

void Strategy::learn(const LabeledInstance& instance) {
  switch (config_.kind) {
    case StrategyKind::initial_learn:
      return;
    case StrategyKind::regular_update:
      tree_.partial_fit(instance.features, instance.label);
      return;
    case StrategyKind::regular_retrain:
      tree_.partial_fit(instance.features, instance.label);
      trailing_.push_back(instance);
      while (trailing_.size() > config_.detector.rho) trailing_.pop_front();
      if (++since_retrain_ >= config_.interval()) {
        since_retrain_ = 0;
        tree_.reset();
        for (const auto& past : trailing_) tree_.partial_fit(past.features, past.label);
      }
      return;
    case StrategyKind::driftgan:
      break;
  }
  tree_.partial_fit(instance.features, instance.label);
  const std::optional<DriftDecision> decision = detector_->observe(instance);
  if (decision && decision->kind != DriftKind::none) handle_drift(*decision);
}

void Strategy::handle_drift(const DriftDecision& decision) {
  events_.push_back({decision.instance_index, decision.kind, decision.distribution});
  const auto& batch = detector_->last_batch();
  tree_.reset();
  if (decision.kind == DriftKind::recurring) {
    // Stored data of the matched distribution, minus the triggering batch
    // (which was just attributed to it and is replayed last).
    const std::size_t batch_start = batch.empty() ? decision.instance_index + 1 : batch.front().index;
    for (const auto& past : historical_sample(detector_->registry(), decision.distribution,
                                              config_.detector.lambda, detector_->rng())) {
      if (past.index < batch_start) tree_.partial_fit(past.features, past.label);
    }
  }
  for (const auto& recent : batch) tree_.partial_fit(recent.features, recent.label);
}

}  // namespace driftbench
