#include <random>

#include <doctest.h>

#include "driftbench/evaluation.hpp"
#include "driftbench/strategies.hpp"

using namespace driftbench;

namespace {

StrategyConfig test_config(StrategyKind kind, std::uint64_t seed = 1) {
  StrategyConfig c;
  c.kind = kind;
  c.detector.seed = seed;
  c.detector.batch_size = 50;
  return c;
}

// Uniform features; the label thresholds x0 for the first half and x1 after.
Stream switching_rule(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Stream s;
  s.name = "switch";
  s.feature_names = {"x0", "x1"};
  s.labels = {"0", "1"};
  for (std::size_t i = 0; i < n; ++i) {
    LabeledInstance inst{{u(rng), u(rng)}, 0, i};
    inst.label = (i < n / 2 ? inst.features[0] : inst.features[1]) > 0.5 ? 1 : 0;
    s.instances.push_back(inst);
  }
  return s;
}

Stream recurring(std::vector<std::string> order, std::size_t length, std::uint64_t seed) {
  SynthSpec spec;
  spec.order = std::move(order);
  spec.lengths = {length};
  spec.seed = seed;
  return synth_recurring(spec);
}

double half_accuracy(const std::vector<bool>& hits, std::size_t from, std::size_t to) {
  std::size_t c = 0;
  for (std::size_t i = from; i < to; ++i) c += hits[i] ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (StrategyKind k : all_strategies()) CHECK(strategy_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(strategy_kind_from_string("oracle"), UsageError);
  CHECK(all_strategies().size() == 4);
}

TEST_CASE("strategy config validation and json") {
  StrategyConfig c;
  c.retrain_interval = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.retrain_interval.reset();
  CHECK(c.interval() == c.detector.rho);
  const auto doc = c.to_json();
  CHECK(doc.at("strategy") == "driftgan");
  CHECK(doc.at("rho") == 100);
  CHECK(doc.at("retrain_interval") == 100);
}

TEST_CASE("every strategy predicts before it learns") {
  const Stream s = recurring({"A", "B"}, 300, 2);
  const auto init = std::span(s.instances).first(100);
  for (StrategyKind kind : all_strategies()) {
    CAPTURE(to_string(kind));
    for (std::size_t probe : {100u, 317u, 420u}) {
      Strategy a(test_config(kind), s.feature_count(), s.label_count());
      Strategy b(test_config(kind), s.feature_count(), s.label_count());
      a.initialize(init);
      b.initialize(init);
      for (std::size_t i = 100; i < probe; ++i) CHECK(a.step(s.instances[i]) == b.step(s.instances[i]));
      LabeledInstance flipped = s.instances[probe];
      flipped.label = 1 - flipped.label;
      CHECK(a.step(s.instances[probe]) == b.step(flipped));
    }
  }
}

TEST_CASE("initial_learn stays at chance after the concept switches") {
  StrategyConfig c = test_config(StrategyKind::initial_learn);
  c.detector.rho = 1000;
  const Stream s = switching_rule(6000, 3);
  std::vector<bool> hits;
  Strategy learner(c, 2, 2);
  const RunReport r = prequential_run(s, learner, &hits);
  CHECK(r.scored == 5000);
  CHECK(half_accuracy(hits, 0, 2000) >= 0.9);
  const double after = half_accuracy(hits, 2000, 5000);
  CHECK(after >= 0.4);
  CHECK(after <= 0.6);
  CHECK(learner.classifier().nodes().size() > 1);
}

TEST_CASE("regular_update equals a tree fed the same stream") {
  const Stream s = switching_rule(3000, 4);
  const StrategyConfig c = test_config(StrategyKind::regular_update);
  std::vector<bool> hits;
  const RunReport r = run_strategy(s, c, &hits);
  HoeffdingTree tree(2, 2, c.tree);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.instances.size(); ++i) {
    if (i >= c.detector.rho) correct += tree.predict(s.instances[i].features) == s.instances[i].label ? 1 : 0;
    tree.partial_fit(s.instances[i].features, s.instances[i].label);
  }
  CHECK(r.correct == correct);
  CHECK(r.drift_events.empty());
}

TEST_CASE("regular_retrain rebuilds from the trailing window") {
  StrategyConfig c = test_config(StrategyKind::regular_retrain);
  c.retrain_interval = 250;
  const Stream s = switching_rule(1000, 5);
  Strategy learner(c, 2, 2);
  learner.initialize(std::span(s.instances).first(100));
  for (std::size_t i = 100; i < 350; ++i) learner.step(s.instances[i]);
  HoeffdingTree expected(2, 2, c.tree);
  for (std::size_t i = 250; i < 350; ++i) expected.partial_fit(s.instances[i].features, s.instances[i].label);
  CHECK(learner.classifier() == expected);
}

TEST_CASE("driftgan: A,B,A reports a new then a recurring distribution") {
  const Stream s = recurring({"A", "B", "A"}, 1000, 6);
  const RunReport r = run_strategy(s, test_config(StrategyKind::driftgan, 6));
  REQUIRE(r.drift_events.size() == 2);
  CHECK(r.drift_events[0].kind == DriftKind::new_distribution);
  CHECK(r.drift_events[0].distribution == 2);
  CHECK(r.drift_events[1].kind == DriftKind::recurring);
  CHECK(r.drift_events[1].distribution == 1);
  REQUIRE(r.detection.has_value());
  CHECK(r.detection->recurrence_id_accuracy == 1.0);
  CHECK(r.detection->false_alarms == 0);
}

TEST_CASE("driftgan: drifts reset the tree; replay comes only from the matched distribution") {
  const Stream s = recurring({"A", "B", "A"}, 1000, 1);
  Strategy learner(test_config(StrategyKind::driftgan, 1), s.feature_count(), s.label_count());
  learner.initialize(std::span(s.instances).first(100));
  std::size_t seen = 0;
  for (std::size_t i = 100; i < s.instances.size(); ++i) {
    learner.step(s.instances[i]);
    const auto& events = learner.drift_events();
    if (events.size() == seen) continue;
    seen = events.size();
    double weight = 0;
    for (const auto& node : learner.classifier().nodes()) weight += node.is_leaf() ? node.weight() : 0.0;
    if (events.back().kind == DriftKind::new_distribution) {
      CHECK(weight == 50.0);
    } else {
      const auto& stored = learner.detector()->registry().record(events.back().distribution).exemplars;
      CHECK(weight > 50.0);
      CHECK(weight <= static_cast<double>(stored.size()));
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("strategy ordering on the recurring suite") {
  std::size_t ordered = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Stream s = recurring({"A", "B", "A", "B"}, 2000, seed);
    const double gan = run_strategy(s, test_config(StrategyKind::driftgan, seed)).accuracy;
    const double retrain = run_strategy(s, test_config(StrategyKind::regular_retrain, seed)).accuracy;
    const double initial = run_strategy(s, test_config(StrategyKind::initial_learn, seed)).accuracy;
    MESSAGE("seed " << seed << ": driftgan " << gan << ", regular_retrain " << retrain << ", initial_learn "
                    << initial);
    ordered += gan >= retrain && retrain >= initial ? 1 : 0;
  }
  CHECK(ordered >= 8);
}

TEST_CASE("strategies need rho warm-up instances") {
  Strategy s(test_config(StrategyKind::regular_update), 2, 2);
  std::vector<LabeledInstance> few(10, LabeledInstance{{0.0, 0.0}, 0, 0});
  CHECK_THROWS_AS(s.initialize(few), UsageError);
  CHECK_THROWS_AS(s.step(few[0]), UsageError);
}
