#include "driftbench/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace driftbench {

double hoeffding_bound(double range, double delta, std::size_t n) {
  if (!(range > 0.0)) throw UsageError("hoeffding_bound needs R > 0");
  if (!(delta > 0.0 && delta <= 1.0)) throw UsageError("hoeffding_bound needs 0 < delta <= 1");
  if (n == 0) throw UsageError("hoeffding_bound needs n >= 1");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

void TreeConfig::validate() const {
  if (grace_period == 0) throw UsageError("grace_period must be at least 1");
  if (!(split_confidence > 0.0 && split_confidence < 1.0)) throw UsageError("split_confidence must lie in (0, 1)");
  if (!(tie_threshold >= 0.0)) throw UsageError("tie_threshold must be non-negative");
  if (split_candidates == 0) throw UsageError("split_candidates must be at least 1");
  if (!(min_branch_fraction >= 0.0 && min_branch_fraction < 0.5)) {
    throw UsageError("min_branch_fraction must lie in [0, 0.5)");
  }
}

void GaussianEstimator::update(double x, double w) {
  weight += w;
  const double delta = x - mean;
  mean += w * delta / weight;
  m2 += w * delta * (x - mean);
}

double GaussianEstimator::variance() const { return weight > 1.0 ? m2 / (weight - 1.0) : 0.0; }

double GaussianEstimator::weight_below(double threshold) const {
  if (weight <= 0.0) return 0.0;
  const double sd = std::sqrt(variance());
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) return threshold >= mean ? weight : 0.0;
  return weight * 0.5 * std::erfc(-(threshold - mean) / (sd * std::sqrt(2.0)));
}

double TreeNode::weight() const { return std::accumulate(label_weights.begin(), label_weights.end(), 0.0); }

double entropy(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= (w / total) * std::log2(w / total);
  }
  return h;
}

HoeffdingTree::HoeffdingTree(std::size_t feature_count, std::size_t label_count, TreeConfig config)
    : feature_count_(feature_count), label_count_(label_count), config_(config) {
  if (feature_count_ == 0) throw UsageError("a tree needs at least one feature");
  if (label_count_ == 0) throw UsageError("a tree needs at least one label");
  config_.validate();
  reset();
}

void HoeffdingTree::reset() {
  nodes_.clear();
  nodes_.push_back(make_leaf(std::vector<double>(label_count_, 0.0)));
}

TreeNode HoeffdingTree::make_leaf(std::vector<double> label_weights) const {
  TreeNode leaf;
  leaf.label_weights = std::move(label_weights);
  leaf.estimators.assign(feature_count_, std::vector<GaussianEstimator>(label_count_));
  leaf.feature_min.assign(feature_count_, std::numeric_limits<double>::infinity());
  leaf.feature_max.assign(feature_count_, -std::numeric_limits<double>::infinity());
  leaf.weight_at_last_check = leaf.weight();
  return leaf;
}

void HoeffdingTree::check_width(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw UsageError("tree expects " + std::to_string(feature_count_) + " features, got " + std::to_string(x.size()));
  }
}

std::size_t HoeffdingTree::leaf_for(std::span<const double> x) const {
  std::size_t node = 0;
  while (!nodes_[node].is_leaf()) {
    const TreeNode& split = nodes_[node];
    node = x[static_cast<std::size_t>(split.feature)] <= split.threshold ? split.left : split.right;
  }
  return node;
}

int HoeffdingTree::predict(std::span<const double> x) const {
  check_width(x);
  const auto& weights = nodes_[leaf_for(x)].label_weights;
  // max_element keeps the first maximum, so ties go to the lowest label.
  return static_cast<int>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

void HoeffdingTree::partial_fit(std::span<const double> x, int y) {
  check_width(x);
  if (y < 0 || static_cast<std::size_t>(y) >= label_count_) {
    throw UsageError("label " + std::to_string(y) + " outside [0, " + std::to_string(label_count_) + ")");
  }
  const std::size_t node = leaf_for(x);
  TreeNode& leaf = nodes_[node];
  leaf.label_weights[static_cast<std::size_t>(y)] += 1.0;
  for (std::size_t f = 0; f < feature_count_; ++f) {
    leaf.estimators[f][static_cast<std::size_t>(y)].update(x[f]);
    leaf.feature_min[f] = std::min(leaf.feature_min[f], x[f]);
    leaf.feature_max[f] = std::max(leaf.feature_max[f], x[f]);
  }
  if (leaf.weight() - leaf.weight_at_last_check >= static_cast<double>(config_.grace_period)) {
    leaf.weight_at_last_check = leaf.weight();
    attempt_split(node);
  }
}

HoeffdingTree::Candidate HoeffdingTree::best_split_for(const TreeNode& leaf, std::size_t feature) const {
  Candidate best;
  best.merit = -std::numeric_limits<double>::infinity();
  const double lo = leaf.feature_min[feature];
  const double hi = leaf.feature_max[feature];
  if (!(hi > lo)) return best;

  const auto& per_label = leaf.estimators[feature];
  std::vector<double> parent(label_count_);
  for (std::size_t c = 0; c < label_count_; ++c) parent[c] = per_label[c].weight;
  const double total = std::accumulate(parent.begin(), parent.end(), 0.0);
  const double parent_entropy = entropy(parent);

  std::vector<double> left(label_count_), right(label_count_);
  for (std::size_t i = 1; i <= config_.split_candidates; ++i) {
    const double threshold = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(config_.split_candidates + 1);
    for (std::size_t c = 0; c < label_count_; ++c) {
      left[c] = std::clamp(per_label[c].weight_below(threshold), 0.0, parent[c]);
      right[c] = parent[c] - left[c];
    }
    const double left_total = std::accumulate(left.begin(), left.end(), 0.0);
    const double right_total = total - left_total;
    if (left_total < config_.min_branch_fraction * total || right_total < config_.min_branch_fraction * total) continue;
    if (left_total <= 0.0 || right_total <= 0.0) continue;
    const double merit =
        parent_entropy - (left_total / total) * entropy(left) - (right_total / total) * entropy(right);
    if (merit > best.merit) {
      best.feature = static_cast<int>(feature);
      best.threshold = threshold;
      best.merit = merit;
      best.left = left;
      best.right = right;
    }
  }
  return best;
}

void HoeffdingTree::attempt_split(std::size_t node) {
  const TreeNode& leaf = nodes_[node];
  const auto labels_seen =
      std::count_if(leaf.label_weights.begin(), leaf.label_weights.end(), [](double w) { return w > 0.0; });
  if (labels_seen < 2) return;

  std::vector<Candidate> candidates;
  for (std::size_t f = 0; f < feature_count_; ++f) {
    Candidate c = best_split_for(leaf, f);
    if (c.feature >= 0) candidates.push_back(std::move(c));
  }
  if (candidates.empty()) return;
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.merit > b.merit; });
  const Candidate& best = candidates.front();
  // Not splitting has merit 0 and always competes.
  const double second = candidates.size() > 1 ? std::max(candidates[1].merit, 0.0) : 0.0;

  double observed = 0.0;
  for (const auto& est : leaf.estimators.front()) observed += est.weight;
  const double range = std::log2(static_cast<double>(std::max<std::size_t>(label_count_, 2)));
  const double eps = hoeffding_bound(range, config_.split_confidence,
                                     std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(observed))));
  if (!(best.merit > 0.0)) return;
  if (!(best.merit - second > eps || eps < config_.tie_threshold)) return;

  TreeNode left = make_leaf(best.left);
  TreeNode right = make_leaf(best.right);
  const std::size_t left_index = nodes_.size();
  nodes_.push_back(std::move(left));
  nodes_.push_back(std::move(right));
  TreeNode& split = nodes_[node];
  split.feature = best.feature;
  split.threshold = best.threshold;
  split.left = left_index;
  split.right = left_index + 1;
  split.estimators.clear();
  split.feature_min.clear();
  split.feature_max.clear();
}

std::size_t HoeffdingTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t HoeffdingTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json HoeffdingTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json j{{"label_weights", n.label_weights}};
    if (!n.is_leaf()) {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["children"] = {n.left, n.right};
    }
    nodes.push_back(std::move(j));
  }
  return {{"features", feature_count_}, {"labels", label_count_}, {"nodes", std::move(nodes)}};
}

}  // namespace driftbench
