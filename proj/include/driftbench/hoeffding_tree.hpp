#ifndef DRIFTBENCH_HOEFFDING_TREE_HPP
#define DRIFTBENCH_HOEFFDING_TREE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "driftbench/types.hpp"

namespace driftbench {

/// ε = sqrt(R² ln(1/δ) / (2n)).
double hoeffding_bound(double range, double delta, std::size_t n);

struct TreeConfig {
  std::size_t grace_period = 200;
  double split_confidence = 1e-7;
  double tie_threshold = 0.05;
  std::size_t split_candidates = 10;  // thresholds tried per numeric feature
  double min_branch_fraction = 0.01;  // smallest weight share either child may receive

  void validate() const;
};

/// Running mean/variance of one feature for one label (Welford).
struct GaussianEstimator {
  double weight = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void update(double x, double w = 1.0);
  double variance() const;
  /// Weight expected at or below `threshold` under the fitted Gaussian.
  double weight_below(double threshold) const;

  friend bool operator==(const GaussianEstimator&, const GaussianEstimator&) = default;
};

struct TreeNode {
  std::vector<double> label_weights;
  // Leaf statistics; empty once the node splits.
  std::vector<std::vector<GaussianEstimator>> estimators;  // [feature][label]
  std::vector<double> feature_min, feature_max;
  double weight_at_last_check = 0.0;
  // Split; feature < 0 for leaves.
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0, right = 0;

  bool is_leaf() const { return feature < 0; }
  double weight() const;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Very Fast Decision Tree with Gaussian-estimator binary numeric splits and
/// information-gain split selection. Deterministic: no randomness anywhere.
class HoeffdingTree {
 public:
  HoeffdingTree(std::size_t feature_count, std::size_t label_count, TreeConfig config = {});

  /// Majority label of the leaf `x` falls into, ties to the lowest label.
  int predict(std::span<const double> x) const;
  void partial_fit(std::span<const double> x, int y);
  /// Back to a single empty leaf; feature and label counts are kept.
  void reset();

  std::size_t feature_count() const { return feature_count_; }
  std::size_t label_count() const { return label_count_; }
  const TreeConfig& config() const { return config_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  nlohmann::json to_json() const;

  friend bool operator==(const HoeffdingTree& a, const HoeffdingTree& b) {
    return a.feature_count_ == b.feature_count_ && a.label_count_ == b.label_count_ && a.nodes_ == b.nodes_;
  }

 private:
  struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double merit = 0.0;
    std::vector<double> left, right;
  };

  std::size_t leaf_for(std::span<const double> x) const;
  void check_width(std::span<const double> x) const;
  TreeNode make_leaf(std::vector<double> label_weights) const;
  Candidate best_split_for(const TreeNode& leaf, std::size_t feature) const;
  void attempt_split(std::size_t node);

  std::size_t feature_count_;
  std::size_t label_count_;
  TreeConfig config_;
  std::vector<TreeNode> nodes_;
};

/// Entropy (bits) of a weight vector.
double entropy(std::span<const double> weights);

}  // namespace driftbench

#endif  // DRIFTBENCH_HOEFFDING_TREE_HPP
