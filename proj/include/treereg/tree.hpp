#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treereg/dataset.hpp"

namespace treereg {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;  // impurity decrease of the split
  int64_t left_count = 0;
  int64_t right_count = 0;

  bool valid() const { return feature >= 0; }
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Arena node. `samples` holds row ids in ascending order; a sample with
// x[feature] <= threshold is routed left.
struct TreeNode {
  int id = -1;
  int depth = 0;
  int64_t count = 0;
  double mean = 0.0;
  double impurity = 0.0;  // within-node population variance of the response
  std::vector<int64_t> samples;
  std::vector<Interval> box;
  SplitCandidate split;   // valid iff internal
  int left = -1;
  int right = -1;

  bool is_leaf() const { return left < 0; }
};

class Tree {
 public:
  std::vector<TreeNode> nodes;
  int root = 0;
  int depth_limit = 0;  // K passed to grow
  int n_features = 0;
  int64_t n_samples = 0;

  const TreeNode& node(int id) const { return nodes[static_cast<size_t>(id)]; }
  TreeNode& node(int id) { return nodes[static_cast<size_t>(id)]; }

  /// Routes a point to its leaf; ties (x == threshold) go left.
  int leaf_for(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Dataset& ds) const;

  std::vector<int> leaf_ids() const;
  std::vector<int> internal_ids() const;
  int64_t leaf_count() const;
  /// Deepest node level actually present.
  int achieved_depth() const;
  /// Parent id per node (-1 for root).
  std::vector<int> parents() const;

  /// Training error as the leaf-weighted impurity sum over current leaves,
  /// computed from node statistics: sum over leaves of (N(t)/n) * impurity(t).
  double leaf_error_sum() const;

  /// Re-derives per-node sample sets by routing every row of `ds` through the
  /// splits (used after deserialization; statistics are kept as stored).
  void assign_samples(const Dataset& ds);

  std::string to_json() const;
  static Tree from_json(const std::string& text);
};

/// Within-node sample variance (divisor N). Throws on an empty node.
double node_impurity(std::span<const double> responses);

/// Impurity decrease of splitting `rows` at (feature, threshold), product
/// form P_L * P_R * (mean_L - mean_R)^2. Throws if a daughter is empty.
double impurity_decrease(const Dataset& ds, std::span<const int64_t> rows, int feature, double threshold);

/// Same quantity via the parent-minus-daughters route (two-pass variances).
/// Kept as an independent algebraic path for cross-checking.
double impurity_decrease_two_pass(const Dataset& ds, std::span<const int64_t> rows, int feature,
                                  double threshold);

/// Exhaustive search over features and midpoint thresholds, one sorted pass
/// per feature with compensated running sums. Ties within 1e-12 relative
/// resolve to the smallest feature index, then the smallest threshold.
/// Empty optional when no candidate exists (every coordinate constant).
std::optional<SplitCandidate> best_split(const Dataset& ds, std::span<const int64_t> rows);

/// Restriction of best_split to a single feature.
std::optional<SplitCandidate> best_split_on_feature(const Dataset& ds, std::span<const int64_t> rows,
                                                    int feature);

/// Greedy recursive growth. A node becomes a leaf when it holds a single
/// sample, all its responses are equal, depth K is reached, or no split
/// candidate exists.
Tree grow(const Dataset& ds, int max_depth);

/// Mean squared error of tree predictions over the given dataset.
double training_error(const Tree& tree, const Dataset& ds);
double test_error(const Tree& tree, const Dataset& ds);

}  // namespace treereg
