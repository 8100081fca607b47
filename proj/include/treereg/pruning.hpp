#pragma once

#include <iosfwd>
#include <vector>

#include "treereg/tree.hpp"

namespace treereg {

// One collapse event on the regularization path. `collapsed` holds the
// topmost node ids whose subtrees become leaves at this critical temperature
// (every weakest link is collapsed simultaneously, so ties fall together).
struct PruneStep {
  double alpha = 0.0;
  std::vector<int> collapsed;
  int64_t n_leaves = 0;
  double train_err = 0.0;  // leaf-weighted impurity sum of the step's subtree
};

// Nested sequence of cost-complexity minimizers. Step 0 is the input tree
// (the alpha = 0 regime); the terminal step is the root-only tree. Critical
// temperatures are strictly increasing, and the subtree at step k minimizes
// err + alpha * |leaves| for every alpha in [alpha_k, alpha_{k+1}).
class PrunePath {
 public:
  PrunePath(Tree tree, std::vector<PruneStep> steps);

  const Tree& tree() const { return tree_; }
  const std::vector<PruneStep>& steps() const { return steps_; }

  /// Index of the path step whose critical-temperature interval contains
  /// alpha (alpha >= 0).
  int select_index(double alpha) const;

  /// Materializes the subtree at a given step as a standalone tree
  /// (preorder-renumbered; step 0 reproduces the input tree).
  Tree materialize(int step_index) const;

  /// The smallest subtree minimizing err + alpha * |leaves|.
  Tree select_subtree(double alpha) const;

  /// CSV rows (step, critical_alpha, n_leaves, training_error).
  void export_csv(std::ostream& out) const;

 private:
  Tree tree_;
  std::vector<PruneStep> steps_;
};

/// Weakest-link construction: repeatedly collapses every internal node whose
/// per-leaf error increase attains the current minimum.
PrunePath prune_path(const Tree& tree);

/// Temperature threshold scale * 27 B^2 (d+1) log(2 e n / (d+1)) / n.
/// Requires n > (d+1)/2. With scale slightly above 1 the strict inequality
/// of the oracle bound is met; as a function of (n, d) this is of order
/// (d/n) log(n/d), so `scale` also serves as the practical tuning dial.
double default_temperature(int64_t n, int d, double response_bound, double scale);

}  // namespace treereg
