#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "treereg/dataset.hpp"
#include "treereg/tree.hpp"

namespace treereg {

// Correlation quantities for one internal node: the chosen split's stump
// correlation, and per feature the best achievable stump correlation plus
// the exact monotone-class supremum in both directions.
struct NodeCorrelation {
  int node_id = -1;
  int depth = 0;
  int64_t count = 0;
  double stump_rho = 0.0;
  std::vector<double> feature_stump_rho;
  std::vector<double> feature_increasing_rho;
  std::vector<double> feature_decreasing_rho;

  double feature_monotone_rho(int j) const {
    return std::max(feature_increasing_rho[static_cast<size_t>(j)],
                    feature_decreasing_rho[static_cast<size_t>(j)]);
  }
  double best_feature_stump_rho() const;
  double best_feature_monotone_rho() const;
};

struct CorrelationReport {
  std::vector<NodeCorrelation> nodes;  // internal nodes only
  bool has_internal = false;
  double rho_H = 0.0;  // min over internal nodes of the best stump correlation
  double rho_M = 0.0;  // same against the monotone class
  std::vector<int64_t> level_max_count;  // N_k for k = 0..depth, over all nodes
  int64_t n_samples = 0;
  double profile_a = 1.0;
  double min_A = 0.0;  // smallest A with N_k <= A n k^a / 2^k for all k >= 1

  /// Per-node rows plus a trailing summary row.
  void export_csv(std::ostream& out) const;
};

/// Pearson correlation between the decision stump at (feature, threshold)
/// and the responses within the node. 0 by convention for a degenerate node.
/// Throws if a daughter is empty.
double stump_correlation(const Dataset& ds, std::span<const int64_t> rows, int feature, double threshold);

/// Exact supremum of |corr(g(x_j), y)| over monotone g, via the isotonic
/// projection in both directions. Tied x values share one fitted value.
double monotone_correlation(const Dataset& ds, std::span<const int64_t> rows, int feature);

CorrelationReport analyze(const Tree& tree, const Dataset& ds);

/// Worst-node best-feature correlations. Throw on a leaf-only tree.
double rho_H(const Tree& tree, const Dataset& ds);
double rho_M(const Tree& tree, const Dataset& ds);

// ---- stump-versus-monotone comparison ------------------------------------

struct Fact1Report {
  int node_id = -1;
  int64_t count = 0;
  double stump_rho = 0.0;
  double denom = 0.0;            // sqrt(1 + log(2 N))
  double best_monotone_rho = 0.0;
  double margin = 0.0;           // stump_rho - best_monotone_rho / denom
  bool holds = false;
  std::vector<double> feature_margins;
};

/// Checks stump_rho >= monotone_rho / sqrt(1 + log(2 N)) for every feature.
Fact1Report check_fact1(const Tree& tree, const Dataset& ds, int node_id);

// ---- step-function comparison ---------------------------------------------

struct StepBoundReport {
  double stump_rho = 0.0;
  double g_corr = 0.0;    // |corr(g(x_j), y)| in the node
  int v = 0;              // constant pieces
  int m = 0;              // stationary intervals (interior local extrema)
  int64_t d_min = 0;      // smallest occupied stationary-piece count
  double denom = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool holds = false;
  bool used_effective = false;  // fell back to the data-restricted structure
};

/// Lower bound on the stump correlation against a registered step function
/// of one feature: stump_rho >= g_corr / sqrt(D^-1 M N + (V-M-1) ^ (1+log 2N)).
StepBoundReport check_stepfn_bound(const Dataset& ds, std::span<const int64_t> rows, int feature,
                                   const StepComponent& g);
StepBoundReport check_stepfn_bound(const Tree& tree, const Dataset& ds, int node_id, int feature,
                                   const StepComponent& g);

// ---- sparse additive comparison -------------------------------------------

struct SparseIneqReport {
  int d0 = 0;
  double max_component_rho2 = 0.0;
  double min_pairwise_corr = 0.0;
  bool nonneg_pairwise = false;      // precondition of the plain-sum form
  double sum_rho2 = 0.0;             // corr^2(sum_j g_j, y)
  double sum_rhs = 0.0;              // sum_rho2 / d0
  bool holds_sum_form = false;       // only meaningful when nonneg_pairwise
  double min_sign_rho2 = 0.0;        // min over sign vectors of corr^2(sum w_j g_j, y)
  double sign_rhs = 0.0;             // min_sign_rho2 / d0
  bool holds_sign_form = false;
  bool holds = false;                // the applicable form
};

/// Component comparison at a node: max_j corr^2(g_j(x_j), y) against
/// corr^2(Y0, y)/d0 where Y0 sums the signal components. When some pairwise
/// component correlation is negative the sign-enumeration form is asserted
/// instead (the plain-sum form is still reported).
SparseIneqReport check_sparse_inequality(const Dataset& ds, std::span<const int64_t> rows,
                                         const std::vector<int>& signal_features,
                                         const std::vector<std::function<double(double)>>& components);

// ---- step-model split separation --------------------------------------------

struct StepSeparationReport {
  int splits_checked = 0;
  int violations = 0;
  bool leaves_pure = false;
  int64_t n_leaves = 0;
  bool holds = false;
};

/// For an additive step model, every split's sample partition must coincide
/// with a cut between two adjacent occupied constant pieces of some
/// component; a fully grown tree then separates the responses exactly.
StepSeparationReport check_step_separation(const Tree& tree, const Dataset& ds,
                                           const std::vector<StepComponent>& components,
                                           const std::vector<int>& signal_features);

// ---- node-size profile and depth-K training bound --------------------------

struct AssumptionProfile {
  double a = 0.0;
  std::vector<int64_t> level_max;  // N_k for k = 0..depth
  double min_A = 0.0;              // smallest A with N_k <= A n k^a / 2^k for all k >= 1
  int depth = 0;
};

AssumptionProfile assumption_profile(const Tree& tree, double a);

struct DepthBoundReport {
  bool applicable = false;  // K < log2(4 K^a A n) with K >= 1 (K = 0 is vacuous)
  double K = 0.0;
  double L = 0.0;           // log2(4 K^a A n)
  double rho_M = 0.0;
  double lhs = 0.0;         // training error of the grown tree
  double rhs = 0.0;         // sigma_Y^2 (1 - K/L)^(rho_M^2)
  bool holds = false;
};

DepthBoundReport check_depth_training_bound(const Tree& tree, const Dataset& ds, const AssumptionProfile& profile);

// ---- depth truncations -----------------------------------------------------

/// Training error of the depth-k truncation of a grown tree, k = 0..depth.
std::vector<double> truncation_errors(const Tree& tree);

/// Worst internal-node stump correlation among nodes of depth < k, for
/// k = 0..depth (entry 0 unused; chosen-split statistics route).
std::vector<double> truncation_rho_H(const Tree& tree);

}  // namespace treereg
