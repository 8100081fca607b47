#include "treereg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "treereg/isotonic.hpp"
#include "treereg/stats.hpp"

namespace treereg {

namespace {

constexpr double kCheckTol = 1e-9;

std::vector<double> centered(const Dataset& ds, std::span<const int64_t> rows) {
  std::vector<double> z = gather(ds.response, rows);
  const double m = mean(z);
  for (double& v : z) v -= m;
  return z;
}

double clamp01_low(double v) { return v < 0.0 ? 0.0 : v; }

double stump_rho_from_stats(const TreeNode& nd) {
  if (!(nd.impurity > 0.0)) return 0.0;
  const double r2 = nd.split.decrease / nd.impurity;
  return std::sqrt(clamp01_low(r2));
}

// Non-decreasing-class supremum of corr(g(x_j), z): the cosine between z and
// its isotonic projection, with tied x pooled so fitted values are a
// function of x.
double directional_monotone_rho(std::span<const double> xs, std::span<const double> z) {
  const size_t n = z.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });

  std::vector<double> group_mean, group_w;
  std::vector<size_t> group_of(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    KahanSum s;
    while (j < n && xs[order[j]] == xs[order[i]]) {
      s.add(z[order[j]]);
      ++j;
    }
    const size_t g = group_mean.size();
    for (size_t k = i; k < j; ++k) group_of[order[k]] = g;
    group_mean.push_back(s.value() / static_cast<double>(j - i));
    group_w.push_back(static_cast<double>(j - i));
    i = j;
  }
  if (group_mean.size() < 2) return 0.0;
  const std::vector<double> fit_groups = isotonic_fit(group_mean, group_w);
  std::vector<double> fit(n);
  for (size_t k = 0; k < n; ++k) fit[k] = fit_groups[group_of[k]];
  return clamp01_low(pearson(fit, z));
}

}  // namespace

double stump_correlation(const Dataset& ds, std::span<const int64_t> rows, int feature, double threshold) {
  if (rows.empty()) throw ValidationError("stump_correlation: empty node");
  const std::vector<double> z = centered(ds, rows);
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  KahanSum left_sum;
  int64_t nl = 0;
  for (size_t k = 0; k < rows.size(); ++k) {
    if (col[static_cast<size_t>(rows[k])] <= threshold) {
      left_sum.add(z[k]);
      ++nl;
    }
  }
  const int64_t n = static_cast<int64_t>(rows.size());
  const int64_t nr = n - nl;
  if (nl == 0 || nr == 0) throw ValidationError("stump_correlation: split induces an empty daughter");
  const double total = kahan_total(z);
  const double mean_l = left_sum.value() / static_cast<double>(nl);
  const double mean_r = (total - left_sum.value()) / static_cast<double>(nr);
  std::vector<double> stump(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    stump[k] = (col[static_cast<size_t>(rows[k])] <= threshold) ? mean_l : mean_r;
  }
  return clamp01_low(pearson(stump, z));
}

double monotone_correlation(const Dataset& ds, std::span<const int64_t> rows, int feature) {
  if (rows.empty()) throw ValidationError("monotone_correlation: empty node");
  const std::vector<double> z = centered(ds, rows);
  std::vector<double> xs(rows.size());
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  for (size_t k = 0; k < rows.size(); ++k) xs[k] = col[static_cast<size_t>(rows[k])];

  const double inc = directional_monotone_rho(xs, z);
  std::vector<double> neg(z.size());
  for (size_t k = 0; k < z.size(); ++k) neg[k] = -z[k];
  const double dec = directional_monotone_rho(xs, neg);
  return std::max(inc, dec);
}

double NodeCorrelation::best_feature_stump_rho() const {
  double best = 0.0;
  for (double v : feature_stump_rho) best = std::max(best, v);
  return best;
}

double NodeCorrelation::best_feature_monotone_rho() const {
  double best = 0.0;
  for (size_t j = 0; j < feature_increasing_rho.size(); ++j) {
    best = std::max({best, feature_increasing_rho[j], feature_decreasing_rho[j]});
  }
  return best;
}

CorrelationReport analyze(const Tree& tree, const Dataset& ds) {
  CorrelationReport report;
  report.n_samples = tree.n_samples;
  report.level_max_count.assign(static_cast<size_t>(tree.achieved_depth()) + 1, 0);
  for (const auto& nd : tree.nodes) {
    auto& lvl = report.level_max_count[static_cast<size_t>(nd.depth)];
    lvl = std::max(lvl, nd.count);
  }
  for (size_t k = 1; k < report.level_max_count.size(); ++k) {
    const double cap = static_cast<double>(tree.n_samples) *
                       std::pow(static_cast<double>(k), report.profile_a) / std::pow(2.0, static_cast<double>(k));
    report.min_A = std::max(report.min_A, static_cast<double>(report.level_max_count[k]) / cap);
  }
  double min_stump = std::numeric_limits<double>::infinity();
  double min_mono = std::numeric_limits<double>::infinity();
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf()) continue;
    NodeCorrelation nc;
    nc.node_id = nd.id;
    nc.depth = nd.depth;
    nc.count = nd.count;
    nc.stump_rho = stump_rho_from_stats(nd);
    nc.feature_stump_rho.resize(static_cast<size_t>(ds.d()), 0.0);
    nc.feature_increasing_rho.resize(static_cast<size_t>(ds.d()), 0.0);
    nc.feature_decreasing_rho.resize(static_cast<size_t>(ds.d()), 0.0);
    const std::vector<double> z = centered(ds, nd.samples);
    std::vector<double> neg(z.size());
    for (size_t k = 0; k < z.size(); ++k) neg[k] = -z[k];
    std::vector<double> xs(nd.samples.size());
    for (int j = 0; j < ds.d(); ++j) {
      auto cand = best_split_on_feature(ds, nd.samples, j);
      if (cand && nd.impurity > 0.0) {
        nc.feature_stump_rho[static_cast<size_t>(j)] =
            std::sqrt(clamp01_low(cand->decrease / nd.impurity));
      }
      const auto& col = ds.columns[static_cast<size_t>(j)];
      for (size_t k = 0; k < nd.samples.size(); ++k) xs[k] = col[static_cast<size_t>(nd.samples[k])];
      nc.feature_increasing_rho[static_cast<size_t>(j)] = directional_monotone_rho(xs, z);
      nc.feature_decreasing_rho[static_cast<size_t>(j)] = directional_monotone_rho(xs, neg);
    }
    min_stump = std::min(min_stump, nc.best_feature_stump_rho());
    min_mono = std::min(min_mono, nc.best_feature_monotone_rho());
    report.nodes.push_back(std::move(nc));
  }
  report.has_internal = !report.nodes.empty();
  report.rho_H = report.has_internal ? min_stump : std::numeric_limits<double>::quiet_NaN();
  report.rho_M = report.has_internal ? min_mono : std::numeric_limits<double>::quiet_NaN();
  return report;
}

double rho_H(const Tree& tree, const Dataset& ds) {
  const CorrelationReport r = analyze(tree, ds);
  if (!r.has_internal) throw ValidationError("rho_H: undefined for a leaf-only tree");
  return r.rho_H;
}

double rho_M(const Tree& tree, const Dataset& ds) {
  const CorrelationReport r = analyze(tree, ds);
  if (!r.has_internal) throw ValidationError("rho_M: undefined for a leaf-only tree");
  return r.rho_M;
}

void CorrelationReport::export_csv(std::ostream& out) const {
  out << "node_id,depth,count,stump_rho,best_stump_rho,best_monotone_rho\n";
  for (const auto& nc : nodes) {
    out << nc.node_id << ',' << nc.depth << ',' << nc.count << ',' << nc.stump_rho << ','
        << nc.best_feature_stump_rho() << ',' << nc.best_feature_monotone_rho() << '\n';
  }
  out << "summary,rho_H," << rho_H << ",rho_M," << rho_M << ",min_A," << min_A << ",levels,";
  for (size_t k = 0; k < level_max_count.size(); ++k) {
    out << level_max_count[k] << (k + 1 < level_max_count.size() ? ';' : '\n');
  }
}

Fact1Report check_fact1(const Tree& tree, const Dataset& ds, int node_id) {
  const TreeNode& nd = tree.node(node_id);
  if (nd.is_leaf()) throw ValidationError("check_fact1: node is a leaf");
  Fact1Report rep;
  rep.node_id = node_id;
  rep.count = nd.count;
  rep.stump_rho = stump_rho_from_stats(nd);
  rep.denom = std::sqrt(1.0 + std::log(2.0 * static_cast<double>(nd.count)));
  rep.feature_margins.resize(static_cast<size_t>(ds.d()));
  double best_mono = 0.0;
  for (int j = 0; j < ds.d(); ++j) {
    const double mono = monotone_correlation(ds, nd.samples, j);
    best_mono = std::max(best_mono, mono);
    rep.feature_margins[static_cast<size_t>(j)] = rep.stump_rho - mono / rep.denom;
  }
  rep.best_monotone_rho = best_mono;
  rep.margin = rep.stump_rho - best_mono / rep.denom;
  rep.holds = rep.margin >= -kCheckTol;
  return rep;
}

namespace {

struct RunProfile {
  std::vector<double> values;   // run values in x-order
  std::vector<int64_t> counts;  // data points per run
};

// Occupied-piece structure of a step function restricted to the node's data:
// consecutive equal values merge (an unoccupied piece between equal levels is
// invisible to the data).
RunProfile empirical_runs(const StepComponent& g, std::span<const double> xs_sorted) {
  RunProfile prof;
  for (double x : xs_sorted) {
    const double v = g(x);
    if (!prof.values.empty() && prof.values.back() == v) {
      ++prof.counts.back();
    } else {
      prof.values.push_back(v);
      prof.counts.push_back(1);
    }
  }
  return prof;
}

// interior local extrema of a value sequence
int count_extrema(const std::vector<double>& vals) {
  int m = 0;
  for (size_t k = 1; k + 1 < vals.size(); ++k) {
    const double dl = vals[k] - vals[k - 1];
    const double dr = vals[k + 1] - vals[k];
    if (dl * dr < 0.0) ++m;
  }
  return m;
}

}  // namespace

StepBoundReport check_stepfn_bound(const Dataset& ds, std::span<const int64_t> rows, int feature,
                                   const StepComponent& g) {
  g.validate();
  if (rows.size() < 2) throw ValidationError("check_stepfn_bound: need at least two samples");
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  std::vector<double> xs(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) xs[k] = col[static_cast<size_t>(rows[k])];

  StepBoundReport rep;
  const auto split = best_split(ds, rows);
  const std::vector<double> y = gather(ds.response, rows);
  const double imp = node_impurity(y);
  if (split && imp > 0.0) rep.stump_rho = std::sqrt(clamp01_low(split->decrease / imp));

  std::vector<double> gx(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) gx[k] = g(xs[k]);
  rep.g_corr = std::abs(pearson(gx, y));

  const double n = static_cast<double>(rows.size());

  // registered structure, with occupancy counted from the node's data
  const int v_reg = g.pieces();
  int m_reg = count_extrema(g.levels);
  std::vector<int64_t> piece_counts(static_cast<size_t>(v_reg), 0);
  for (double x : xs) ++piece_counts[static_cast<size_t>(g.piece_index(x))];
  int64_t d_reg = std::numeric_limits<int64_t>::max();
  bool any_stationary_occupied = false;
  for (size_t k = 1; k + 1 < g.levels.size(); ++k) {
    const double dl = g.levels[k] - g.levels[k - 1];
    const double dr = g.levels[k + 1] - g.levels[k];
    if (dl * dr < 0.0 && piece_counts[k] >= 1) {
      any_stationary_occupied = true;
      d_reg = std::min(d_reg, piece_counts[k]);
    }
  }

  if (m_reg > 0 && !any_stationary_occupied) {
    // the data never sees a direction change: use the data-restricted profile
    std::vector<double> xs_sorted = xs;
    std::sort(xs_sorted.begin(), xs_sorted.end());
    const RunProfile prof = empirical_runs(g, xs_sorted);
    rep.used_effective = true;
    rep.v = static_cast<int>(prof.values.size());
    rep.m = count_extrema(prof.values);
    int64_t d_eff = std::numeric_limits<int64_t>::max();
    for (size_t k = 1; k + 1 < prof.values.size(); ++k) {
      const double dl = prof.values[k] - prof.values[k - 1];
      const double dr = prof.values[k + 1] - prof.values[k];
      if (dl * dr < 0.0) d_eff = std::min(d_eff, prof.counts[k]);
    }
    rep.d_min = (rep.m > 0) ? d_eff : 0;
  } else {
    rep.v = v_reg;
    rep.m = m_reg;
    rep.d_min = (m_reg > 0) ? d_reg : 0;
  }

  const double log_term = 1.0 + std::log(2.0 * n);
  const double tail = std::min(static_cast<double>(rep.v - rep.m - 1), log_term);
  const double stationary_term =
      (rep.m > 0) ? static_cast<double>(rep.m) * n / static_cast<double>(rep.d_min) : 0.0;
  const double denom_sq = stationary_term + tail;
  if (!(denom_sq > 0.0)) {
    // constant-on-data g: correlation is 0 and the bound is vacuous
    rep.denom = 0.0;
    rep.bound = 0.0;
    rep.margin = rep.stump_rho;
    rep.holds = rep.g_corr <= kCheckTol;
    return rep;
  }
  rep.denom = std::sqrt(denom_sq);
  rep.bound = rep.g_corr / rep.denom;
  rep.margin = rep.stump_rho - rep.bound;
  rep.holds = rep.margin >= -kCheckTol;
  return rep;
}

StepBoundReport check_stepfn_bound(const Tree& tree, const Dataset& ds, int node_id, int feature,
                                   const StepComponent& g) {
  return check_stepfn_bound(ds, tree.node(node_id).samples, feature, g);
}

SparseIneqReport check_sparse_inequality(const Dataset& ds, std::span<const int64_t> rows,
                                         const std::vector<int>& signal_features,
                                         const std::vector<std::function<double(double)>>& components) {
  if (signal_features.size() != components.size() || components.empty()) {
    throw ValidationError("check_sparse_inequality: need one component function per signal feature");
  }
  const int d0 = static_cast<int>(components.size());
  if (d0 > 20) throw ValidationError("check_sparse_inequality: sign enumeration limited to d0 <= 20");
  SparseIneqReport rep;
  rep.d0 = d0;

  const std::vector<double> y = gather(ds.response, rows);
  std::vector<std::vector<double>> comp_vals(static_cast<size_t>(d0));
  for (int c = 0; c < d0; ++c) {
    const auto& col = ds.columns[static_cast<size_t>(signal_features[static_cast<size_t>(c)])];
    auto& vals = comp_vals[static_cast<size_t>(c)];
    vals.resize(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
      vals[k] = components[static_cast<size_t>(c)](col[static_cast<size_t>(rows[k])]);
    }
  }

  rep.max_component_rho2 = 0.0;
  for (int c = 0; c < d0; ++c) {
    const double r = pearson(comp_vals[static_cast<size_t>(c)], y);
    rep.max_component_rho2 = std::max(rep.max_component_rho2, r * r);
  }

  rep.min_pairwise_corr = 1.0;
  for (int a = 0; a < d0; ++a) {
    for (int b = a + 1; b < d0; ++b) {
      rep.min_pairwise_corr =
          std::min(rep.min_pairwise_corr, pearson(comp_vals[static_cast<size_t>(a)], comp_vals[static_cast<size_t>(b)]));
    }
  }
  rep.nonneg_pairwise = rep.min_pairwise_corr >= 0.0 || d0 == 1;

  std::vector<double> sum_vals(rows.size(), 0.0);
  for (int c = 0; c < d0; ++c) {
    for (size_t k = 0; k < rows.size(); ++k) sum_vals[k] += comp_vals[static_cast<size_t>(c)][k];
  }
  const double sum_r = pearson(sum_vals, y);
  rep.sum_rho2 = sum_r * sum_r;
  rep.sum_rhs = rep.sum_rho2 / d0;
  rep.holds_sum_form = rep.max_component_rho2 >= rep.sum_rhs - kCheckTol;

  // sign enumeration over centered component covariances
  const double my = mean(y);
  std::vector<double> yc(y.size());
  for (size_t k = 0; k < y.size(); ++k) yc[k] = y[k] - my;
  std::vector<std::vector<double>> cc(static_cast<size_t>(d0));
  std::vector<double> cy(static_cast<size_t>(d0));
  std::vector<std::vector<double>> cov(static_cast<size_t>(d0), std::vector<double>(static_cast<size_t>(d0)));
  for (int c = 0; c < d0; ++c) {
    auto& vals = cc[static_cast<size_t>(c)];
    vals = comp_vals[static_cast<size_t>(c)];
    const double m = mean(vals);
    for (double& v : vals) v -= m;
  }
  KahanSum vy;
  for (double v : yc) vy.add(v * v);
  const double var_y = vy.value();
  for (int a = 0; a < d0; ++a) {
    KahanSum s;
    for (size_t k = 0; k < yc.size(); ++k) s.add(cc[static_cast<size_t>(a)][k] * yc[k]);
    cy[static_cast<size_t>(a)] = s.value();
    for (int b = a; b < d0; ++b) {
      KahanSum t;
      for (size_t k = 0; k < yc.size(); ++k) t.add(cc[static_cast<size_t>(a)][k] * cc[static_cast<size_t>(b)][k]);
      cov[static_cast<size_t>(a)][static_cast<size_t>(b)] = t.value();
      cov[static_cast<size_t>(b)][static_cast<size_t>(a)] = t.value();
    }
  }
  double min_rho2 = std::numeric_limits<double>::infinity();
  const uint64_t half = 1ULL << (d0 - 1);  // rho^2 is invariant under a global sign flip
  std::vector<double> w(static_cast<size_t>(d0));
  for (uint64_t mask = 0; mask < half; ++mask) {
    w[0] = 1.0;
    for (int c = 1; c < d0; ++c) w[static_cast<size_t>(c)] = (mask >> (c - 1)) & 1 ? -1.0 : 1.0;
    double num = 0.0, var = 0.0;
    for (int a = 0; a < d0; ++a) {
      num += w[static_cast<size_t>(a)] * cy[static_cast<size_t>(a)];
      for (int b = 0; b < d0; ++b) {
        var += w[static_cast<size_t>(a)] * w[static_cast<size_t>(b)] * cov[static_cast<size_t>(a)][static_cast<size_t>(b)];
      }
    }
    const double rho2 = (var > 0.0 && var_y > 0.0) ? num * num / (var * var_y) : 0.0;
    min_rho2 = std::min(min_rho2, rho2);
  }
  rep.min_sign_rho2 = min_rho2;
  rep.sign_rhs = min_rho2 / d0;
  rep.holds_sign_form = rep.max_component_rho2 >= rep.sign_rhs - kCheckTol;

  rep.holds = rep.nonneg_pairwise ? rep.holds_sum_form : rep.holds_sign_form;
  return rep;
}

StepSeparationReport check_step_separation(const Tree& tree, const Dataset& ds,
                                           const std::vector<StepComponent>& components,
                                           const std::vector<int>& signal_features) {
  if (components.size() != signal_features.size()) {
    throw ValidationError("check_step_separation: one feature per component required");
  }
  StepSeparationReport rep;
  // piece index per (row, component)
  std::vector<std::vector<int>> piece(components.size(), std::vector<int>(static_cast<size_t>(ds.n())));
  for (size_t c = 0; c < components.size(); ++c) {
    const auto& col = ds.columns[static_cast<size_t>(signal_features[c])];
    for (int64_t i = 0; i < ds.n(); ++i) {
      piece[c][static_cast<size_t>(i)] = components[c].piece_index(col[static_cast<size_t>(i)]);
    }
  }
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf()) continue;
    ++rep.splits_checked;
    const auto& left = tree.node(nd.left).samples;
    const auto& right = tree.node(nd.right).samples;
    bool compliant = false;
    for (size_t c = 0; c < components.size() && !compliant; ++c) {
      int lmin = std::numeric_limits<int>::max(), lmax = std::numeric_limits<int>::min();
      int rmin = lmin, rmax = lmax;
      for (int64_t r : left) {
        const int p = piece[c][static_cast<size_t>(r)];
        lmin = std::min(lmin, p);
        lmax = std::max(lmax, p);
      }
      for (int64_t r : right) {
        const int p = piece[c][static_cast<size_t>(r)];
        rmin = std::min(rmin, p);
        rmax = std::max(rmax, p);
      }
      // the partition must be a monotone cut through the occupied pieces
      compliant = (lmax < rmin) || (rmax < lmin);
    }
    if (!compliant) ++rep.violations;
  }
  rep.leaves_pure = true;
  for (const auto& nd : tree.nodes) {
    if (!nd.is_leaf()) continue;
    ++rep.n_leaves;
    const double first = ds.response[static_cast<size_t>(nd.samples.front())];
    for (int64_t r : nd.samples) {
      if (ds.response[static_cast<size_t>(r)] != first) {
        rep.leaves_pure = false;
        break;
      }
    }
  }
  rep.holds = rep.violations == 0 && rep.leaves_pure;
  return rep;
}

AssumptionProfile assumption_profile(const Tree& tree, double a) {
  if (a < 0.0) throw ValidationError("assumption_profile: a must be >= 0");
  AssumptionProfile prof;
  prof.a = a;
  prof.depth = tree.achieved_depth();
  prof.level_max.assign(static_cast<size_t>(prof.depth) + 1, 0);
  for (const auto& nd : tree.nodes) {
    auto& lvl = prof.level_max[static_cast<size_t>(nd.depth)];
    lvl = std::max(lvl, nd.count);
  }
  prof.min_A = 0.0;
  const double n = static_cast<double>(tree.n_samples);
  for (int k = 1; k <= prof.depth; ++k) {
    const double cap = n * std::pow(static_cast<double>(k), a) / std::pow(2.0, k);
    prof.min_A = std::max(prof.min_A, static_cast<double>(prof.level_max[static_cast<size_t>(k)]) / cap);
  }
  return prof;
}

DepthBoundReport check_depth_training_bound(const Tree& tree, const Dataset& ds, const AssumptionProfile& profile) {
  DepthBoundReport rep;
  rep.K = static_cast<double>(tree.achieved_depth());
  const double sigma2 = tree.node(tree.root).impurity;
  rep.lhs = tree.leaf_error_sum();
  if (rep.K == 0.0) {
    rep.applicable = true;
    rep.rhs = sigma2;
    rep.holds = rep.lhs <= rep.rhs * (1.0 + kCheckTol) + 1e-300;
    return rep;
  }
  rep.rho_M = rho_M(tree, ds);
  rep.L = std::log2(4.0 * std::pow(rep.K, profile.a) * profile.min_A * static_cast<double>(tree.n_samples));
  rep.applicable = rep.K < rep.L;
  if (!rep.applicable) return rep;
  rep.rhs = sigma2 * std::pow(1.0 - rep.K / rep.L, rep.rho_M * rep.rho_M);
  rep.holds = rep.lhs <= rep.rhs * (1.0 + kCheckTol) + 1e-300;
  return rep;
}

std::vector<double> truncation_errors(const Tree& tree) {
  const int depth = tree.achieved_depth();
  std::vector<double> err(static_cast<size_t>(depth) + 1, 0.0);
  const double n = static_cast<double>(tree.n_samples);
  std::vector<KahanSum> acc(static_cast<size_t>(depth) + 1);
  for (const auto& nd : tree.nodes) {
    const double contribution = static_cast<double>(nd.count) / n * nd.impurity;
    // a node contributes to truncation k when it is a leaf of that
    // truncation: at its own depth if it terminates there, and at every
    // shallower k only if k == nd.depth
    if (nd.is_leaf()) {
      for (int k = nd.depth; k <= depth; ++k) acc[static_cast<size_t>(k)].add(contribution);
    } else {
      acc[static_cast<size_t>(nd.depth)].add(contribution);
    }
  }
  for (int k = 0; k <= depth; ++k) err[static_cast<size_t>(k)] = acc[static_cast<size_t>(k)].value();
  return err;
}

std::vector<double> truncation_rho_H(const Tree& tree) {
  const int depth = tree.achieved_depth();
  std::vector<double> out(static_cast<size_t>(depth) + 1, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> min_by_level(static_cast<size_t>(depth) + 1, std::numeric_limits<double>::infinity());
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf()) continue;
    auto& m = min_by_level[static_cast<size_t>(nd.depth)];
    m = std::min(m, stump_rho_from_stats(nd));
  }
  double running = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= depth; ++k) {
    running = std::min(running, min_by_level[static_cast<size_t>(k - 1)]);
    out[static_cast<size_t>(k)] = running;
  }
  return out;
}

}  // namespace treereg
