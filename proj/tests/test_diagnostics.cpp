#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "treereg/diagnostics.hpp"
#include "treereg/isotonic.hpp"
#include "treereg/stats.hpp"

using namespace treereg;

namespace {

Dataset tiny(std::vector<std::vector<double>> cols, std::vector<double> y) {
  Dataset ds;
  ds.columns = std::move(cols);
  ds.response = std::move(y);
  return ds;
}

Dataset random_ds(int64_t n, int d, uint64_t seed, double noise = 0.3) {
  Rng rng(seed);
  Dataset ds;
  ds.columns.assign(static_cast<size_t>(d), std::vector<double>(static_cast<size_t>(n)));
  ds.response.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (int j = 0; j < d; ++j) {
      const double x = rng.uniform();
      ds.columns[static_cast<size_t>(j)][static_cast<size_t>(i)] = x;
      y += (j % 2 ? -1.0 : 1.0) * x * x;
    }
    ds.response[static_cast<size_t>(i)] = y + noise * rng.uniform(-1.0, 1.0);
  }
  return ds;
}

std::vector<int64_t> all_rows(const Dataset& ds) {
  std::vector<int64_t> rows(static_cast<size_t>(ds.n()));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// exact monotone-class supremum by brute force (n <= 8): best Pearson over
// every consecutive-block fit in both directions, ties in x pre-pooled
double monotone_corr_bruteforce(const Dataset& ds, std::span<const int64_t> rows, int j) {
  std::vector<std::pair<double, double>> pts;  // (x, y)
  for (int64_t r : rows) pts.push_back({ds.x(r, j), ds.response[static_cast<size_t>(r)]});
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> gy, gw;
  std::vector<size_t> expand;  // group of each sorted point
  for (size_t i = 0; i < pts.size();) {
    size_t k = i;
    double s = 0.0;
    while (k < pts.size() && pts[k].first == pts[i].first) s += pts[k++].second;
    gy.push_back(s / static_cast<double>(k - i));
    gw.push_back(static_cast<double>(k - i));
    for (size_t q = i; q < k; ++q) expand.push_back(gy.size() - 1);
    i = k;
  }
  if (gy.size() < 2) return 0.0;
  std::vector<double> ys;
  for (const auto& p : pts) ys.push_back(p.second);
  double best = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<double> g = gy;
    if (dir == 1) {
      for (auto& v : g) v = -v;
    }
    const auto fit_groups = oracles::isotonic_bruteforce(g, gw);
    std::vector<double> fit(pts.size());
    for (size_t q = 0; q < pts.size(); ++q) {
      fit[q] = dir == 1 ? -fit_groups[expand[q]] : fit_groups[expand[q]];
    }
    best = std::max(best, std::abs(pearson(fit, ys)));
  }
  return best;
}

}  // namespace

TEST_CASE("stump correlation basics") {
  // perfectly separated two-level response
  const Dataset sep = tiny({{0.1, 0.2, 0.8, 0.9}}, {1.0, 1.0, 4.0, 4.0});
  CHECK(stump_correlation(sep, all_rows(sep), 0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // constant response: 0 by convention
  const Dataset flat = tiny({{0.1, 0.5, 0.9}}, {2.0, 2.0, 2.0});
  CHECK(stump_correlation(flat, all_rows(flat), 0, 0.4) == 0.0);
  CHECK_THROWS_AS(stump_correlation(sep, all_rows(sep), 0, 5.0), ValidationError);
}

TEST_CASE("stump correlation squared equals the decrease ratio") {
  Rng rng(31);
  for (int t = 0; t < 60; ++t) {
    const Dataset ds = random_ds(20 + static_cast<int64_t>(rng.below(150)),
                                 1 + static_cast<int>(rng.below(5)), rng.raw());
    const auto rows = all_rows(ds);
    const int j = static_cast<int>(rng.below(static_cast<uint64_t>(ds.d())));
    std::vector<double> xs;
    for (int64_t r : rows) xs.push_back(ds.x(r, j));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) continue;
    const size_t g = rng.below(xs.size() - 1);
    const double s = 0.5 * (xs[g] + xs[g + 1]);
    const double rho = stump_correlation(ds, rows, j, s);
    const std::vector<double> y = gather(ds.response, rows);
    const double ratio = impurity_decrease(ds, rows, j, s) / node_impurity(y);
    CHECK(std::abs(rho * rho - ratio) <= 1e-10 * std::max(1.0, std::abs(ratio)));
  }
}

TEST_CASE("monotone correlation basics") {
  // strictly increasing response in the feature
  Dataset inc = tiny({{0.1, 0.3, 0.5, 0.7, 0.9}}, {1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(monotone_correlation(inc, all_rows(inc), 0) == doctest::Approx(1.0).epsilon(1e-12));
  // strictly decreasing is matched by the decreasing direction
  Dataset dec = inc;
  std::reverse(dec.response.begin(), dec.response.end());
  CHECK(monotone_correlation(dec, all_rows(dec), 0) == doctest::Approx(1.0).epsilon(1e-12));
  // all x tied: no monotone structure to exploit
  Dataset tied = tiny({{0.4, 0.4, 0.4}}, {1.0, 5.0, 2.0});
  CHECK(monotone_correlation(tied, all_rows(tied), 0) == 0.0);
}

TEST_CASE("independent noise has small monotone correlation") {
  Rng rng(37);
  Dataset ds;
  ds.columns.assign(1, std::vector<double>(1000));
  ds.response.resize(1000);
  for (size_t i = 0; i < 1000; ++i) {
    ds.columns[0][i] = rng.uniform();
    ds.response[i] = rng.uniform(-1.0, 1.0);
  }
  CHECK(monotone_correlation(ds, all_rows(ds), 0) <= 0.5);
}

TEST_CASE("monotone correlation matches brute force on small nodes") {
  Rng rng(41);
  for (int t = 0; t < 60; ++t) {
    const int64_t n = 3 + static_cast<int64_t>(rng.below(6));
    Dataset ds;
    ds.columns.assign(2, std::vector<double>(static_cast<size_t>(n)));
    ds.response.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      // quantized x creates tied values regularly
      ds.columns[0][static_cast<size_t>(i)] = std::floor(rng.uniform() * 4.0) / 4.0;
      ds.columns[1][static_cast<size_t>(i)] = rng.uniform();
      ds.response[static_cast<size_t>(i)] = rng.uniform(-2.0, 2.0);
    }
    for (int j = 0; j < 2; ++j) {
      const double mine = monotone_correlation(ds, all_rows(ds), j);
      const double ref = monotone_corr_bruteforce(ds, all_rows(ds), j);
      CHECK(mine == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("worst-node correlations") {
  const Dataset two = tiny({{0.1, 0.3, 0.7, 0.9}}, {0.0, 0.1, 1.0, 1.1});
  const Tree t1 = grow(two, 1);
  REQUIRE(t1.leaf_count() == 2);
  const double expected = std::sqrt(t1.node(0).split.decrease / t1.node(0).impurity);
  CHECK(rho_H(t1, two) == doctest::Approx(expected).epsilon(1e-10));

  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Dataset ds = random_ds(250, 3, seed);
    const Tree tree = grow(ds, 4);
    const CorrelationReport rep = analyze(tree, ds);
    REQUIRE(rep.has_internal);
    CHECK(rep.rho_M >= rep.rho_H - 1e-12);
    // the chosen split attains the per-feature best stump correlation
    for (const auto& nc : rep.nodes) {
      const auto& nd = tree.node(nc.node_id);
      const double chosen = std::sqrt(nd.split.decrease / nd.impurity);
      CHECK(nc.best_feature_stump_rho() == doctest::Approx(chosen).epsilon(1e-10));
      for (int j = 0; j < 3; ++j) {
        CHECK(nc.feature_monotone_rho(j) >= nc.feature_stump_rho[static_cast<size_t>(j)] - 1e-9);
      }
    }
    // report rows cover exactly the internal nodes
    CHECK(rep.nodes.size() == tree.internal_ids().size());
  }

  const Dataset flat = tiny({{0.2, 0.8}}, {1.0, 1.0});
  const Tree leaf_only = grow(flat, 3);
  CHECK_THROWS_AS(rho_H(leaf_only, flat), ValidationError);
  CHECK_THROWS_AS(rho_M(leaf_only, flat), ValidationError);
}

TEST_CASE("stump-versus-monotone comparison holds at every node") {
  for (uint64_t seed : {7ULL, 8ULL}) {
    const Dataset ds = random_ds(400, 3, seed);
    const Tree tree = grow(ds, 5);
    for (int id : tree.internal_ids()) {
      const Fact1Report rep = check_fact1(tree, ds, id);
      CHECK(rep.holds);
      CHECK(rep.denom == doctest::Approx(std::sqrt(1.0 + std::log(2.0 * static_cast<double>(rep.count)))));
    }
  }
  // two-sample node: the denominator specializes to sqrt(1 + log 4)
  const Dataset pairds = tiny({{0.2, 0.8}}, {0.0, 1.0});
  const Tree t = grow(pairds, 1);
  const Fact1Report rep = check_fact1(t, pairds, 0);
  CHECK(rep.denom == doctest::Approx(std::sqrt(1.0 + std::log(4.0))).epsilon(1e-14));
  CHECK(rep.holds);
}

TEST_CASE("monotone response keeps both comparison sides near one") {
  Dataset ds;
  Rng rng(53);
  ds.columns.assign(2, std::vector<double>(300));
  ds.response.resize(300);
  for (size_t i = 0; i < 300; ++i) {
    ds.columns[0][i] = rng.uniform();
    ds.columns[1][i] = rng.uniform();
    ds.response[i] = 3.0 * ds.columns[0][i] + 0.5;  // exactly monotone in x0
  }
  const Tree tree = grow(ds, 2);
  const Fact1Report rep = check_fact1(tree, ds, 0);
  CHECK(rep.best_monotone_rho == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.stump_rho > 0.7);
  CHECK(rep.margin >= 0.0);
}

TEST_CASE("step-function comparison bound") {
  Rng rng(59);
  // monotone step: the bound reduces to the monotone one with a piece cap
  {
    Dataset ds = random_ds(200, 2, 61, 0.4);
    StepComponent g{{0.3, 0.6}, {0.0, 1.0, 2.0}};  // V=3, non-decreasing, M=0
    for (size_t i = 0; i < ds.response.size(); ++i) ds.response[i] += g(ds.columns[0][i]);
    const StepBoundReport rep = check_stepfn_bound(ds, all_rows(ds), 0, g);
    CHECK(rep.m == 0);
    CHECK(rep.v == 3);
    const double n = static_cast<double>(ds.n());
    CHECK(rep.denom ==
          doctest::Approx(std::sqrt(std::min(2.0, 1.0 + std::log(2.0 * n)))).epsilon(1e-12));
    CHECK(rep.holds);
  }
  // unimodal three-piece shape
  {
    Dataset ds = random_ds(300, 2, 67, 0.4);
    StepComponent g{{0.35, 0.65}, {0.0, 2.0, 0.5}};  // single interior peak, M=1
    for (size_t i = 0; i < ds.response.size(); ++i) ds.response[i] += g(ds.columns[0][i]);
    const StepBoundReport rep = check_stepfn_bound(ds, all_rows(ds), 0, g);
    CHECK(rep.m == 1);
    CHECK(rep.d_min >= 1);
    CHECK(rep.holds);
  }
  // a two-piece step is itself a stump: the bound cannot exceed the best stump
  {
    Dataset ds = random_ds(150, 2, 71, 0.6);
    StepComponent g{{0.5}, {0.0, 1.0}};
    const StepBoundReport rep = check_stepfn_bound(ds, all_rows(ds), 0, g);
    CHECK(rep.v == 2);
    CHECK(rep.bound <= rep.g_corr + 1e-12);
    CHECK(rep.holds);
  }
}

TEST_CASE("sparse component comparison") {
  // a single component is its own sum: both sides coincide
  {
    const Dataset ds = random_ds(200, 2, 73, 0.0);
    const SparseIneqReport rep =
        check_sparse_inequality(ds, all_rows(ds), {0}, {[](double x) { return x * x; }});
    CHECK(rep.nonneg_pairwise);
    CHECK(rep.max_component_rho2 == doctest::Approx(rep.sum_rho2).epsilon(1e-12));
    CHECK(rep.holds);
  }
  // alternating quadratic model at the root
  for (uint64_t seed : {79ULL, 83ULL, 89ULL}) {
    const int d0 = 4;
    const Dataset ds = random_ds(500, d0, seed, 0.0);
    std::vector<int> signal(d0);
    std::iota(signal.begin(), signal.end(), 0);
    std::vector<std::function<double(double)>> comps;
    for (int c = 0; c < d0; ++c) {
      const double sign = c % 2 == 0 ? 1.0 : -1.0;
      comps.push_back([sign](double x) { return sign * x * x; });
    }
    const SparseIneqReport rep = check_sparse_inequality(ds, all_rows(ds), signal, comps);
    CHECK(rep.holds);
    CHECK(rep.holds_sign_form);  // the sign-enumeration form holds unconditionally
    CHECK(rep.min_sign_rho2 <= rep.sum_rho2 + 1e-12);
  }
}

TEST_CASE("node size profile") {
  // single feature, linear response over 8 equally spaced points: exact halving
  Dataset ds;
  ds.columns.assign(1, {});
  for (int i = 0; i < 8; ++i) {
    ds.columns[0].push_back(static_cast<double>(i) / 7.0);
    ds.response.push_back(static_cast<double>(i));
  }
  const Tree tree = grow(ds, 3);
  const AssumptionProfile prof = assumption_profile(tree, 0.0);
  REQUIRE(prof.depth == 3);
  CHECK(prof.level_max == std::vector<int64_t>{8, 4, 2, 1});
  CHECK(prof.min_A == doctest::Approx(1.0).epsilon(1e-12));

  const Tree stump = grow(ds, 0);
  const AssumptionProfile p0 = assumption_profile(stump, 0.0);
  CHECK(p0.level_max == std::vector<int64_t>{8});
  CHECK(p0.min_A == 0.0);
  CHECK_THROWS_AS(assumption_profile(tree, -1.0), ValidationError);
}

TEST_CASE("depth training bound") {
  // depth-0 tree: the bound is vacuous and holds
  Dataset flat;
  flat.columns = {{0.5, 0.5}};
  flat.response = {1.0, 2.0};
  const Tree stump = grow(flat, 0);
  const DepthBoundReport trivial =
      check_depth_training_bound(stump, flat, assumption_profile(stump, 1.0));
  CHECK(trivial.applicable);
  CHECK(trivial.holds);

  const Dataset ds = random_ds(600, 4, 97);
  const Tree tree = grow(ds, 8);
  const AssumptionProfile prof = assumption_profile(tree, 1.0);
  const DepthBoundReport rep = check_depth_training_bound(tree, ds, prof);
  if (rep.applicable) CHECK(rep.holds);

  // the bound loosens monotonically as the correlation exponent shrinks
  const double sigma2 = 1.7, base = 0.6;
  double prev = -1.0;
  for (double rho : {0.9, 0.7, 0.5, 0.3, 0.1}) {
    const double rhs = sigma2 * std::pow(base, rho * rho);
    CHECK(rhs > prev);
    prev = rhs;
  }
}

TEST_CASE("step separation detects a planted violation") {
  // two pieces along x0; a handcrafted tree splitting inside a piece must be
  // flagged while the grown tree is clean
  GeneratorSpec s;
  s.kind = GeneratorKind::step_additive;
  s.n = 200;
  s.d = 1;
  s.d0 = 1;
  s.seed = 3;
  s.steps.push_back({{0.5}, {0.0, 2.0}});
  const Dataset ds = generate(s);
  const Tree good = grow(ds, 10);
  const StepSeparationReport ok = check_step_separation(good, ds, s.steps, {0});
  CHECK(ok.holds);
  CHECK(ok.violations == 0);
  CHECK(ok.leaves_pure);
  CHECK(ok.n_leaves >= 2);

  Tree bad = good;
  // re-split the root strictly inside the left piece
  bad.nodes.clear();
  TreeNode root;
  root.id = 0;
  root.split = {0, 0.25, 0.1, 0, 0};
  root.left = 1;
  root.right = 2;
  TreeNode l, r;
  l.id = 1;
  r.id = 2;
  bad.nodes = {root, l, r};
  bad.n_features = 1;
  bad.n_samples = ds.n();
  bad.assign_samples(ds);
  const StepSeparationReport flagged = check_step_separation(bad, ds, s.steps, {0});
  CHECK(flagged.violations >= 1);
  CHECK_FALSE(flagged.holds);
}

TEST_CASE("depth error bound with the scan-route worst-node correlation") {
  for (uint64_t seed : {5ULL, 6ULL, 7ULL}) {
    const Dataset ds = random_ds(350, 3, seed);
    const Tree tree = grow(ds, 5);
    const double sigma2 = tree.node(tree.root).impurity;
    const double rho = rho_H(tree, ds);
    const double k = static_cast<double>(tree.achieved_depth());
    CHECK(tree.leaf_error_sum() <= sigma2 * std::exp(-k * rho * rho) * (1.0 + 1e-9));
  }
}

TEST_CASE("report export shape") {
  const Dataset ds = random_ds(150, 2, 101);
  const Tree tree = grow(ds, 3);
  const CorrelationReport rep = analyze(tree, ds);
  std::ostringstream out;
  rep.export_csv(out);
  const std::string text = out.str();
  CHECK(text.rfind("node_id,", 0) == 0);
  CHECK(text.find("summary,rho_H,") != std::string::npos);
}
