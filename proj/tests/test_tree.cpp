#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "treereg/diagnostics.hpp"
#include "treereg/stats.hpp"
#include "treereg/tree.hpp"

using namespace treereg;

namespace {

Dataset tiny(std::vector<std::vector<double>> cols, std::vector<double> y) {
  Dataset ds;
  ds.columns = std::move(cols);
  ds.response = std::move(y);
  return ds;
}

Dataset random_ds(int64_t n, int d, uint64_t seed, bool noisy = true) {
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
    ds.response[static_cast<size_t>(i)] = y + (noisy ? 0.2 * rng.uniform(-1.0, 1.0) : 0.0);
  }
  return ds;
}

std::vector<int64_t> all_rows(const Dataset& ds) {
  std::vector<int64_t> rows(static_cast<size_t>(ds.n()));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TEST_CASE("node impurity") {
  std::vector<double> constant = {3.5, 3.5, 3.5};
  CHECK(node_impurity(constant) == 0.0);
  std::vector<double> pair = {0.0, 1.0};
  CHECK(node_impurity(pair) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(node_impurity(std::vector<double>{}), ValidationError);

  Rng rng(123);
  std::vector<double> v(50);
  for (auto& x : v) x = rng.uniform(-10.0, 10.0);
  const double ref = oracles::variance_longdouble(v);
  CHECK(rel_diff(node_impurity(v), ref) <= 1e-12);
}

TEST_CASE("impurity decrease, both routes") {
  // constant responses: zero decrease everywhere
  const Dataset constant = tiny({{0.1, 0.4, 0.6, 0.9}}, {2.0, 2.0, 2.0, 2.0});
  for (double s : {0.2, 0.5, 0.8}) {
    CHECK(impurity_decrease(constant, all_rows(constant), 0, s) == doctest::Approx(0.0));
  }

  const Dataset two = tiny({{0.0, 1.0}}, {0.0, 1.0});
  CHECK(impurity_decrease(two, all_rows(two), 0, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(impurity_decrease(two, all_rows(two), 0, 2.0), ValidationError);

  Rng rng(7);
  for (int t = 0; t < 60; ++t) {
    const Dataset ds = random_ds(20 + static_cast<int64_t>(rng.below(200)), 1 + static_cast<int>(rng.below(6)),
                                 rng.raw());
    const auto rows = all_rows(ds);
    const int j = static_cast<int>(rng.below(static_cast<uint64_t>(ds.d())));
    std::vector<double> xs;
    for (int64_t r : rows) xs.push_back(ds.x(r, j));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) continue;
    const size_t gap = rng.below(xs.size() - 1);
    const double s = 0.5 * (xs[gap] + xs[gap + 1]);
    const double simple = impurity_decrease(ds, rows, j, s);
    const double data_form = impurity_decrease_two_pass(ds, rows, j, s);
    CHECK(rel_diff(simple, data_form) <= 1e-10);
  }
}

TEST_CASE("best split on a separable instance") {
  // responses separated by x1 at 0.5, x2 carries no signal
  const Dataset ds = tiny({{0.1, 0.2, 0.4, 0.6, 0.8, 0.9}, {0.3, 0.9, 0.5, 0.2, 0.8, 0.1}},
                          {0.0, 0.0, 0.0, 5.0, 5.0, 5.0});
  const auto split = best_split(ds, all_rows(ds));
  REQUIRE(split.has_value());
  CHECK(split->feature == 0);
  CHECK(split->threshold == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(split->left_count == 3);
  const auto ref = oracles::exhaustive_best_split(ds, all_rows(ds));
  REQUIRE(ref.has_value());
  CHECK(split->feature == ref->feature);
  CHECK(split->threshold == ref->threshold);
}

TEST_CASE("best split is absent when every coordinate is constant") {
  const Dataset ds = tiny({{0.5, 0.5, 0.5}, {0.2, 0.2, 0.2}}, {1.0, 2.0, 3.0});
  CHECK_FALSE(best_split(ds, all_rows(ds)).has_value());
}

TEST_CASE("best split agrees with exhaustive enumeration") {
  Rng rng(99);
  for (int t = 0; t < 120; ++t) {
    const int64_t n = 5 + static_cast<int64_t>(rng.below(46));
    const int d = 1 + static_cast<int>(rng.below(4));
    const Dataset ds = random_ds(n, d, rng.raw());
    const auto rows = all_rows(ds);
    const auto mine = best_split(ds, rows);
    const auto ref = oracles::exhaustive_best_split(ds, rows);
    REQUIRE(mine.has_value() == ref.has_value());
    if (!mine) continue;
    CHECK(mine->feature == ref->feature);
    CHECK(mine->threshold == ref->threshold);
    CHECK(rel_diff(mine->decrease, ref->decrease) <= 1e-10);
    CHECK(mine->left_count == ref->left_count);
  }
}

TEST_CASE("root split of a two-component indicator model lands on a cut") {
  // y = 3*1(x1 < 0.45) + 5*1(x2 < 0.6), well separated levels
  GeneratorSpec s;
  s.kind = GeneratorKind::step_additive;
  s.n = 300;
  s.d = 2;
  s.d0 = 2;
  s.seed = 2024;
  s.steps.push_back({{0.45}, {3.0, 0.0}});
  s.steps.push_back({{0.6}, {5.0, 0.0}});
  const Dataset ds = generate(s);
  const auto split = best_split(ds, all_rows(ds));
  REQUIRE(split.has_value());
  // the chosen threshold separates the data at its own component's cut
  const double cut = split->feature == 0 ? 0.45 : 0.6;
  const auto& col = ds.columns[static_cast<size_t>(split->feature)];
  double below = -1.0, above = 2.0;
  for (double x : col) {
    if (x < cut) {
      below = std::max(below, x);
    } else {
      above = std::min(above, x);
    }
  }
  CHECK(split->threshold > below);
  CHECK(split->threshold < above);
}

TEST_CASE("grow stopping rules") {
  const Dataset ds = random_ds(40, 2, 5);
  const Tree stump = grow(ds, 0);
  CHECK(stump.nodes.size() == 1);
  CHECK(stump.node(0).is_leaf());
  CHECK(stump.predict(std::vector<double>{0.5, 0.5}) == doctest::Approx(mean(ds.response)).epsilon(1e-14));

  const Dataset two = tiny({{0.2, 0.8}}, {1.0, 4.0});
  const Tree t2 = grow(two, 5);
  CHECK(t2.leaf_count() == 2);
  CHECK(t2.achieved_depth() == 1);
  CHECK(training_error(t2, two) == 0.0);

  CHECK_THROWS_AS(grow(Dataset{}, 3), ValidationError);
}

TEST_CASE("grown nodes carry consistent statistics") {
  const Dataset ds = random_ds(200, 3, 17);
  const Tree tree = grow(ds, 5);
  for (const auto& nd : tree.nodes) {
    CHECK(nd.count == static_cast<int64_t>(nd.samples.size()));
    CHECK(nd.impurity >= 0.0);
    const std::vector<double> y = gather(ds.response, nd.samples);
    CHECK(rel_diff(nd.mean, mean(y)) <= 1e-12);
    if (!nd.is_leaf()) {
      const auto& l = tree.node(nd.left);
      const auto& r = tree.node(nd.right);
      CHECK(l.count + r.count == nd.count);
      CHECK(l.count == nd.split.left_count);
      // routing respects the closed-left threshold
      for (int64_t row : l.samples) CHECK(ds.x(row, nd.split.feature) <= nd.split.threshold);
      for (int64_t row : r.samples) CHECK(ds.x(row, nd.split.feature) > nd.split.threshold);
      // the box narrows along the split coordinate
      CHECK(l.box[static_cast<size_t>(nd.split.feature)].hi == nd.split.threshold);
      CHECK(r.box[static_cast<size_t>(nd.split.feature)].lo == nd.split.threshold);
    }
  }
  // leaves partition the sample
  std::vector<int64_t> seen;
  for (int id : tree.leaf_ids()) {
    const auto& s = tree.node(id).samples;
    seen.insert(seen.end(), s.begin(), s.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen == all_rows(ds));
}

TEST_CASE("prediction routes boundary points left") {
  Tree tree;
  tree.n_features = 1;
  tree.n_samples = 2;
  TreeNode root;
  root.id = 0;
  root.split = {0, 0.5, 1.0, 1, 1};
  root.left = 1;
  root.right = 2;
  TreeNode l, r;
  l.id = 1;
  l.mean = -1.0;
  r.id = 2;
  r.mean = 1.0;
  tree.nodes = {root, l, r};
  CHECK(tree.predict(std::vector<double>{0.5}) == -1.0);
  CHECK(tree.predict(std::vector<double>{0.5000001}) == 1.0);
  CHECK_THROWS_AS(tree.predict(std::vector<double>{0.1, 0.2}), ValidationError);
}

TEST_CASE("training error identities") {
  const Dataset ds = random_ds(300, 3, 23);
  const Tree stump = grow(ds, 0);
  CHECK(rel_diff(training_error(stump, ds), variance_pop(ds.response)) <= 1e-12);

  const Tree tree = grow(ds, 3);
  CHECK(rel_diff(training_error(tree, ds), tree.leaf_error_sum()) <= 1e-10);

  // a fully grown tree on distinct rows predicts its own sample exactly
  const Dataset small = random_ds(32, 2, 29);
  const Tree full = grow(small, 30);
  CHECK(training_error(full, small) <= 1e-28);
}

TEST_CASE("strictly increasing feature maps leave the tree structure unchanged") {
  const Dataset ds = random_ds(150, 3, 31);
  Dataset mapped = ds;
  for (auto& v : mapped.columns[1]) v = v * v * v;  // strictly increasing on [0,1]
  const Tree a = grow(ds, 4);
  const Tree b = grow(mapped, 4);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].samples == b.nodes[i].samples);
    CHECK(a.nodes[i].is_leaf() == b.nodes[i].is_leaf());
    if (!a.nodes[i].is_leaf()) CHECK(a.nodes[i].split.feature == b.nodes[i].split.feature);
    CHECK(a.nodes[i].mean == b.nodes[i].mean);
  }
}

TEST_CASE("per-split contraction identity") {
  const Dataset ds = random_ds(400, 4, 37);
  const Tree tree = grow(ds, 6);
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf()) continue;
    const auto& l = tree.node(nd.left);
    const auto& r = tree.node(nd.right);
    const double post = static_cast<double>(l.count) * l.impurity + static_cast<double>(r.count) * r.impurity;
    const double pre = static_cast<double>(nd.count) * nd.impurity;
    const double rho2 = nd.split.decrease / nd.impurity;
    CHECK(rel_diff(post, pre * (1.0 - rho2)) <= 1e-10);
  }
}

TEST_CASE("depth truncations equal trees grown with that cap") {
  const Dataset ds = random_ds(250, 3, 41);
  const Tree full = grow(ds, 8);
  const std::vector<double> errs = truncation_errors(full);
  for (int k = 0; k <= full.achieved_depth(); ++k) {
    const Tree capped = grow(ds, k);
    CHECK(rel_diff(errs[static_cast<size_t>(k)], capped.leaf_error_sum()) <= 1e-12);
  }
}

TEST_CASE("serialization round trip") {
  const Dataset ds = random_ds(120, 3, 43);
  const Tree tree = grow(ds, 4);
  const std::string text = tree.to_json();
  const Tree back = Tree::from_json(text);
  CHECK(back.to_json() == text);
  // predictions survive
  for (int64_t i = 0; i < 20; ++i) {
    const auto x = ds.row(i);
    CHECK(tree.predict(x) == back.predict(x));
  }
  // sample routing can be rebuilt from the data
  Tree rebuilt = back;
  rebuilt.assign_samples(ds);
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    CHECK(rebuilt.nodes[i].samples == tree.nodes[i].samples);
  }
  CHECK_THROWS_AS(Tree::from_json("{}"), ParseError);
  CHECK_THROWS_AS(Tree::from_json("not json"), ParseError);
}
