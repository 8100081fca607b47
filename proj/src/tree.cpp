#include "treereg/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treereg/stats.hpp"
#include "json.hpp"

namespace treereg {

namespace {

constexpr double kTieRelTol = 1e-12;

// candidate beats incumbent only if strictly larger beyond the tie band;
// within the band the earlier (smaller feature, smaller threshold) wins.
bool beats(double candidate, double incumbent) {
  return candidate > incumbent + kTieRelTol * std::max(std::abs(incumbent), std::abs(candidate));
}

struct NodeScratch {
  std::vector<double> z;  // centered responses, aligned with rows
};

// Single-feature scan over pre-centered responses. Candidate thresholds are
// midpoints between consecutive distinct sorted values.
std::optional<SplitCandidate> scan_feature(const Dataset& ds, std::span<const int64_t> rows,
                                           std::span<const double> z, int feature) {
  const int64_t n = static_cast<int64_t>(rows.size());
  if (n < 2) return std::nullopt;
  std::vector<std::pair<double, int64_t>> order(static_cast<size_t>(n));
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  for (int64_t i = 0; i < n; ++i) {
    order[static_cast<size_t>(i)] = {col[static_cast<size_t>(rows[static_cast<size_t>(i)])], i};
  }
  std::sort(order.begin(), order.end());

  const double total = kahan_total(z);
  SplitCandidate best;
  KahanSum left;
  for (int64_t i = 0; i < n - 1; ++i) {
    left.add(z[static_cast<size_t>(order[static_cast<size_t>(i)].second)]);
    const double xl = order[static_cast<size_t>(i)].first;
    const double xr = order[static_cast<size_t>(i + 1)].first;
    if (!(xl < xr)) continue;
    const int64_t nl = i + 1;
    const int64_t nr = n - nl;
    const double mean_l = left.value() / static_cast<double>(nl);
    const double mean_r = (total - left.value()) / static_cast<double>(nr);
    const double diff = mean_l - mean_r;
    const double decrease =
        (static_cast<double>(nl) * static_cast<double>(nr)) / (static_cast<double>(n) * static_cast<double>(n)) *
        diff * diff;
    if (!best.valid() || beats(decrease, best.decrease)) {
      best.feature = feature;
      best.threshold = 0.5 * (xl + xr);
      best.decrease = decrease;
      best.left_count = nl;
      best.right_count = nr;
    }
  }
  if (!best.valid() || !(best.decrease > 0.0)) return std::nullopt;
  return best;
}

std::vector<double> centered_responses(const Dataset& ds, std::span<const int64_t> rows) {
  std::vector<double> z = gather(ds.response, rows);
  const double m = mean(z);
  for (double& v : z) v -= m;
  return z;
}

}  // namespace

double node_impurity(std::span<const double> responses) {
  if (responses.empty()) throw ValidationError("node_impurity: empty node");
  return variance_pop(responses);
}

double impurity_decrease(const Dataset& ds, std::span<const int64_t> rows, int feature, double threshold) {
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  KahanSum left_sum;
  int64_t nl = 0;
  const std::vector<double> z = centered_responses(ds, rows);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (col[static_cast<size_t>(rows[i])] <= threshold) {
      left_sum.add(z[i]);
      ++nl;
    }
  }
  const int64_t n = static_cast<int64_t>(rows.size());
  const int64_t nr = n - nl;
  if (nl == 0 || nr == 0) throw ValidationError("impurity_decrease: split induces an empty daughter");
  const double total = kahan_total(z);
  const double mean_l = left_sum.value() / static_cast<double>(nl);
  const double mean_r = (total - left_sum.value()) / static_cast<double>(nr);
  const double diff = mean_l - mean_r;
  return (static_cast<double>(nl) * static_cast<double>(nr)) /
         (static_cast<double>(n) * static_cast<double>(n)) * diff * diff;
}

double impurity_decrease_two_pass(const Dataset& ds, std::span<const int64_t> rows, int feature,
                                  double threshold) {
  const auto& col = ds.columns[static_cast<size_t>(feature)];
  std::vector<double> yl, yr;
  for (int64_t r : rows) {
    const double y = ds.response[static_cast<size_t>(r)];
    if (col[static_cast<size_t>(r)] <= threshold) {
      yl.push_back(y);
    } else {
      yr.push_back(y);
    }
  }
  if (yl.empty() || yr.empty()) throw ValidationError("impurity_decrease: split induces an empty daughter");
  const std::vector<double> y = gather(ds.response, rows);
  const double n = static_cast<double>(rows.size());
  const double pl = static_cast<double>(yl.size()) / n;
  const double pr = static_cast<double>(yr.size()) / n;
  return node_impurity(y) - (pl * node_impurity(yl) + pr * node_impurity(yr));
}

std::optional<SplitCandidate> best_split(const Dataset& ds, std::span<const int64_t> rows) {
  const std::vector<double> z = centered_responses(ds, rows);
  SplitCandidate best;
  for (int j = 0; j < ds.d(); ++j) {
    auto cand = scan_feature(ds, rows, z, j);
    if (!cand) continue;
    if (!best.valid() || beats(cand->decrease, best.decrease)) best = *cand;
  }
  if (!best.valid()) return std::nullopt;
  return best;
}

std::optional<SplitCandidate> best_split_on_feature(const Dataset& ds, std::span<const int64_t> rows,
                                                    int feature) {
  const std::vector<double> z = centered_responses(ds, rows);
  return scan_feature(ds, rows, z, feature);
}

namespace {

struct GrowFrame {
  std::vector<int64_t> rows;
  std::vector<Interval> box;
  int depth = 0;
  int parent = -1;
  bool is_left = false;
};

void fill_stats(TreeNode& node, const Dataset& ds) {
  const std::vector<double> y = gather(ds.response, node.samples);
  node.count = static_cast<int64_t>(y.size());
  node.mean = mean(y);
  node.impurity = sum_sq_dev(y, node.mean) / static_cast<double>(y.size());
}

bool all_equal(const Dataset& ds, std::span<const int64_t> rows) {
  const double first = ds.response[static_cast<size_t>(rows[0])];
  for (int64_t r : rows) {
    if (ds.response[static_cast<size_t>(r)] != first) return false;
  }
  return true;
}

}  // namespace

Tree grow(const Dataset& ds, int max_depth) {
  ds.validate();
  if (max_depth < 0) throw ValidationError("grow: max_depth must be >= 0");
  Tree tree;
  tree.depth_limit = max_depth;
  tree.n_features = ds.d();
  tree.n_samples = ds.n();

  std::vector<Interval> root_box(static_cast<size_t>(ds.d()));
  for (int j = 0; j < ds.d(); ++j) {
    const auto& col = ds.columns[static_cast<size_t>(j)];
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    root_box[static_cast<size_t>(j)] = {std::min(0.0, *mn), std::max(1.0, *mx)};
  }

  std::vector<int64_t> all(static_cast<size_t>(ds.n()));
  std::iota(all.begin(), all.end(), 0);

  // preorder construction with an explicit stack; ids are preorder ranks
  std::vector<GrowFrame> stack;
  stack.push_back({std::move(all), std::move(root_box), 0, -1, false});
  while (!stack.empty()) {
    GrowFrame frame = std::move(stack.back());
    stack.pop_back();

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes.back();
    node.id = id;
    node.depth = frame.depth;
    node.samples = std::move(frame.rows);
    node.box = std::move(frame.box);
    fill_stats(node, ds);
    if (frame.parent >= 0) {
      if (frame.is_left) {
        tree.node(frame.parent).left = id;
      } else {
        tree.node(frame.parent).right = id;
      }
    }

    if (frame.depth >= max_depth || node.count == 1 || all_equal(ds, node.samples)) continue;
    auto cand = best_split(ds, node.samples);
    if (!cand) continue;
    node.split = *cand;

    std::vector<int64_t> left_rows, right_rows;
    left_rows.reserve(static_cast<size_t>(cand->left_count));
    right_rows.reserve(static_cast<size_t>(cand->right_count));
    const auto& col = ds.columns[static_cast<size_t>(cand->feature)];
    for (int64_t r : node.samples) {
      if (col[static_cast<size_t>(r)] <= cand->threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    std::vector<Interval> left_box = node.box;
    std::vector<Interval> right_box = node.box;
    left_box[static_cast<size_t>(cand->feature)].hi = cand->threshold;
    right_box[static_cast<size_t>(cand->feature)].lo = cand->threshold;

    // push right first so the left child gets the next preorder id
    stack.push_back({std::move(right_rows), std::move(right_box), frame.depth + 1, id, false});
    stack.push_back({std::move(left_rows), std::move(left_box), frame.depth + 1, id, true});
  }
  return tree;
}

int Tree::leaf_for(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_features) {
    throw ValidationError("predict: point has " + std::to_string(x.size()) + " coordinates, tree expects " +
                          std::to_string(n_features));
  }
  int id = root;
  while (!node(id).is_leaf()) {
    const TreeNode& nd = node(id);
    id = (x[static_cast<size_t>(nd.split.feature)] <= nd.split.threshold) ? nd.left : nd.right;
  }
  return id;
}

double Tree::predict(std::span<const double> x) const { return node(leaf_for(x)).mean; }

std::vector<double> Tree::predict(const Dataset& ds) const {
  std::vector<double> out(static_cast<size_t>(ds.n()));
  std::vector<double> point(static_cast<size_t>(ds.d()));
  for (int64_t i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.d(); ++j) point[static_cast<size_t>(j)] = ds.x(i, j);
    out[static_cast<size_t>(i)] = predict(point);
  }
  return out;
}

std::vector<int> Tree::leaf_ids() const {
  std::vector<int> out;
  for (const auto& nd : nodes) {
    if (nd.is_leaf()) out.push_back(nd.id);
  }
  return out;
}

std::vector<int> Tree::internal_ids() const {
  std::vector<int> out;
  for (const auto& nd : nodes) {
    if (!nd.is_leaf()) out.push_back(nd.id);
  }
  return out;
}

int64_t Tree::leaf_count() const {
  int64_t c = 0;
  for (const auto& nd : nodes) c += nd.is_leaf() ? 1 : 0;
  return c;
}

int Tree::achieved_depth() const {
  int k = 0;
  for (const auto& nd : nodes) k = std::max(k, nd.depth);
  return k;
}

std::vector<int> Tree::parents() const {
  std::vector<int> p(nodes.size(), -1);
  for (const auto& nd : nodes) {
    if (!nd.is_leaf()) {
      p[static_cast<size_t>(nd.left)] = nd.id;
      p[static_cast<size_t>(nd.right)] = nd.id;
    }
  }
  return p;
}

double Tree::leaf_error_sum() const {
  KahanSum s;
  for (const auto& nd : nodes) {
    if (nd.is_leaf()) s.add(static_cast<double>(nd.count) / static_cast<double>(n_samples) * nd.impurity);
  }
  return s.value();
}

void Tree::assign_samples(const Dataset& ds) {
  for (auto& nd : nodes) nd.samples.clear();
  std::vector<double> point(static_cast<size_t>(ds.d()));
  for (int64_t i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.d(); ++j) point[static_cast<size_t>(j)] = ds.x(i, j);
    int id = root;
    node(id).samples.push_back(i);
    while (!node(id).is_leaf()) {
      const TreeNode& nd = node(id);
      id = (point[static_cast<size_t>(nd.split.feature)] <= nd.split.threshold) ? nd.left : nd.right;
      node(id).samples.push_back(i);
    }
  }
}

double training_error(const Tree& tree, const Dataset& ds) {
  const std::vector<double> pred = tree.predict(ds);
  KahanSum s;
  for (int64_t i = 0; i < ds.n(); ++i) {
    const double e = ds.response[static_cast<size_t>(i)] - pred[static_cast<size_t>(i)];
    s.add(e * e);
  }
  return s.value() / static_cast<double>(ds.n());
}

double test_error(const Tree& tree, const Dataset& ds) { return training_error(tree, ds); }

std::string Tree::to_json() const {
  nlohmann::json j;
  j["format"] = "treereg.tree.v1";
  j["depth_limit"] = depth_limit;
  j["n_features"] = n_features;
  j["n_samples"] = n_samples;
  j["root"] = root;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& nd : nodes) {
    nlohmann::json e;
    e["id"] = nd.id;
    e["depth"] = nd.depth;
    e["count"] = nd.count;
    e["mean"] = nd.mean;
    e["impurity"] = nd.impurity;
    if (!nd.is_leaf()) {
      e["feature"] = nd.split.feature;
      e["threshold"] = nd.split.threshold;
      e["decrease"] = nd.split.decrease;
      e["left"] = nd.left;
      e["right"] = nd.right;
    }
    arr.push_back(std::move(e));
  }
  j["nodes"] = std::move(arr);
  return j.dump(2);
}

Tree Tree::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree: invalid JSON: ") + e.what());
  }
  if (j.value("format", "") != "treereg.tree.v1") throw ParseError("tree: unknown format tag");
  Tree t;
  t.depth_limit = j.at("depth_limit").get<int>();
  t.n_features = j.at("n_features").get<int>();
  t.n_samples = j.at("n_samples").get<int64_t>();
  t.root = j.at("root").get<int>();
  for (const auto& e : j.at("nodes")) {
    TreeNode nd;
    nd.id = e.at("id").get<int>();
    nd.depth = e.at("depth").get<int>();
    nd.count = e.at("count").get<int64_t>();
    nd.mean = e.at("mean").get<double>();
    nd.impurity = e.at("impurity").get<double>();
    if (e.contains("feature")) {
      nd.split.feature = e.at("feature").get<int>();
      nd.split.threshold = e.at("threshold").get<double>();
      nd.split.decrease = e.at("decrease").get<double>();
      nd.left = e.at("left").get<int>();
      nd.right = e.at("right").get<int>();
      nd.split.left_count = 0;
      nd.split.right_count = 0;
    }
    if (nd.id != static_cast<int>(t.nodes.size())) throw ParseError("tree: node ids must be dense and ordered");
    t.nodes.push_back(std::move(nd));
  }
  if (t.nodes.empty()) throw ParseError("tree: no nodes");
  if (t.root < 0 || t.root >= static_cast<int>(t.nodes.size())) throw ParseError("tree: root out of range");
  const int m = static_cast<int>(t.nodes.size());
  for (auto& nd : t.nodes) {
    if (nd.is_leaf()) continue;
    if (nd.left <= nd.id || nd.left >= m || nd.right <= nd.id || nd.right >= m) {
      throw ParseError("tree: child ids out of range at node " + std::to_string(nd.id));
    }
    if (nd.split.feature < 0 || nd.split.feature >= t.n_features) {
      throw ParseError("tree: split feature out of range at node " + std::to_string(nd.id));
    }
    nd.split.left_count = t.node(nd.left).count;
    nd.split.right_count = t.node(nd.right).count;
  }
  return t;
}

}  // namespace treereg
