#include "treereg/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "treereg/stats.hpp"

namespace treereg {

namespace {

constexpr double kLinkRelTol = 1e-10;

struct LinkState {
  // per node, over the *current* pruned structure
  std::vector<double> sub_err;      // leaf-weighted impurity sum under the node
  std::vector<int64_t> sub_leaves;  // leaves under the node
  std::vector<double> r_leaf;       // error contribution if collapsed: P(t) * impurity(t)
  std::vector<char> removed;        // strictly below a collapsed node
  std::vector<char> leaf_now;       // current leaf (original or collapsed)
  std::vector<int> parent;
};

LinkState init_state(const Tree& tree) {
  const size_t m = tree.nodes.size();
  LinkState st;
  st.sub_err.assign(m, 0.0);
  st.sub_leaves.assign(m, 0);
  st.r_leaf.assign(m, 0.0);
  st.removed.assign(m, 0);
  st.leaf_now.assign(m, 0);
  st.parent = tree.parents();
  const double n = static_cast<double>(tree.n_samples);
  // children carry larger preorder ids, so a reverse pass is bottom-up
  for (size_t i = m; i-- > 0;) {
    const TreeNode& nd = tree.nodes[i];
    st.r_leaf[i] = static_cast<double>(nd.count) / n * nd.impurity;
    if (nd.is_leaf()) {
      st.sub_err[i] = st.r_leaf[i];
      st.sub_leaves[i] = 1;
      st.leaf_now[i] = 1;
    } else {
      st.sub_err[i] = st.sub_err[static_cast<size_t>(nd.left)] + st.sub_err[static_cast<size_t>(nd.right)];
      st.sub_leaves[i] =
          st.sub_leaves[static_cast<size_t>(nd.left)] + st.sub_leaves[static_cast<size_t>(nd.right)];
    }
  }
  return st;
}

void collapse(const Tree& tree, LinkState& st, int id) {
  const double d_err = st.r_leaf[static_cast<size_t>(id)] - st.sub_err[static_cast<size_t>(id)];
  const int64_t d_leaves = 1 - st.sub_leaves[static_cast<size_t>(id)];
  // drop everything strictly below id
  std::vector<int> work = {tree.node(id).left, tree.node(id).right};
  while (!work.empty()) {
    const int t = work.back();
    work.pop_back();
    if (t < 0 || st.removed[static_cast<size_t>(t)]) continue;
    st.removed[static_cast<size_t>(t)] = 1;
    st.leaf_now[static_cast<size_t>(t)] = 0;
    work.push_back(tree.node(t).left);
    work.push_back(tree.node(t).right);
  }
  st.sub_err[static_cast<size_t>(id)] = st.r_leaf[static_cast<size_t>(id)];
  st.sub_leaves[static_cast<size_t>(id)] = 1;
  st.leaf_now[static_cast<size_t>(id)] = 1;
  for (int p = st.parent[static_cast<size_t>(id)]; p >= 0; p = st.parent[static_cast<size_t>(p)]) {
    st.sub_err[static_cast<size_t>(p)] += d_err;
    st.sub_leaves[static_cast<size_t>(p)] += d_leaves;
  }
}

}  // namespace

PrunePath prune_path(const Tree& tree) {
  std::vector<PruneStep> steps;
  steps.push_back({0.0, {}, tree.leaf_count(), tree.leaf_error_sum()});
  if (tree.nodes.size() == 1) return PrunePath(tree, std::move(steps));

  LinkState st = init_state(tree);
  const int root = tree.root;
  std::vector<double> g(tree.nodes.size());
  while (st.sub_leaves[static_cast<size_t>(root)] > 1) {
    // snapshot every link value before touching the structure, so ties
    // collapse against the same state
    double g_min = std::numeric_limits<double>::infinity();
    for (const auto& nd : tree.nodes) {
      const size_t i = static_cast<size_t>(nd.id);
      if (nd.is_leaf() || st.removed[i] || st.leaf_now[i]) continue;
      g[i] = (st.r_leaf[i] - st.sub_err[i]) / static_cast<double>(st.sub_leaves[i] - 1);
      g_min = std::min(g_min, g[i]);
    }
    const double band = g_min + kLinkRelTol * std::max(1.0, std::abs(g_min));
    std::vector<int> collapse_set;
    for (const auto& nd : tree.nodes) {  // ascending ids: ancestors first
      const size_t i = static_cast<size_t>(nd.id);
      if (nd.is_leaf() || st.removed[i] || st.leaf_now[i]) continue;
      if (g[i] <= band) {
        collapse_set.push_back(nd.id);
        collapse(tree, st, nd.id);
      }
    }
    const double alpha = std::max(g_min, 0.0);
    const bool merge_into_prev =
        steps.size() > 1 && alpha <= steps.back().alpha + kLinkRelTol * std::max(1.0, std::abs(alpha));
    if (merge_into_prev) {
      auto& prev = steps.back();
      prev.collapsed.insert(prev.collapsed.end(), collapse_set.begin(), collapse_set.end());
      prev.n_leaves = st.sub_leaves[static_cast<size_t>(root)];
      prev.train_err = st.sub_err[static_cast<size_t>(root)];
    } else {
      steps.push_back({alpha, std::move(collapse_set), st.sub_leaves[static_cast<size_t>(root)],
                       st.sub_err[static_cast<size_t>(root)]});
    }
  }
  return PrunePath(tree, std::move(steps));
}

PrunePath::PrunePath(Tree tree, std::vector<PruneStep> steps)
    : tree_(std::move(tree)), steps_(std::move(steps)) {}

int PrunePath::select_index(double alpha) const {
  if (alpha < 0.0) throw ValidationError("select_subtree: alpha must be >= 0");
  int idx = 0;
  for (size_t k = 1; k < steps_.size(); ++k) {
    if (steps_[k].alpha <= alpha) idx = static_cast<int>(k);
  }
  return idx;
}

Tree PrunePath::materialize(int step_index) const {
  if (step_index < 0 || step_index >= static_cast<int>(steps_.size())) {
    throw ValidationError("materialize: step index out of range");
  }
  std::vector<char> cut(tree_.nodes.size(), 0);
  for (int k = 1; k <= step_index; ++k) {
    for (int id : steps_[static_cast<size_t>(k)].collapsed) cut[static_cast<size_t>(id)] = 1;
  }
  Tree out;
  out.depth_limit = tree_.depth_limit;
  out.n_features = tree_.n_features;
  out.n_samples = tree_.n_samples;
  // preorder copy of the retained structure
  struct Frame {
    int src;
    int dst_parent;
    bool is_left;
  };
  std::vector<Frame> stack = {{tree_.root, -1, false}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const TreeNode& src = tree_.node(f.src);
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(src);
    TreeNode& dst = out.nodes.back();
    dst.id = id;
    dst.left = dst.right = -1;
    if (f.dst_parent >= 0) {
      if (f.is_left) {
        out.node(f.dst_parent).left = id;
      } else {
        out.node(f.dst_parent).right = id;
      }
    }
    if (!src.is_leaf() && !cut[static_cast<size_t>(f.src)]) {
      stack.push_back({src.right, id, false});
      stack.push_back({src.left, id, true});
    } else {
      dst.split = SplitCandidate{};
    }
  }
  return out;
}

Tree PrunePath::select_subtree(double alpha) const { return materialize(select_index(alpha)); }

void PrunePath::export_csv(std::ostream& out) const {
  out << "step,critical_alpha,n_leaves,training_error\n";
  for (size_t k = 0; k < steps_.size(); ++k) {
    out << k << ',' << steps_[k].alpha << ',' << steps_[k].n_leaves << ',' << steps_[k].train_err << '\n';
  }
}

double default_temperature(int64_t n, int d, double response_bound, double scale) {
  if (n <= 0) throw ValidationError("default_temperature: n must be positive");
  if (2 * n <= d + 1) throw ValidationError("default_temperature: requires n > (d+1)/2");
  const double dn = static_cast<double>(n);
  const double dp1 = static_cast<double>(d + 1);
  return scale * 27.0 * response_bound * response_bound * dp1 * std::log(2.0 * M_E * dn / dp1) / dn;
}

}  // namespace treereg
