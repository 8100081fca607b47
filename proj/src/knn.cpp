#include "treereg/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treereg/stats.hpp"

namespace treereg {

namespace {

// squared distances to every training row, paired with the row index
void all_distances(const Dataset& train, std::span<const double> x,
                   std::vector<std::pair<double, int64_t>>& out) {
  const int64_t n = train.n();
  const int d = train.d();
  out.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = {0.0, i};
  for (int j = 0; j < d; ++j) {
    const auto& col = train.columns[static_cast<size_t>(j)];
    const double q = x[static_cast<size_t>(j)];
    for (int64_t i = 0; i < n; ++i) {
      const double diff = col[static_cast<size_t>(i)] - q;
      out[static_cast<size_t>(i)].first += diff * diff;
    }
  }
}

double mean_of_nearest(const Dataset& train, int k, std::vector<std::pair<double, int64_t>>& dist) {
  const int64_t n = train.n();
  const int64_t kk = std::min<int64_t>(k, n);
  std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
  std::sort(dist.begin(), dist.begin() + kk);
  KahanSum s;
  for (int64_t i = 0; i < kk; ++i) {
    s.add(train.response[static_cast<size_t>(dist[static_cast<size_t>(i)].second)]);
  }
  return s.value() / static_cast<double>(kk);
}

}  // namespace

double knn_predict(const Dataset& train, int k, std::span<const double> x) {
  train.validate();
  if (k < 1 || k > train.n()) throw ValidationError("knn_predict: need 1 <= k <= n");
  if (static_cast<int>(x.size()) != train.d()) {
    throw ValidationError("knn_predict: point has " + std::to_string(x.size()) +
                          " coordinates, training data has " + std::to_string(train.d()));
  }
  std::vector<std::pair<double, int64_t>> dist;
  all_distances(train, x, dist);
  return mean_of_nearest(train, k, dist);
}

std::vector<double> knn_predict_batch(const Dataset& train, int k, const Dataset& queries) {
  if (queries.d() != train.d()) throw ValidationError("knn_predict_batch: dimension mismatch");
  std::vector<double> out(static_cast<size_t>(queries.n()));
  std::vector<double> point(static_cast<size_t>(queries.d()));
  std::vector<std::pair<double, int64_t>> dist;
  for (int64_t i = 0; i < queries.n(); ++i) {
    for (int j = 0; j < queries.d(); ++j) point[static_cast<size_t>(j)] = queries.x(i, j);
    all_distances(train, point, dist);
    out[static_cast<size_t>(i)] = mean_of_nearest(train, k, dist);
  }
  return out;
}

double knn_test_error(const Dataset& train, int k, const Dataset& test) {
  const std::vector<double> pred = knn_predict_batch(train, k, test);
  KahanSum s;
  for (int64_t i = 0; i < test.n(); ++i) {
    const double e = test.response[static_cast<size_t>(i)] - pred[static_cast<size_t>(i)];
    s.add(e * e);
  }
  return s.value() / static_cast<double>(test.n());
}

int cross_validate_k(const Dataset& ds, std::span<const int> k_grid, int folds, uint64_t seed) {
  ds.validate();
  if (folds < 2) throw ValidationError("cross_validate_k: need folds >= 2");
  if (k_grid.empty()) throw ValidationError("cross_validate_k: empty k grid");
  if (ds.n() < folds) throw ValidationError("cross_validate_k: fewer rows than folds");
  std::vector<int> grid(k_grid.begin(), k_grid.end());
  std::sort(grid.begin(), grid.end());
  for (int k : grid) {
    if (k < 1) throw ValidationError("cross_validate_k: grid values must be >= 1");
  }

  std::vector<int64_t> perm(static_cast<size_t>(ds.n()));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<int> fold_of(static_cast<size_t>(ds.n()));
  for (size_t pos = 0; pos < perm.size(); ++pos) {
    fold_of[static_cast<size_t>(perm[pos])] = static_cast<int>(pos % static_cast<size_t>(folds));
  }

  const int kmax = grid.back();
  std::vector<KahanSum> sq_err(grid.size());
  for (int f = 0; f < folds; ++f) {
    Dataset train;
    train.columns.assign(static_cast<size_t>(ds.d()), {});
    std::vector<int64_t> val_rows;
    for (int64_t i = 0; i < ds.n(); ++i) {
      if (fold_of[static_cast<size_t>(i)] == f) {
        val_rows.push_back(i);
      } else {
        for (int j = 0; j < ds.d(); ++j) {
          train.columns[static_cast<size_t>(j)].push_back(ds.x(i, j));
        }
        train.response.push_back(ds.response[static_cast<size_t>(i)]);
      }
    }
    if (train.response.empty()) throw ValidationError("cross_validate_k: fold with empty training part");

    const int64_t n_train = train.n();
    const int64_t cap = std::min<int64_t>(kmax, n_train);
    std::vector<double> point(static_cast<size_t>(ds.d()));
    std::vector<std::pair<double, int64_t>> dist;
    for (int64_t row : val_rows) {
      for (int j = 0; j < ds.d(); ++j) point[static_cast<size_t>(j)] = ds.x(row, j);
      all_distances(train, point, dist);
      std::partial_sort(dist.begin(), dist.begin() + cap, dist.end());
      // prefix means give every grid value from one neighbor ranking
      KahanSum prefix;
      std::vector<double> prefix_mean(static_cast<size_t>(cap));
      for (int64_t i = 0; i < cap; ++i) {
        prefix.add(train.response[static_cast<size_t>(dist[static_cast<size_t>(i)].second)]);
        prefix_mean[static_cast<size_t>(i)] = prefix.value() / static_cast<double>(i + 1);
      }
      const double y = ds.response[static_cast<size_t>(row)];
      for (size_t gi = 0; gi < grid.size(); ++gi) {
        const int64_t kk = std::min<int64_t>(grid[gi], cap);
        const double e = y - prefix_mean[static_cast<size_t>(kk - 1)];
        sq_err[gi].add(e * e);
      }
    }
  }
  size_t best = 0;
  for (size_t gi = 1; gi < grid.size(); ++gi) {
    if (sq_err[gi].value() < sq_err[best].value()) best = gi;
  }
  return grid[best];
}

}  // namespace treereg
