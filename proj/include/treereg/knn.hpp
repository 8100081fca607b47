#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "treereg/dataset.hpp"

namespace treereg {

inline constexpr std::array<int, 10> kDefaultKGrid = {1, 2, 3, 5, 7, 10, 15, 20, 30, 50};

/// Mean response of the k nearest training rows under Euclidean distance;
/// distance ties break toward the lower row index.
double knn_predict(const Dataset& train, int k, std::span<const double> x);

std::vector<double> knn_predict_batch(const Dataset& train, int k, const Dataset& queries);

/// Mean squared error of k-NN predictions on a labeled query set.
double knn_test_error(const Dataset& train, int k, const Dataset& test);

/// Seeded fold assignment; picks the grid value minimizing mean validation
/// MSE, ties resolving to the smaller k. Grid values larger than a fold's
/// training part are capped to it.
int cross_validate_k(const Dataset& ds, std::span<const int> k_grid, int folds, uint64_t seed);

}  // namespace treereg
