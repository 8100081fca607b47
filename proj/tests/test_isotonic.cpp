#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "treereg/common.hpp"
#include "treereg/isotonic.hpp"
#include "treereg/stats.hpp"

using namespace treereg;

TEST_CASE("non-decreasing input is a fixed point") {
  const std::vector<double> y = {-1.0, 0.0, 0.0, 2.5, 7.0};
  CHECK(isotonic_fit(y) == y);
}

TEST_CASE("strictly decreasing input pools to the mean") {
  const std::vector<double> y = {5.0, 4.0, 3.0, 2.0, 1.0};
  const auto fit = isotonic_fit(y);
  for (double v : fit) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("output is non-decreasing and mean preserving") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> y(5 + rng.below(40));
    for (auto& v : y) v = rng.uniform(-3.0, 3.0);
    const auto fit = isotonic_fit(y);
    for (size_t i = 1; i < fit.size(); ++i) CHECK(fit[i] >= fit[i - 1]);
    CHECK(mean(fit) == doctest::Approx(mean(y)).epsilon(1e-12));
    // residual is orthogonal to the centered fit
    double dot = 0.0;
    const double fm = mean(fit);
    for (size_t i = 0; i < y.size(); ++i) dot += (y[i] - fit[i]) * (fit[i] - fm);
    CHECK(std::abs(dot) <= 1e-9);
  }
}

TEST_CASE("matches the brute-force projection for small inputs") {
  Rng rng(23);
  for (int t = 0; t < 80; ++t) {
    const size_t n = 2 + rng.below(7);
    std::vector<double> y(n), w(n, 1.0);
    for (auto& v : y) v = rng.uniform(-2.0, 2.0);
    const auto fit = isotonic_fit(y, w);
    const auto ref = oracles::isotonic_bruteforce(y, w);
    for (size_t i = 0; i < n; ++i) CHECK(fit[i] == doctest::Approx(ref[i]).epsilon(1e-8));
  }
}

TEST_CASE("weights behave like duplication") {
  const std::vector<double> y = {2.0, 1.0, 3.0};
  const std::vector<double> w = {2.0, 1.0, 1.0};
  const auto weighted = isotonic_fit(y, w);
  const std::vector<double> dup = {2.0, 2.0, 1.0, 3.0};
  const auto expanded = isotonic_fit(dup);
  CHECK(weighted[0] == doctest::Approx(expanded[0]).epsilon(1e-14));
  CHECK(weighted[1] == doctest::Approx(expanded[2]).epsilon(1e-14));
  CHECK(weighted[2] == doctest::Approx(expanded[3]).epsilon(1e-14));
}
