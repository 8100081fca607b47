#include <cmath>

#include "doctest.h"
#include "treereg/common.hpp"
#include "treereg/dataset.hpp"
#include "treereg/population.hpp"
#include "treereg/tree.hpp"

using namespace treereg;

TEST_CASE("constant model has no informative split") {
  const PopulationModel m = models::constant(2.5);
  for (double s : {0.2, 0.5, 0.8}) {
    CHECK(population_decrease(m, 0.0, 1.0, s) == doctest::Approx(0.0));
  }
  const PopulationSplit split = optimal_split(m, 0.0, 1.0);
  CHECK_FALSE(split.informative);
  CHECK(split.maximizers.empty());
  const SplitLocationReport rep = verify_split_location(m, 0.0, 1.0, 0.5);
  CHECK_FALSE(rep.hypothesis_ok);
}

TEST_CASE("linear model closed form") {
  const PopulationModel m = models::linear();
  for (double s : {0.1, 0.25, 0.5, 0.77}) {
    CHECK(population_decrease(m, 0.0, 1.0, s) == doctest::Approx(s * (1.0 - s) / 4.0).epsilon(1e-12));
  }
  const PopulationSplit split = optimal_split(m, 0.0, 1.0);
  REQUIRE(split.informative);
  REQUIRE(split.maximizers.size() == 1);
  CHECK(split.maximizers[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(split.delta == doctest::Approx(1.0 / 16.0).epsilon(1e-10));
  CHECK(split.rho * split.rho == doctest::Approx(0.75).epsilon(1e-9));
  // the maximizer sits exactly at the midpoint branch (v = 0)
  const SplitLocationReport rep = verify_split_location(m, 0.0, 1.0, split.maximizers[0]);
  CHECK(rep.hypothesis_ok);
  CHECK(rep.v <= 1e-12);
  CHECK(rep.holds);
}

TEST_CASE("decrease requires an interior split point") {
  const PopulationModel m = models::linear();
  CHECK_THROWS_AS(population_decrease(m, 0.2, 0.8, 0.2), ValidationError);
  CHECK_THROWS_AS(population_decrease(m, 0.2, 0.8, 0.9), ValidationError);
}

TEST_CASE("sinusoid decrease matches the closed form") {
  for (int w : {4, 8, 16, 32}) {
    const PopulationModel m = models::sinusoid(w);
    for (int i = 1; i < 25; ++i) {
      const double s = static_cast<double>(i) / 25.0;
      const double c = std::cos(2.0 * M_PI * w * s);
      const double closed =
          (1.0 - c) * (1.0 - c) / (4.0 * M_PI * M_PI * w * w * s * (1.0 - s));
      CHECK(population_decrease(m, 0.0, 1.0, s) == doctest::Approx(closed).epsilon(1e-9));
    }
    // node variance over the full period is 1/2
    CHECK(population_node_moments(m, 0.0, 1.0).variance == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("sinusoid maximizers are the symmetric end cuts") {
  const PopulationModel m = models::sinusoid(8);
  const PopulationSplit split = optimal_split(m, 0.0, 1.0);
  REQUIRE(split.informative);
  REQUIRE(split.maximizers.size() == 2);
  CHECK(split.maximizers[0] + split.maximizers[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(split.maximizers[0] < 1.0 / 8.0);  // an end cut at scale 1/w
  CHECK(split.maximizers[0] > 0.01);
}

TEST_CASE("optimizer agrees with a dense reference grid") {
  std::vector<PopulationModel> models_list;
  models_list.push_back(models::linear());
  models_list.push_back(models::cubic_minus_x());
  models_list.push_back(models::sinusoid(8));
  for (const auto& m : models_list) {
    const PopulationSplit split = optimal_split(m, 0.0, 1.0);
    REQUIRE(split.informative);
    double best_val = -1.0, best_s = 0.0;
    const int grid = 1000000;
    for (int i = 1; i < grid; ++i) {
      const double s = static_cast<double>(i) / grid;
      const double v = population_decrease(m, 0.0, 1.0, s);
      if (v > best_val) {
        best_val = v;
        best_s = s;
      }
    }
    double nearest = 1e9;
    for (double s : split.maximizers) nearest = std::min(nearest, std::abs(s - best_s));
    CHECK(nearest <= 2.0 / grid);
    CHECK(split.delta >= best_val - 1e-12);
  }
}

TEST_CASE("split location formula on subintervals") {
  struct Case {
    PopulationModel m;
    double a, b;
  };
  std::vector<Case> cases;
  cases.push_back({models::square(), 0.25, 0.75});
  cases.push_back({models::square(), 0.0, 1.0});
  cases.push_back({models::cubic_minus_x(), 0.1, 0.9});
  for (int w : {4, 8, 16}) {
    cases.push_back({models::sinusoid(w), 0.0, 1.0});
    cases.push_back({models::sinusoid(w), 0.2, 0.9});
  }
  for (const auto& c : cases) {
    const PopulationSplit split = optimal_split(c.m, c.a, c.b);
    REQUIRE(split.informative);
    for (double s : split.maximizers) {
      const SplitLocationReport rep = verify_split_location(c.m, c.a, c.b, s);
      CHECK(rep.hypothesis_ok);
      CHECK(rep.location_gap <= 1e-6);
      CHECK(rep.probability_gap <= 1e-6);
      CHECK(rep.holds);
    }
  }
}

TEST_CASE("quadrature-only model matches its closed-form twin") {
  const PopulationModel closed = models::cubic_minus_x();
  const PopulationModel quad("cubic_via_quadrature", [](double x) { return x * x * x - x; });
  CHECK_FALSE(quad.has_closed_forms());
  for (double s : {0.15, 0.4, 0.62, 0.88}) {
    CHECK(population_decrease(quad, 0.0, 1.0, s) ==
          doctest::Approx(population_decrease(closed, 0.0, 1.0, s)).epsilon(1e-9));
    CHECK(population_decrease_two_sided(quad, 0.05, 0.95, 0.5) ==
          doctest::Approx(population_decrease_two_sided(closed, 0.05, 0.95, 0.5)).epsilon(1e-9));
  }
}

TEST_CASE("both decrease routes agree") {
  std::vector<PopulationModel> models_list;
  models_list.push_back(models::linear());
  models_list.push_back(models::square());
  models_list.push_back(models::sinusoid(4));
  for (const auto& m : models_list) {
    for (int i = 1; i < 20; ++i) {
      const double s = 0.05 + 0.9 * static_cast<double>(i) / 20.0;
      CHECK(population_decrease(m, 0.02, 0.98, 0.02 + s * 0.96) ==
            doctest::Approx(population_decrease_two_sided(m, 0.02, 0.98, 0.02 + s * 0.96)).epsilon(1e-9));
    }
  }
}

TEST_CASE("even-symmetric models have symmetric maximizers") {
  const PopulationModel bump("centered_square", [](double x) { return (x - 0.5) * (x - 0.5); });
  const PopulationSplit split = optimal_split(bump, 0.0, 1.0);
  REQUIRE(split.informative);
  REQUIRE(split.maximizers.size() == 2);
  CHECK(split.maximizers[0] + split.maximizers[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("end-cut scaling table") {
  const auto rows = endcut_scaling({1, 4, 8, 16, 32});
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].w == 1);
  CHECK(rows[0].s_star > 0.05);  // interior baseline at the lowest frequency
  const double base_sw = rows[1].s_times_w;
  const double base_rw = rows[1].rho_times_sqrt_w;
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].s_times_w >= 0.5 * base_sw);
    CHECK(rows[i].s_times_w <= 1.5 * base_sw);
    CHECK(rows[i].rho_times_sqrt_w >= 0.5 * base_rw);
    CHECK(rows[i].rho_times_sqrt_w <= 1.5 * base_rw);
  }
}

TEST_CASE("empirical root split approaches the population optimum") {
  // y = x on one coordinate: the population split is the midpoint
  double prev_gap = 1.0;
  for (int64_t n : {1000, 10000}) {
    double gap = 0.0;
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      Rng rng(seed);
      Dataset ds;
      ds.columns.assign(1, std::vector<double>(static_cast<size_t>(n)));
      ds.response.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) {
        const double x = rng.uniform();
        ds.columns[0][static_cast<size_t>(i)] = x;
        ds.response[static_cast<size_t>(i)] = x;
      }
      std::vector<int64_t> rows(static_cast<size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
      const auto split = best_split(ds, rows);
      REQUIRE(split.has_value());
      gap += std::abs(split->threshold - 0.5) / 3.0;
    }
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}
