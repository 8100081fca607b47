#include "treereg/population.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "treereg/common.hpp"

namespace treereg {

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 18, abs_tol, &error);
  return value;
}

PopulationModel::PopulationModel(std::string description, std::function<double(double)> g)
    : description_(std::move(description)), g_(std::move(g)) {}

PopulationModel::PopulationModel(std::string description, std::function<double(double)> g,
                                 std::function<double(double)> antiderivative_g,
                                 std::function<double(double)> antiderivative_g2)
    : description_(std::move(description)),
      g_(std::move(g)),
      f1_(std::move(antiderivative_g)),
      f2_(std::move(antiderivative_g2)) {}

double PopulationModel::moment1(double lo, double hi) const {
  if (f1_) return f1_(hi) - f1_(lo);
  return quad_moment1(lo, hi);
}

double PopulationModel::moment2(double lo, double hi) const {
  if (f2_) return f2_(hi) - f2_(lo);
  return quad_moment2(lo, hi);
}

double PopulationModel::quad_moment1(double lo, double hi) const {
  return integrate(g_, lo, hi);
}

double PopulationModel::quad_moment2(double lo, double hi) const {
  const auto& g = g_;
  return integrate([&g](double x) { return g(x) * g(x); }, lo, hi);
}

namespace models {

PopulationModel linear() {
  return PopulationModel(
      "linear", [](double x) { return x; }, [](double x) { return x * x / 2.0; },
      [](double x) { return x * x * x / 3.0; });
}

PopulationModel square() {
  return PopulationModel(
      "square", [](double x) { return x * x; }, [](double x) { return x * x * x / 3.0; },
      [](double x) { return std::pow(x, 5) / 5.0; });
}

PopulationModel cubic_minus_x() {
  return PopulationModel(
      "cubic_minus_x", [](double x) { return x * x * x - x; },
      [](double x) { return std::pow(x, 4) / 4.0 - x * x / 2.0; },
      [](double x) {
        return std::pow(x, 7) / 7.0 - 2.0 * std::pow(x, 5) / 5.0 + std::pow(x, 3) / 3.0;
      });
}

PopulationModel sinusoid(int w) {
  if (w < 1) throw ValidationError("sinusoid: frequency must be a positive integer");
  const double c = 2.0 * M_PI * w;
  return PopulationModel(
      "sinusoid_w" + std::to_string(w), [c](double x) { return std::sin(c * x); },
      [c](double x) { return -std::cos(c * x) / c; },
      // sin^2 = (1 - cos(2cx))/2
      [c](double x) { return x / 2.0 - std::sin(2.0 * c * x) / (4.0 * c); });
}

PopulationModel constant(double cval) {
  return PopulationModel(
      "constant", [cval](double) { return cval; }, [cval](double x) { return cval * x; },
      [cval](double x) { return cval * cval * x; });
}

}  // namespace models

NodeMoments population_node_moments(const PopulationModel& m, double a, double b) {
  if (!(a < b)) throw ValidationError("population: need a < b");
  const double len = b - a;
  NodeMoments out;
  out.mean = m.moment1(a, b) / len;
  out.variance = std::max(0.0, m.moment2(a, b) / len - out.mean * out.mean);
  return out;
}

double population_decrease(const PopulationModel& m, double a, double b, double s) {
  if (!(a < s && s < b)) throw ValidationError("population_decrease: need a < s < b");
  const double len = b - a;
  const double pl = (s - a) / len;
  const double pr = (b - s) / len;
  const double mean_l = m.moment1(a, s) / (s - a);
  const double mean_r = m.moment1(s, b) / (b - s);
  const double diff = mean_l - mean_r;
  return pl * pr * diff * diff;
}

double population_decrease_two_sided(const PopulationModel& m, double a, double b, double s) {
  if (!(a < s && s < b)) throw ValidationError("population_decrease: need a < s < b");
  const double len = b - a;
  const double pl = (s - a) / len;
  const double pr = (b - s) / len;
  const NodeMoments parent = population_node_moments(m, a, b);
  const NodeMoments left = population_node_moments(m, a, s);
  const NodeMoments right = population_node_moments(m, s, b);
  return parent.variance - (pl * left.variance + pr * right.variance);
}

namespace {

constexpr int kGridPoints = 10000;
constexpr double kMaximizerRelTol = 1e-9;

// golden-section maximization on [lo, hi]
double golden_max(const std::function<double(double)>& f, double lo, double hi, double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > x_tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? c : d;
}

}  // namespace

PopulationSplit optimal_split(const PopulationModel& m, double a, double b, double x_tol) {
  if (!(a < b)) throw ValidationError("optimal_split: need a < b");
  PopulationSplit out;
  out.node_variance = population_node_moments(m, a, b).variance;

  const auto objective = [&](double s) { return population_decrease(m, a, b, s); };
  const double len = b - a;
  std::vector<double> grid_val(kGridPoints + 1, 0.0);
  double best = 0.0;
  for (int i = 1; i < kGridPoints; ++i) {
    const double s = a + len * static_cast<double>(i) / kGridPoints;
    grid_val[static_cast<size_t>(i)] = objective(s);
    best = std::max(best, grid_val[static_cast<size_t>(i)]);
  }
  if (!(best > 1e-14 * std::max(out.node_variance, 1e-30)) || !(out.node_variance > 0.0)) {
    return out;  // no informative split
  }

  // refine every local maximum whose grid value is near-global
  std::vector<double> candidates;
  const double keep = best * (1.0 - 1e-6);
  for (int i = 1; i < kGridPoints; ++i) {
    const double v = grid_val[static_cast<size_t>(i)];
    if (v < keep) continue;
    if (v >= grid_val[static_cast<size_t>(i - 1)] && v >= grid_val[static_cast<size_t>(i + 1)]) {
      const double lo = a + len * static_cast<double>(i - 1) / kGridPoints;
      const double hi = a + len * static_cast<double>(i + 1) / kGridPoints;
      candidates.push_back(golden_max(objective, lo, hi, x_tol));
    }
  }
  double refined_best = 0.0;
  for (double s : candidates) refined_best = std::max(refined_best, objective(s));
  std::sort(candidates.begin(), candidates.end());
  for (double s : candidates) {
    if (objective(s) >= refined_best * (1.0 - kMaximizerRelTol)) {
      if (out.maximizers.empty() || s - out.maximizers.back() > 10.0 * x_tol) {
        out.maximizers.push_back(s);
      }
    }
  }
  out.delta = refined_best;
  out.rho = std::sqrt(std::max(0.0, out.delta / out.node_variance));
  out.informative = true;
  return out;
}

SplitLocationReport verify_split_location(const PopulationModel& m, double a, double b, double s_star,
                                          double tol) {
  SplitLocationReport rep;
  rep.s_star = s_star;
  const NodeMoments parent = population_node_moments(m, a, b);
  const double delta = population_decrease(m, a, b, s_star);
  rep.hypothesis_ok = delta > 0.0 && parent.variance > 0.0;
  if (!rep.hypothesis_ok) return rep;

  rep.rho = std::sqrt(delta / parent.variance);
  const double gap = m.g(s_star) - parent.mean;
  rep.v = gap * gap / parent.variance;

  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double shift = std::sqrt(rep.v / (rep.v + rep.rho * rep.rho));
  rep.branch_low = mid - half * shift;
  rep.branch_high = mid + half * shift;
  rep.location_gap = std::min(std::abs(s_star - rep.branch_low), std::abs(s_star - rep.branch_high));

  const double p_left = (s_star - a) / (b - a);
  rep.probability_gap = std::min(std::abs(p_left - (0.5 - 0.5 * shift)), std::abs(p_left - (0.5 + 0.5 * shift)));
  rep.holds = rep.location_gap <= tol && rep.probability_gap <= tol;
  return rep;
}

std::vector<EndcutRow> endcut_scaling(const std::vector<int>& ws) {
  std::vector<EndcutRow> rows;
  for (int w : ws) {
    if (w < 1) throw ValidationError("endcut_scaling: frequencies must be positive integers");
    const PopulationModel m = models::sinusoid(w);
    const PopulationSplit split = optimal_split(m, 0.0, 1.0);
    EndcutRow row;
    row.w = w;
    row.s_star = split.maximizers.empty() ? 0.0 : split.maximizers.front();
    row.rho = split.rho;
    row.s_times_w = row.s_star * w;
    row.rho_times_sqrt_w = row.rho * std::sqrt(static_cast<double>(w));
    rows.push_back(row);
  }
  return rows;
}

void export_endcut_csv(const std::vector<EndcutRow>& rows, std::ostream& out) {
  out << "w,s_star,rho,s_star_times_w,rho_times_sqrt_w\n";
  for (const auto& r : rows) {
    out << r.w << ',' << r.s_star << ',' << r.rho << ',' << r.s_times_w << ',' << r.rho_times_sqrt_w << '\n';
  }
}

}  // namespace treereg
