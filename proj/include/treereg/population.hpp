#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace treereg {

/// Adaptive Gauss-Kronrod integration (G7-K15), absolute tolerance 1e-10 by
/// default.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10);

// One-dimensional regression function g on [0,1] with uniform input,
// equipped with interval moments of g and g^2. Closed-form antiderivatives
// are used when registered; adaptive quadrature otherwise.
class PopulationModel {
 public:
  PopulationModel(std::string description, std::function<double(double)> g);
  PopulationModel(std::string description, std::function<double(double)> g,
                  std::function<double(double)> antiderivative_g,
                  std::function<double(double)> antiderivative_g2);

  const std::string& description() const { return description_; }
  double g(double x) const { return g_(x); }

  double moment1(double lo, double hi) const;  // integral of g
  double moment2(double lo, double hi) const;  // integral of g^2
  // always-quadrature routes, for cross-checking registered closed forms
  double quad_moment1(double lo, double hi) const;
  double quad_moment2(double lo, double hi) const;

  bool has_closed_forms() const { return static_cast<bool>(f1_); }

 private:
  std::string description_;
  std::function<double(double)> g_;
  std::function<double(double)> f1_;
  std::function<double(double)> f2_;
};

namespace models {
PopulationModel linear();          // g(x) = x
PopulationModel square();          // g(x) = x^2
PopulationModel cubic_minus_x();   // g(x) = x^3 - x
PopulationModel sinusoid(int w);   // g(x) = sin(2 pi w x)
PopulationModel constant(double c);
}  // namespace models

/// Conditional distribution facts for X uniform restricted to [a, b].
struct NodeMoments {
  double mean = 0.0;      // E[Y | t]
  double variance = 0.0;  // VAR(Y | t)
};
NodeMoments population_node_moments(const PopulationModel& m, double a, double b);

/// Population impurity decrease of splitting [a,b] at s (product form
/// P_L P_R (mu_L - mu_R)^2). Throws unless a < s < b.
double population_decrease(const PopulationModel& m, double a, double b, double s);

/// Same quantity via parent-minus-daughters variances (cross-check route).
double population_decrease_two_sided(const PopulationModel& m, double a, double b, double s);

struct PopulationSplit {
  std::vector<double> maximizers;  // all global maximizers found, ascending
  double delta = 0.0;              // decrease at the maximum
  double node_variance = 0.0;
  double rho = 0.0;                // sqrt(delta / node variance)
  bool informative = false;        // false when the objective vanishes
};

/// Global maximization of s -> decrease(s) by dense grid scan plus
/// golden-section refinement. Reports every maximizer within relative
/// tolerance 1e-9 of the best.
PopulationSplit optimal_split(const PopulationModel& m, double a, double b, double x_tol = 1e-10);

struct SplitLocationReport {
  double s_star = 0.0;
  double v = 0.0;           // squared standardized gap of g(s*) from the node mean
  double rho = 0.0;
  double branch_low = 0.0;  // midpoint - half width * sqrt(v/(v+rho^2))
  double branch_high = 0.0;
  double location_gap = 0.0;     // distance of s* to the nearer branch
  double probability_gap = 0.0;  // same check on P(X <= s* | t)
  bool hypothesis_ok = false;    // decrease at s* positive
  bool holds = false;
};

/// Verifies that a maximizer satisfies the closed-form split-location
/// expression and its conditional-probability variant, to tolerance.
SplitLocationReport verify_split_location(const PopulationModel& m, double a, double b, double s_star,
                                          double tol = 1e-6);

struct EndcutRow {
  int w = 0;
  double s_star = 0.0;   // smallest maximizer
  double rho = 0.0;
  double s_times_w = 0.0;
  double rho_times_sqrt_w = 0.0;
};

/// End-cut scaling table for the sinusoid family on [0,1].
std::vector<EndcutRow> endcut_scaling(const std::vector<int>& ws);
void export_endcut_csv(const std::vector<EndcutRow>& rows, std::ostream& out);

}  // namespace treereg
