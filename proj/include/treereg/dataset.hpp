#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"

namespace treereg {

// Column-major numeric dataset. Features nominally live in [0,1]^d (the
// synthetic generators produce that directly; CSV input is brought there by
// scale_unit_interval). Immutable after construction by convention: all
// operations below return fresh values.
struct Dataset {
  std::vector<std::vector<double>> columns;  // d columns of length n
  std::vector<double> response;              // length n
  std::vector<std::string> feature_names;    // optional, empty or size d
  std::string response_name;                 // optional

  int64_t n() const { return static_cast<int64_t>(response.size()); }
  int d() const { return static_cast<int>(columns.size()); }
  double x(int64_t row, int col) const { return columns[static_cast<size_t>(col)][static_cast<size_t>(row)]; }

  /// Copies one observation into a dense point.
  std::vector<double> row(int64_t i) const;

  /// Throws ValidationError unless n >= 1, d >= 1 and all lengths agree.
  void validate() const;
};

/// One additive step component: levels[k] on [cuts[k-1], cuts[k]), i.e. a
/// point x falls in piece #(cuts <= x). cuts strictly increasing, levels has
/// one more entry than cuts, adjacent levels distinct (pieces are maximal).
struct StepComponent {
  std::vector<double> cuts;
  std::vector<double> levels;

  double operator()(double x) const;
  int piece_index(double x) const;
  int pieces() const { return static_cast<int>(levels.size()); }
  void validate() const;
};

enum class GeneratorKind { sparse_quadratic, step_additive, sinusoid, custom_additive };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::sparse_quadratic;
  int64_t n = 0;
  int d = 0;
  int d0 = 0;           // number of signal coordinates (the leading columns)
  uint64_t seed = 0;
  int frequency = 1;    // sinusoid: response sin(2*pi*frequency*x1)
  std::vector<StepComponent> steps;                        // step_additive, size d0
  std::vector<std::function<double(double)>> components;   // custom_additive, size d0

  void validate() const;
};

/// Response of the alternating-sign quadratic model: sum over the first d0
/// coordinates of (-1)^(j) * x_j^2 (0-based j, so +,-,+,...).
double sparse_quadratic_response(std::span<const double> x, int d0);

/// Largest achievable |response| of the spec's model (used as the response
/// bound B handed to the temperature formula).
double generator_response_bound(const GeneratorSpec& spec);

/// Features i.i.d. Uniform[0,1]^d, response from the named model.
/// Deterministic given the spec (including seed).
Dataset generate(const GeneratorSpec& spec);

/// Reads a numeric CSV ('.' decimal, ',' separator, optional single header
/// row). The response column may be named (requires a header) or given as a
/// 0-based index; all other columns become features in file order.
Dataset load_csv(const std::string& path, const std::string& response_column);
Dataset load_csv_index(const std::string& path, int response_index);

void write_csv(const Dataset& ds, const std::string& path);

/// Maps every column through (x - min) / (max - min); constant columns map
/// to 0 everywhere.
Dataset scale_unit_interval(const Dataset& ds);

/// Appends `extra` i.i.d. Uniform[0,1] columns. Original columns untouched.
Dataset augment_noise(const Dataset& ds, int extra, uint64_t seed);

/// Row subset, keeping column order.
Dataset subset(const Dataset& ds, std::span<const int64_t> rows);

}  // namespace treereg
