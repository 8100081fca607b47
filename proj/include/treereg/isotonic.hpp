#pragma once

#include <span>
#include <vector>

namespace treereg {

/// Least-squares projection onto non-decreasing vectors by pooling adjacent
/// violators. O(n). Input ordered by the conditioning variable; tied
/// positions must be pre-pooled (see the weighted overload).
std::vector<double> isotonic_fit(std::span<const double> y);

/// Weighted variant: minimizes sum w_i (y_i - f_i)^2 over non-decreasing f.
std::vector<double> isotonic_fit(std::span<const double> y, std::span<const double> weights);

}  // namespace treereg
