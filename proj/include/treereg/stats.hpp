#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "treereg/common.hpp"

namespace treereg {

inline double kahan_total(std::span<const double> v) {
  KahanSum s;
  for (double x : v) s.add(x);
  return s.value();
}

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : kahan_total(v) / static_cast<double>(v.size());
}

/// Sum of squared deviations around a given center.
inline double sum_sq_dev(std::span<const double> v, double center) {
  KahanSum s;
  for (double x : v) {
    const double z = x - center;
    s.add(z * z);
  }
  const double out = s.value();
  return out < 0.0 ? 0.0 : out;
}

/// Population variance, divisor N.
inline double variance_pop(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return sum_sq_dev(v, mean(v)) / static_cast<double>(v.size());
}

/// Pearson correlation; 0 by convention when either input is degenerate.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  if (n == 0 || b.size() != n) return 0.0;
  const double ma = mean(a);
  const double mb = mean(b);
  KahanSum cov, va, vb;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov.add(da * db);
    va.add(da * da);
    vb.add(db * db);
  }
  const double denom = std::sqrt(va.value() * vb.value());
  if (!(denom > 0.0)) return 0.0;
  return cov.value() / denom;
}

inline std::vector<double> gather(const std::vector<double>& v, std::span<const int64_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int64_t i : idx) out.push_back(v[static_cast<size_t>(i)]);
  return out;
}

/// |x - y| measured relative to the larger magnitude (0 when both vanish).
inline double rel_diff(double x, double y) {
  const double scale = std::max(std::abs(x), std::abs(y));
  if (scale < 1e-300) return 0.0;
  return std::abs(x - y) / scale;
}

}  // namespace treereg
