#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace page {

using Vector = std::vector<double>;

// Small dense helpers. All loops run in natural index order so results are
// reproducible bit-for-bit.
namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline void fill_zero(std::span<double> a) {
  for (double& v : a) v = 0.0;
}

}  // namespace vec
}  // namespace page
