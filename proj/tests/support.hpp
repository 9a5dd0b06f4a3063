#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include "rankscale/numerics.hpp"
#include "rankscale/random.hpp"

namespace rankscale::testing {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Per-value comparison; entries below floor·max are compared absolutely.
inline double spectrum_mismatch(std::span<const double> a, std::span<const double> b,
                                double floor = 1e-12) {
  if (a.size() != b.size()) return INFINITY;
  double top = 0.0;
  for (double v : a) top = std::max(top, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::max(std::abs(a[i]), std::abs(b[i])) < floor * top) {
      worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(top, 1e-300));
    } else {
      worst = std::max(worst, rel_diff(a[i], b[i]));
    }
  }
  return worst;
}

}  // namespace rankscale::testing
