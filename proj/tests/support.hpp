#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "coefid/grid.hpp"

namespace coefid::test {

inline constexpr double kPi = std::numbers::pi;

inline Field2D random_field(const Grid2D& g, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Field2D f(g);
  for (double& v : f.values()) v = dist(rng);
  return f;
}

/// Random values inside, zero on the boundary.
inline Field2D random_interior(const Grid2D& g, std::uint64_t seed) {
  return zero_boundary(random_field(g, seed));
}

/// Smooth random field: a few low Fourier modes with random amplitudes.
inline Field2D smooth_random(const Grid2D& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double a[3][3];
  for (auto& row : a)
    for (double& v : row) v = dist(rng);
  return Field2D::from_function(g, [&](double x, double y) {
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) s += a[m][n] * std::cos(m * x + 0.5) * std::cos(n * y - 0.3);
    return scale * s;
  });
}

inline Field2D sinsin(const Grid2D& g, double amp = 1.0) {
  return Field2D::from_function(
      g, [amp](double x, double y) { return amp * std::sin(kPi * x) * std::sin(kPi * y); });
}

inline double max_diff(const Field2D& a, const Field2D& b) { return (a - b).max_abs(); }

}  // namespace coefid::test
