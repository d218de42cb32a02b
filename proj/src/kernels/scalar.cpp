#include "coefid/kernels.hpp"

#include <algorithm>

namespace coefid::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += w[k] * a[k] * b[k];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = a * x[k] + b * y[k];
}

void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept {
  const int nx = s.nx;
  const int ny = s.ny;
  std::fill_n(y.data(), nx, 0.0);
  std::fill_n(y.data() + static_cast<std::size_t>(ny - 1) * nx, nx, 0.0);
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    y[row] = 0.0;
    y[row + nx - 1] = 0.0;
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = row + i;
      y[k] = s.center[k] * x[k] + s.east[k] * x[k + 1] + s.west[k] * x[k - 1] +
             s.north[k] * x[k + nx] + s.south[k] * x[k - nx];
    }
  }
}

}  // namespace coefid::kernels::scalar
