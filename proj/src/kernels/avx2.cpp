// Compiled with -mavx2 -mfma -ffp-contract=off. Element-wise kernels use the
// same operation order as the scalar reference and so agree bit for bit;
// the reductions use four accumulators and agree to rounding.
#include "coefid/kernels.hpp"

#if defined(COEFID_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <algorithm>

namespace coefid::kernels::avx2 {

namespace {

double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 16 <= n; k += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k + 4), _mm256_loadu_pd(pb + k + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k + 8), _mm256_loadu_pd(pb + k + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k + 12), _mm256_loadu_pd(pb + k + 12), acc3);
  }
  for (; k + 4 <= n; k += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k), acc0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; k < n; ++k) s += pa[k] * pb[k];
  return s;
}

double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  const double* pw = w.data();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(pw + k), _mm256_loadu_pd(pa + k));
    const __m256d p1 = _mm256_mul_pd(_mm256_loadu_pd(pw + k + 4), _mm256_loadu_pd(pa + k + 4));
    acc0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(pb + k), acc0);
    acc1 = _mm256_fmadd_pd(p1, _mm256_loadu_pd(pb + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    const __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(pw + k), _mm256_loadu_pd(pa + k));
    acc0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(pb + k), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += pw[k] * pa[k] * pb[k];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + k));
    _mm256_storeu_pd(y.data() + k, _mm256_add_pd(_mm256_loadu_pd(y.data() + k), t));
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept {
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + k));
    const __m256d u = _mm256_mul_pd(vb, _mm256_loadu_pd(y.data() + k));
    _mm256_storeu_pd(y.data() + k, _mm256_add_pd(t, u));
  }
  for (; k < n; ++k) y[k] = a * x[k] + b * y[k];
}

void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept {
  const int nx = s.nx;
  const int ny = s.ny;
  const double* px = x.data();
  double* py = y.data();
  std::fill_n(py, nx, 0.0);
  std::fill_n(py + static_cast<std::size_t>(ny - 1) * nx, nx, 0.0);
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    py[row] = 0.0;
    py[row + nx - 1] = 0.0;
    std::size_t k = row + 1;
    const std::size_t end = row + nx - 1;
    for (; k + 4 <= end; k += 4) {
      __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(s.center + k), _mm256_loadu_pd(px + k));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(s.east + k),
                                             _mm256_loadu_pd(px + k + 1)));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(s.west + k),
                                             _mm256_loadu_pd(px + k - 1)));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(s.north + k),
                                             _mm256_loadu_pd(px + k + nx)));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(s.south + k),
                                             _mm256_loadu_pd(px + k - nx)));
      _mm256_storeu_pd(py + k, acc);
    }
    for (; k < end; ++k) {
      py[k] = s.center[k] * px[k] + s.east[k] * px[k + 1] + s.west[k] * px[k - 1] +
              s.north[k] * px[k + nx] + s.south[k] * px[k - nx];
    }
  }
}

}  // namespace coefid::kernels::avx2

#endif
