#include <atomic>
#include <cstdlib>
#include <cstring>

#include "coefid/kernels.hpp"

namespace coefid::kernels {

namespace {

Isa detect() noexcept {
  const char* env = std::getenv("COEFID_ISA");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Avx2: return "avx2";
    case Isa::Scalar: break;
  }
  return "scalar";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(COEFID_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) noexcept {
  if (isa_available(isa)) current().store(isa, std::memory_order_relaxed);
}

#if defined(COEFID_HAVE_AVX2_KERNELS)
#define COEFID_DISPATCH(call)                          \
  if (active_isa() == Isa::Avx2) return avx2::call;    \
  return scalar::call
#else
#define COEFID_DISPATCH(call) return scalar::call
#endif

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  COEFID_DISPATCH(dot(a, b));
}

double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept {
  COEFID_DISPATCH(wdot(w, a, b));
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  COEFID_DISPATCH(axpy(a, x, y));
}

void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept {
  COEFID_DISPATCH(axpby(a, x, b, y));
}

void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept {
  COEFID_DISPATCH(stencil_apply(s, x, y));
}

#undef COEFID_DISPATCH

}  // namespace coefid::kernels
