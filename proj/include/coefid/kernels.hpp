#pragma once

// Data-parallel inner loops shared by the solvers and functionals.
//
// Every kernel has a portable scalar reference in namespace `scalar` and, on
// x86-64, an AVX2+FMA variant in namespace `avx2`. The unqualified entry
// points dispatch to the best variant the running CPU supports; the choice is
// made once per process so results are reproducible within a run. Setting the
// environment variable COEFID_ISA=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace coefid::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Overrides the dispatch target; ignored if `isa` is not available.
void force_isa(Isa isa) noexcept;

/// Five-point stencil over an nx x ny node array. Coefficient arrays have one
/// entry per node; only rows 1..ny-2 and columns 1..nx-2 are read.
struct Stencil {
  int nx = 0;
  int ny = 0;
  const double* center = nullptr;
  const double* east = nullptr;   // (i+1, j)
  const double* west = nullptr;   // (i-1, j)
  const double* north = nullptr;  // (i, j+1)
  const double* south = nullptr;  // (i, j-1)
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
/// sum_k w_k a_k b_k
double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept;
/// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;
/// y = a x + b y
void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept;
/// y = A x on interior nodes; boundary entries of y are set to 0.
void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept;

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept;
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;
void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept;
void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define COEFID_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double wdot(std::span<const double> w, std::span<const double> a,
            std::span<const double> b) noexcept;
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;
void axpby(double a, std::span<const double> x, double b, std::span<double> y) noexcept;
void stencil_apply(const Stencil& s, std::span<const double> x, std::span<double> y) noexcept;
}  // namespace avx2
#endif

}  // namespace coefid::kernels
