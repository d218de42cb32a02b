#pragma once

#include <cstdint>
#include <vector>

#include "coefid/grid.hpp"
#include "coefid/kernels.hpp"

namespace coefid {

enum class FaceAverage { Arithmetic, Harmonic };

/// Five-point operator  -div(p grad u) + lambda q u  in conservative flux form.
///
/// Interior node rows hold the stencil; Dirichlet (edge) node rows are the
/// identity. With the arithmetic face average the interior block is symmetric.
class StencilOperator {
public:
  explicit StencilOperator(Grid2D grid);

  const Grid2D& grid() const noexcept { return grid_; }

  double center(int i, int j) const noexcept { return center_[grid_.index(i, j)]; }
  double east(int i, int j) const noexcept { return east_[grid_.index(i, j)]; }
  double west(int i, int j) const noexcept { return west_[grid_.index(i, j)]; }
  double north(int i, int j) const noexcept { return north_[grid_.index(i, j)]; }
  double south(int i, int j) const noexcept { return south_[grid_.index(i, j)]; }

  /// Full operator: stencil rows inside, identity rows on the boundary.
  Field2D apply(const Field2D& x) const;
  /// Stencil rows only; boundary entries of the result are 0.
  Field2D apply_interior(const Field2D& x) const;
  void apply_interior(std::span<const double> x, std::span<double> y) const noexcept;

  kernels::Stencil view() const noexcept;
  /// Index of an interior node whose row in the interior block is all zero,
  /// or -1 if there is none.
  long find_empty_row() const noexcept;

private:
  friend StencilOperator assemble(const Field2D&, const Field2D&, double, FaceAverage);
  friend StencilOperator shifted_laplacian(const Grid2D&, double);

  Grid2D grid_;
  std::vector<double> center_, east_, west_, north_, south_;
};

/// Assembles  -div(p grad .) + lambda q .  with face values of p taken as the
/// arithmetic (default) or harmonic mean of the two adjacent nodes.
StencilOperator assemble(const Field2D& p, const Field2D& q, double lambda,
                         FaceAverage average = FaceAverage::Arithmetic);

/// -Laplace + shift, the constant-coefficient operator used for the auxiliary
/// Poisson (shift 0) and Neuberger (shift 1) problems.
StencilOperator shifted_laplacian(const Grid2D& grid, double shift);

enum class SolverKind { Minres, Direct };

struct SolverConfig {
  double tolerance = 1e-10;   ///< relative residual over interior nodes
  int max_iterations = 20000;
  SolverKind kind = SolverKind::Minres;

  /// Throws ValidationError on a non-positive tolerance or iteration budget.
  void validate() const;
};

struct SolveReport {
  Field2D solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves  A u = f  inside with u = phi on the boundary. The boundary values
/// of `phi` are used; its interior is ignored. Throws NonConvergence if the
/// residual bound cannot be met or the operator has an empty row.
SolveReport solve_dirichlet_report(const Field2D& p, const Field2D& q, double lambda,
                                   const Field2D& f, const Field2D& phi,
                                   const SolverConfig& cfg,
                                   FaceAverage average = FaceAverage::Arithmetic);

Field2D solve_dirichlet(const Field2D& p, const Field2D& q, double lambda, const Field2D& f,
                        const Field2D& phi, const SolverConfig& cfg = {});
Field2D solve_dirichlet(const Field2D& p, const Field2D& q, double lambda, const Field2D& f,
                        const BoundaryValues& phi, const SolverConfig& cfg = {});

/// Solves op u = rhs with homogeneous Dirichlet data (rhs boundary ignored).
SolveReport solve_zero_bc(const StencilOperator& op, const Field2D& rhs,
                          const SolverConfig& cfg);

/// -Laplace v = rhs, v = 0 on the boundary.
Field2D solve_poisson_zero_bc(const Field2D& rhs, const SolverConfig& cfg = {});

/// (-Laplace + I) g = rhs, g = 0 on the boundary.
Field2D solve_helmholtz_zero_bc(const Field2D& rhs, const SolverConfig& cfg = {});

/// L^{-1} rhs with zero Dirichlet data.
Field2D apply_inverse_L(const StencilOperator& op, const Field2D& rhs,
                        const SolverConfig& cfg = {});

/// Smallest Rayleigh quotient <Ax,x>/<x,x> over `samples` random
/// interior-supported vectors. A negative value proves indefiniteness.
double positivity_probe(const StencilOperator& op, int samples, std::uint64_t seed);

}  // namespace coefid
