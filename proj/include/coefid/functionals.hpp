#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coefid/grid.hpp"
#include "coefid/pde_solver.hpp"

namespace coefid {

/// The unknown coefficients of  -div(p grad u) + lambda q u = f.
/// No sign condition is imposed on p.
struct CoefficientTriple {
  Field2D p;
  Field2D q;
  Field2D f;

  const Grid2D& grid() const noexcept { return p.grid(); }
  /// Throws GridMismatch / ValidationError on mixed grids or non-finite data.
  void validate() const;
};

/// Perturbation direction (h1, h2, h3) for p, q and f. h1 vanishes on the
/// boundary so that pinned boundary values of p are preserved.
struct TangentTriple {
  Field2D h1;
  Field2D h2;
  Field2D h3;
};

/// L2 gradients of a functional with respect to p, q and f.
struct GradientTriple {
  Field2D p;
  Field2D q;
  Field2D f;
};

/// One measured solution u_lambda.
struct Measurement {
  double lambda = 0.0;
  Field2D u;
};

struct ProblemInstance {
  Grid2D grid;
  std::vector<Measurement> data;       ///< one entry per lambda, repeats allowed
  BoundaryValues p_boundary;           ///< pinned boundary values of p
  std::optional<CoefficientTriple> truth;

  std::vector<double> lambdas() const;
  /// Hard checks: at least one lambda, shared grid, finite data.
  void validate() const;
  /// Soft checks; e.g. joint recovery of (p, q, f) wants three distinct lambdas.
  std::vector<std::string> warnings(bool recover_p, bool recover_q, bool recover_f) const;
};

enum class Functional { GLambda, GT };

std::string to_string(Functional which);
Functional functional_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Classical energy functional G_lambda

/// u_{lambda,c}: the solution for coefficients c with the measured boundary data.
Field2D forward_solution(const CoefficientTriple& c, const Measurement& m,
                         const SolverConfig& cfg = {});

/// u_{lambda,c} for every measurement; NonConvergence is tagged with lambda.
std::vector<Field2D> forward_solutions(const CoefficientTriple& c, const ProblemInstance& inst,
                                       const SolverConfig& cfg = {});

/// integral of p|grad(u - u_c)|^2 + lambda q (u - u_c)^2.
double eval_G_lambda(const CoefficientTriple& c, const Measurement& m,
                     const SolverConfig& cfg = {});
double G_lambda_from_solution(const CoefficientTriple& c, const Measurement& m,
                              const Field2D& u_c);

/// Equivalent form  integral p(|grad u|^2 - |grad u_c|^2)
///                  + lambda q (u^2 - u_c^2) - 2 f (u - u_c).
double eval_G_lambda_alt(const CoefficientTriple& c, const Measurement& m,
                         const SolverConfig& cfg = {});
double G_lambda_alt_from_solution(const CoefficientTriple& c, const Measurement& m,
                                  const Field2D& u_c);

/// g_p = |grad u|^2 - |grad u_c|^2,  g_q = lambda (u^2 - u_c^2),  g_f = -2 (u - u_c).
GradientTriple grad_G_lambda(const CoefficientTriple& c, const Measurement& m,
                             const SolverConfig& cfg = {});
GradientTriple grad_G_lambda_from_solution(const Measurement& m, const Field2D& u_c);

/// e(h) = -div(h1 grad u_c) + lambda h2 u_c - h3 on interior nodes.
Field2D linearized_residual(const TangentTriple& h, const Field2D& u_c, double lambda);

/// G''(c)[h, k] = 2 <L^{-1} e(h), e(k)>.
double second_diff_G_lambda(const CoefficientTriple& c, const TangentTriple& h,
                            const TangentTriple& k, const Measurement& m,
                            const SolverConfig& cfg = {});

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of the two-point identity for G(c1) - G(c2).
IdentitySides difference_identity_check(const CoefficientTriple& c1, const CoefficientTriple& c2,
                                        const Measurement& m, const SolverConfig& cfg = {});

// ---------------------------------------------------------------------------
// Residual functional G_T

/// T(c) = -div(p grad u) + lambda q u - f in flux form on interior nodes, zero
/// on the boundary. Contains second differences of u, so it amplifies noise.
Field2D apply_T(const CoefficientTriple& c, const Field2D& u, double lambda);

struct GTEvaluation {
  double value = 0.0;     ///< ||T||^2 + ||grad v||^2
  double t_norm2 = 0.0;   ///< ||T||^2
  double energy = 0.0;    ///< ||grad v||^2 (edge form)
  double pairing = 0.0;   ///< <T, v>; equals `energy` up to solver tolerance
  Field2D t;
  Field2D v;              ///< -Laplace v = T, v = 0 on the boundary
};

GTEvaluation eval_G_T(const CoefficientTriple& c, const Measurement& m,
                      const SolverConfig& cfg = {});

/// With z = T + v:  g_p = 2 grad u . grad z,  g_q = 2 lambda u z,  g_f = -2 z.
GradientTriple grad_G_T(const CoefficientTriple& c, const Measurement& m,
                        const SolverConfig& cfg = {});
GradientTriple grad_G_T_from_eval(const Measurement& m, const GTEvaluation& ev);

// ---------------------------------------------------------------------------
// Sums over all lambdas

/// Per-lambda intermediate results kept so a gradient can follow an
/// evaluation without repeating the solves.
struct Evaluation {
  Functional which = Functional::GT;
  double value = 0.0;
  std::vector<double> terms;        ///< per-lambda values
  std::vector<Field2D> solutions;   ///< u_c (G_lambda) or v (G_T)
  std::vector<Field2D> residuals;   ///< T (G_T only)
};

Evaluation evaluate(const CoefficientTriple& c, const ProblemInstance& inst, Functional which,
                    const SolverConfig& cfg = {});
GradientTriple gradient(const ProblemInstance& inst, const Evaluation& ev);

double eval_G_total(const CoefficientTriple& c, const ProblemInstance& inst, Functional which,
                    const SolverConfig& cfg = {});
GradientTriple grad_G_total(const CoefficientTriple& c, const ProblemInstance& inst,
                            Functional which, const SolverConfig& cfg = {});

// ---------------------------------------------------------------------------
// 1D quotient recovery

struct NaiveRecovery {
  std::vector<double> p;
  std::vector<double> du;          ///< derivative estimate used in the quotient
  std::vector<bool> unstable;      ///< |u'| < epsilon at this node
  bool division_unstable = false;  ///< any node flagged
  double epsilon = 0.0;
};

/// Recovers p on a uniform grid of [0,1] from  -(p u')' = f  via
///   p(x) = (p(0) u'(0) - integral_0^x f) / u'(x)
/// with second-order differences for u' and the trapezoid rule for the
/// integral. Nodes with |u'| < epsilon (default: the grid spacing) are
/// flagged rather than rejected.
NaiveRecovery naive_recover_1d(std::span<const double> u, std::span<const double> f, double p0,
                               std::optional<double> epsilon = std::nullopt);

}  // namespace coefid
