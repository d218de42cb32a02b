#include <gtest/gtest.h>

#include <cmath>

#include "coefid/data_pipeline.hpp"
#include "coefid/errors.hpp"
#include "coefid/pde_solver.hpp"
#include "support.hpp"

using namespace coefid;
using coefid::test::kPi;

namespace {

// Interior residual norm of A u = f in the discrete 2-norm.
double interior_residual(const StencilOperator& op, const Field2D& u, const Field2D& f) {
  const Field2D r = zero_boundary(op.apply_interior(u) - f);
  double s = 0.0;
  for (double v : r.values()) s += v * v;
  return std::sqrt(s);
}

double interior_norm(const Field2D& f) {
  const Field2D z = zero_boundary(f);
  double s = 0.0;
  for (double v : z.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST(Assemble, ConstantCoefficientIsFivePointLaplacian) {
  const Grid2D g = Grid2D::square(9);
  const double h2 = g.hx() * g.hx();
  const StencilOperator op = assemble(Field2D(g, 1.0), Field2D(g), 0.0);
  for (int j = 1; j < 8; ++j) {
    for (int i = 1; i < 8; ++i) {
      EXPECT_NEAR(op.center(i, j) * h2, 4.0, 1e-12);
      EXPECT_NEAR(op.east(i, j) * h2, -1.0, 1e-12);
      EXPECT_NEAR(op.west(i, j) * h2, -1.0, 1e-12);
      EXPECT_NEAR(op.north(i, j) * h2, -1.0, 1e-12);
      EXPECT_NEAR(op.south(i, j) * h2, -1.0, 1e-12);
    }
  }
}

TEST(Assemble, ReactionTermShiftsCenter) {
  const Grid2D g = Grid2D::square(7);
  const StencilOperator a = assemble(Field2D(g, 1.0), Field2D(g), 0.0);
  const StencilOperator b = assemble(Field2D(g, 1.0), Field2D(g, 1.0), 2.0);
  EXPECT_NEAR(b.center(3, 3) - a.center(3, 3), 2.0, 1e-12);
  EXPECT_EQ(b.east(3, 3), a.east(3, 3));
}

TEST(Assemble, FluxFormWithFaceAverages) {
  const Grid2D g = Grid2D::square(5);
  const Field2D p = test::random_field(g, 1, 0.5, 2.0);
  const StencilOperator op = assemble(p, Field2D(g), 0.0);
  const double h2 = g.hx() * g.hx();
  EXPECT_NEAR(op.east(2, 2), -0.5 * (p(2, 2) + p(3, 2)) / h2, 1e-12);
  EXPECT_NEAR(op.south(2, 2), -0.5 * (p(2, 2) + p(2, 1)) / h2, 1e-12);
  const StencilOperator hm = assemble(p, Field2D(g), 0.0, FaceAverage::Harmonic);
  EXPECT_NEAR(hm.east(2, 2), -2.0 * p(2, 2) * p(3, 2) / (p(2, 2) + p(3, 2)) / h2, 1e-12);
}

TEST(Assemble, SymmetricOnInteriorVectors) {
  const Grid2D g(-1.0, 1.0, 0.0, 1.5, 17, 13);
  const Field2D p = test::random_field(g, 2, 0.2, 3.0);
  const Field2D q = test::random_field(g, 3, 0.0, 1.0);
  const StencilOperator op = assemble(p, q, 1.5);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Field2D x = test::random_interior(g, 10 + s), y = test::random_interior(g, 20 + s);
    const double a = inner(op.apply_interior(x), y), b = inner(x, op.apply_interior(y));
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Assemble, PositiveDefiniteForPositiveP) {
  const Grid2D g = Grid2D::square(17);
  const Field2D p = test::random_field(g, 4, 0.1, 2.0);
  const StencilOperator op = assemble(p, Field2D(g, 1.0), 0.5);
  EXPECT_GT(positivity_probe(op, 50, 7), 0.0);
}

TEST(Assemble, AnnihilatesAffineFields) {
  const Grid2D g = Grid2D::square(11);
  const StencilOperator op = assemble(Field2D(g, 3.0), Field2D(g), 0.0);
  const Field2D a = Field2D::from_function(g, [](double x, double y) { return 2 * x - y + 1; });
  EXPECT_LT(op.apply_interior(a).max_abs(), 1e-11);
}

TEST(SolveDirichlet, AffineIsExact) {
  const Grid2D g = Grid2D::square(21);
  const Field2D phi = Field2D::from_function(g, [](double x, double y) { return x + y; });
  const Field2D u = solve_dirichlet(Field2D(g, 1.0), Field2D(g), 0.0, Field2D(g), phi);
  EXPECT_LT(test::max_diff(u, phi), 1e-9);
  EXPECT_EQ(boundary_restrict(u).values, boundary_restrict(phi).values);
}

TEST(SolveDirichlet, ManufacturedSecondOrder) {
  double err[3];
  const int sizes[3] = {17, 33, 65};
  for (int r = 0; r < 3; ++r) {
    const Grid2D g = Grid2D::square(sizes[r]);
    const Field2D exact = test::sinsin(g);
    const Field2D f = 2.0 * kPi * kPi * exact;
    const Field2D u = solve_dirichlet(Field2D(g, 1.0), Field2D(g), 0.0, f, Field2D(g));
    err[r] = test::max_diff(u, exact);
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(SolveDirichlet, ResidualContract) {
  const Grid2D g = Grid2D::square(33);
  const Field2D p = test::random_field(g, 5, 0.5, 2.0);
  const Field2D f = test::random_field(g, 6);
  const Field2D phi = test::random_field(g, 7);
  for (SolverKind kind : {SolverKind::Minres, SolverKind::Direct}) {
    SolverConfig cfg;
    cfg.kind = kind;
    const SolveReport rep = solve_dirichlet_report(p, Field2D(g), 0.0, f, phi, cfg);
    EXPECT_LE(rep.relative_residual, cfg.tolerance);
    EXPECT_EQ(boundary_restrict(rep.solution).values, boundary_restrict(phi).values);
    // Independent check: residual of the reduced system.
    const StencilOperator op = assemble(p, Field2D(g), 0.0);
    const Field2D lifted = boundary_overwrite(Field2D(g), phi);
    const Field2D b = f - op.apply_interior(lifted);
    EXPECT_LE(interior_residual(op, rep.solution - lifted, b), 10 * cfg.tolerance * interior_norm(b));
  }
}

TEST(SolveDirichlet, MinresAndDirectAgree) {
  const Grid2D g = Grid2D::square(25);
  const Field2D p = truth_field(2, g).p;  // sign-changing, indefinite operator
  const Field2D phi = default_boundary(g);
  SolverConfig direct;
  direct.kind = SolverKind::Direct;
  const Field2D a = solve_dirichlet(p, Field2D(g), 0.0, Field2D(g), phi);
  const Field2D b = solve_dirichlet(p, Field2D(g), 0.0, Field2D(g), phi, direct);
  EXPECT_LT(test::max_diff(a, b), 1e-6 * b.max_abs());
}

TEST(SolveDirichlet, ExampleTwoDataField) {
  const Grid2D g = Grid2D::square(49);
  const Field2D p = truth_field(2, g).p;
  const SolveReport rep =
      solve_dirichlet_report(p, Field2D(g), 0.0, Field2D(g), default_boundary(g), SolverConfig{});
  EXPECT_TRUE(rep.solution.all_finite());
  EXPECT_LE(rep.relative_residual, 1e-10);
}

TEST(SolveDirichlet, SingularOperatorRaises) {
  // p = 0 outside the inclusion leaves interior rows with no coupling.
  const Grid2D g = Grid2D::square(49);
  const Field2D p = truth_field(1, g, 0.0).p;
  for (SolverKind kind : {SolverKind::Minres, SolverKind::Direct}) {
    SolverConfig cfg;
    cfg.kind = kind;
    EXPECT_THROW(solve_dirichlet(p, Field2D(g), 0.0, Field2D(g), default_boundary(g), cfg),
                 NonConvergence);
  }
}

TEST(SolveDirichlet, BudgetExhaustionRaises) {
  const Grid2D g = Grid2D::square(33);
  SolverConfig cfg;
  cfg.max_iterations = 2;
  const Field2D f = test::random_field(g, 8);
  try {
    solve_dirichlet(Field2D(g, 1.0), Field2D(g), 0.0, f, Field2D(g), cfg);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.residual(), cfg.tolerance);
    EXPECT_GE(e.iterations(), 2);
  }
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.tolerance = 1e-8;
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Poisson, ZeroManufacturedAndLinear) {
  const Grid2D g = Grid2D::square(33);
  EXPECT_EQ(solve_poisson_zero_bc(Field2D(g)).max_abs(), 0.0);
  const Field2D s = test::sinsin(g);
  const Field2D v = solve_poisson_zero_bc(2.0 * kPi * kPi * s);
  EXPECT_LT(test::max_diff(v, s), 5e-3);
  const Field2D r1 = test::random_field(g, 9), r2 = test::random_field(g, 10);
  const Field2D lhs = solve_poisson_zero_bc(2.0 * r1 + (-3.0) * r2);
  const Field2D rhs = 2.0 * solve_poisson_zero_bc(r1) + (-3.0) * solve_poisson_zero_bc(r2);
  EXPECT_LT(test::max_diff(lhs, rhs), 1e-8 * rhs.max_abs());
}

TEST(Poisson, DiscreteGreenIdentity) {
  const Grid2D g = Grid2D::square(33);
  SolverConfig cfg;
  const Field2D r = test::random_interior(g, 11);
  const Field2D v = solve_poisson_zero_bc(r, cfg);
  const double lhs = dirichlet_inner(v, v), rhs = inner(r, v);
  EXPECT_NEAR(lhs, rhs, 10 * cfg.tolerance * std::abs(rhs) + 1e-14);
}

TEST(Helmholtz, ZeroManufacturedBoundary) {
  const Grid2D g = Grid2D::square(33);
  EXPECT_EQ(solve_helmholtz_zero_bc(Field2D(g)).max_abs(), 0.0);
  const Field2D s = test::sinsin(g);
  const Field2D gsol = solve_helmholtz_zero_bc((2.0 * kPi * kPi + 1.0) * s);
  EXPECT_LT(test::max_diff(gsol, s), 5e-3);
  const Field2D any = solve_helmholtz_zero_bc(test::random_field(g, 12));
  EXPECT_EQ(boundary_restrict(any).values, std::vector<double>(BoundaryMask(g).nodes().size(), 0.0));
}

TEST(InverseL, MatchesDirichletWithZeroData) {
  const Grid2D g = Grid2D::square(25);
  const Field2D p = test::random_field(g, 13, 0.5, 1.5), q = Field2D(g, 1.0);
  const StencilOperator op = assemble(p, q, 1.0);
  const Field2D rhs = test::random_field(g, 14);
  const Field2D a = apply_inverse_L(op, rhs);
  const Field2D b = solve_dirichlet(p, q, 1.0, rhs, Field2D(g));
  EXPECT_LT(test::max_diff(a, b), 1e-8 * b.max_abs());
}

TEST(InverseL, SmallNegativeLambdaStaysPositive) {
  // -Laplace on [-1,1]^2 has smallest eigenvalue about pi^2/2, so lambda = -1
  // with q = 1 keeps L positive.
  const Grid2D g = Grid2D::square(25);
  const StencilOperator op = assemble(Field2D(g, 1.0), Field2D(g, 1.0), -1.0);
  EXPECT_GT(positivity_probe(op, 40, 3), 0.0);
  // sin(pi x) sin(pi y) is an exact eigenvector of the five-point Laplacian.
  const Field2D s = test::sinsin(g);
  const double h = g.hx();
  const double mu = 2.0 * 4.0 / (h * h) * std::pow(std::sin(kPi * h / 2.0), 2);
  const Field2D rhs = (mu - 1.0) * s;
  EXPECT_LT(test::max_diff(apply_inverse_L(op, rhs), s), 1e-8);
}

TEST(PositivityProbe, DetectsIndefiniteOperator) {
  const Grid2D g = Grid2D::square(25);
  const StencilOperator op = assemble(truth_field(3, g).p, Field2D(g), 0.0);
  EXPECT_LT(positivity_probe(op, 200, 5), 0.0);
}
