#include "coefid/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace coefid {

StencilOperator::StencilOperator(Grid2D grid)
    : grid_(std::move(grid)),
      center_(grid_.size(), 0.0),
      east_(grid_.size(), 0.0),
      west_(grid_.size(), 0.0),
      north_(grid_.size(), 0.0),
      south_(grid_.size(), 0.0) {}

kernels::Stencil StencilOperator::view() const noexcept {
  return kernels::Stencil{grid_.nx(),    grid_.ny(),    center_.data(), east_.data(),
                          west_.data(),  north_.data(), south_.data()};
}

void StencilOperator::apply_interior(std::span<const double> x,
                                     std::span<double> y) const noexcept {
  kernels::stencil_apply(view(), x, y);
}

Field2D StencilOperator::apply_interior(const Field2D& x) const {
  if (!(x.grid() == grid_)) throw GridMismatch();
  Field2D y(grid_);
  apply_interior(x.values(), y.values());
  return y;
}

Field2D StencilOperator::apply(const Field2D& x) const {
  Field2D y = apply_interior(x);
  for (std::size_t k : BoundaryMask(grid_).nodes()) y[k] = x[k];
  return y;
}

long StencilOperator::find_empty_row() const noexcept {
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = grid_.index(i, j);
      const bool e = i + 1 < nx - 1 && east_[k] != 0.0;
      const bool w = i - 1 > 0 && west_[k] != 0.0;
      const bool n = j + 1 < ny - 1 && north_[k] != 0.0;
      const bool s = j - 1 > 0 && south_[k] != 0.0;
      if (center_[k] == 0.0 && !e && !w && !n && !s) return static_cast<long>(k);
    }
  }
  return -1;
}

namespace {

double face_value(double a, double b, FaceAverage avg) noexcept {
  if (avg == FaceAverage::Arithmetic) return 0.5 * (a + b);
  return a * b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

}  // namespace

StencilOperator assemble(const Field2D& p, const Field2D& q, double lambda, FaceAverage average) {
  require_same_grid(p, q);
  const Grid2D& g = p.grid();
  StencilOperator op(g);
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      const double pe = face_value(p(i, j), p(i + 1, j), average) * ihx2;
      const double pw = face_value(p(i, j), p(i - 1, j), average) * ihx2;
      const double pn = face_value(p(i, j), p(i, j + 1), average) * ihy2;
      const double ps = face_value(p(i, j), p(i, j - 1), average) * ihy2;
      op.east_[k] = -pe;
      op.west_[k] = -pw;
      op.north_[k] = -pn;
      op.south_[k] = -ps;
      op.center_[k] = pe + pw + pn + ps + lambda * q[k];
    }
  }
  return op;
}

StencilOperator shifted_laplacian(const Grid2D& grid, double shift) {
  Field2D one(grid, 1.0);
  Field2D q(grid, shift);
  return assemble(one, q, 1.0);
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw ValidationError("solver tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("solver needs at least one iteration");
}

namespace {

using Vec = std::vector<double>;

double norm2(std::span<const double> a) { return std::sqrt(kernels::dot(a, a)); }

// Jacobi-preconditioned MINRES on the interior block. Vectors span the full
// node array; boundary entries stay zero throughout. Stops once the
// preconditioned residual estimate drops below `target` (absolute, in the
// preconditioner norm) or the iteration budget runs out. Returns the
// iterations used.
int minres(const StencilOperator& op, const Vec& inv_diag, const Vec& b, Vec& x,
           double rel_target, int budget) {
  const std::size_t n = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  Vec r1 = b, r2 = b, y(n), v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) y[k] = inv_diag[k] * r1[k];
  double beta1 = kernels::dot(r1, y);
  if (!(beta1 > 0.0)) return 0;
  beta1 = std::sqrt(beta1);
  double beta = beta1, oldb = 0.0, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  const double target = rel_target * beta1;
  int itn = 0;
  while (itn < budget) {
    ++itn;
    const double s = 1.0 / beta;
    for (std::size_t k = 0; k < n; ++k) v[k] = s * y[k];
    op.apply_interior(v, y);
    if (itn >= 2) kernels::axpy(-beta / oldb, r1, y);
    const double alfa = kernels::dot(v, y);
    kernels::axpy(-alfa / beta, r2, y);
    r1.swap(r2);
    r2 = y;
    for (std::size_t k = 0; k < n; ++k) y[k] = inv_diag[k] * r2[k];
    oldb = beta;
    const double bb = kernels::dot(r2, y);
    beta = bb > 0.0 ? std::sqrt(bb) : 0.0;

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, std::numeric_limits<double>::min());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    const double denom = 1.0 / gamma;
    w1.swap(w2);
    w2.swap(w);
    for (std::size_t k = 0; k < n; ++k) w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) * denom;
    kernels::axpy(phi, w, x);

    if (phibar <= target || beta == 0.0) break;
  }
  return itn;
}

SolveReport solve_direct(const StencilOperator& op, const Vec& b, const SolverConfig& cfg) {
  const Grid2D& g = op.grid();
  const int mx = g.nx() - 2;
  const int my = g.ny() - 2;
  const auto interior = [&](int i, int j) { return (j - 1) * mx + (i - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mx) * my * 5);
  Eigen::VectorXd rhs(mx * my);
  for (int j = 1; j <= my; ++j) {
    for (int i = 1; i <= mx; ++i) {
      const int r = interior(i, j);
      rhs[r] = b[g.index(i, j)];
      trip.emplace_back(r, r, op.center(i, j));
      if (i < mx) trip.emplace_back(r, interior(i + 1, j), op.east(i, j));
      if (i > 1) trip.emplace_back(r, interior(i - 1, j), op.west(i, j));
      if (j < my) trip.emplace_back(r, interior(i, j + 1), op.north(i, j));
      if (j > 1) trip.emplace_back(r, interior(i, j - 1), op.south(i, j));
    }
  }
  Eigen::SparseMatrix<double> a(mx * my, mx * my);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw NonConvergence("direct factorization failed: operator is singular", rhs.norm(), 0);
  const Eigen::VectorXd sol = lu.solve(rhs);
  Field2D x(g);
  for (int j = 1; j <= my; ++j)
    for (int i = 1; i <= mx; ++i) x(i, j) = sol[interior(i, j)];
  Vec ax(g.size());
  op.apply_interior(x.values(), ax);
  kernels::axpy(-1.0, b, ax);
  const double bn = norm2(b);
  const double rel = norm2(ax) / bn;
  if (!(rel <= cfg.tolerance) || !x.all_finite())
    throw NonConvergence("direct solve residual " + format_double(rel) + " exceeds tolerance",
                         rel, 1);
  return {std::move(x), 1, rel};
}

// Solves the interior block A x = b (b zero on the boundary).
SolveReport solve_interior(const StencilOperator& op, const Vec& b, const SolverConfig& cfg) {
  cfg.validate();
  const Grid2D& g = op.grid();
  const double bn = norm2(b);
  if (const long k = op.find_empty_row(); k >= 0) {
    const int i = static_cast<int>(k % g.nx());
    const int j = static_cast<int>(k / g.nx());
    throw NonConvergence("operator is singular: empty stencil row at node (" +
                             std::to_string(i) + ", " + std::to_string(j) + ")",
                         1.0, 0);
  }
  if (bn == 0.0) return {Field2D(g), 0, 0.0};
  if (cfg.kind == SolverKind::Direct) return solve_direct(op, b, cfg);

  const BoundaryMask mask(g);
  Vec inv_diag(g.size(), 0.0);
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      const double d = std::abs(op.center(i, j));
      inv_diag[g.index(i, j)] = d > 0.0 ? 1.0 / d : 1.0;
    }
  }

  Vec x(g.size(), 0.0), r = b, dx(g.size()), ax(g.size());
  double rel = 1.0;
  int used = 0;
  // Restarted from the true residual so the returned bound is never an
  // estimate.
  while (true) {
    const double rn = norm2(r);
    rel = rn / bn;
    if (rel <= cfg.tolerance) break;
    if (used >= cfg.max_iterations) break;
    const double inner_rel = std::min(0.5, 0.5 * cfg.tolerance * bn / rn);
    const int it = minres(op, inv_diag, r, dx, inner_rel, cfg.max_iterations - used);
    used += std::max(it, 1);
    kernels::axpy(1.0, dx, x);
    op.apply_interior(x, ax);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = mask[k] ? 0.0 : b[k] - ax[k];
    const double new_rel = norm2(r) / bn;
    if (!(new_rel < rel)) {  // stagnation: no further progress possible
      rel = new_rel;
      break;
    }
  }
  if (!(rel <= cfg.tolerance) || !std::isfinite(rel))
    throw NonConvergence("MINRES stopped at relative residual " + format_double(rel) +
                             " after " + std::to_string(used) + " iterations",
                         rel, used);
  return {Field2D(g, std::move(x)), used, rel};
}

Vec interior_rhs(const Field2D& rhs) {
  Vec b(rhs.values().begin(), rhs.values().end());
  for (std::size_t k : BoundaryMask(rhs.grid()).nodes()) b[k] = 0.0;
  return b;
}

}  // namespace

SolveReport solve_zero_bc(const StencilOperator& op, const Field2D& rhs, const SolverConfig& cfg) {
  if (!(rhs.grid() == op.grid())) throw GridMismatch();
  return solve_interior(op, interior_rhs(rhs), cfg);
}

SolveReport solve_dirichlet_report(const Field2D& p, const Field2D& q, double lambda,
                                   const Field2D& f, const Field2D& phi, const SolverConfig& cfg,
                                   FaceAverage average) {
  require_same_grid(p, f);
  require_same_grid(p, phi);
  const StencilOperator op = assemble(p, q, lambda, average);
  Field2D lifted = boundary_overwrite(Field2D(p.grid()), phi);
  const Field2D moved = op.apply_interior(lifted);
  Vec b = interior_rhs(f);
  kernels::axpy(-1.0, moved.values(), b);
  SolveReport rep = solve_interior(op, b, cfg);
  rep.solution += lifted;
  return rep;
}

Field2D solve_dirichlet(const Field2D& p, const Field2D& q, double lambda, const Field2D& f,
                        const Field2D& phi, const SolverConfig& cfg) {
  return solve_dirichlet_report(p, q, lambda, f, phi, cfg).solution;
}

Field2D solve_dirichlet(const Field2D& p, const Field2D& q, double lambda, const Field2D& f,
                        const BoundaryValues& phi, const SolverConfig& cfg) {
  return solve_dirichlet(p, q, lambda, f, boundary_overwrite(Field2D(p.grid()), phi), cfg);
}

Field2D solve_poisson_zero_bc(const Field2D& rhs, const SolverConfig& cfg) {
  return solve_zero_bc(shifted_laplacian(rhs.grid(), 0.0), rhs, cfg).solution;
}

Field2D solve_helmholtz_zero_bc(const Field2D& rhs, const SolverConfig& cfg) {
  return solve_zero_bc(shifted_laplacian(rhs.grid(), 1.0), rhs, cfg).solution;
}

Field2D apply_inverse_L(const StencilOperator& op, const Field2D& rhs, const SolverConfig& cfg) {
  return solve_zero_bc(op, rhs, cfg).solution;
}

double positivity_probe(const StencilOperator& op, int samples, std::uint64_t seed) {
  const Grid2D& g = op.grid();
  const BoundaryMask mask(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec x(g.size()), y(g.size());
  double worst = std::numeric_limits<double>::infinity();
  // Odd samples are supported on a small random box so a region where p < 0
  // is not averaged away by the rest of the domain.
  const int bx = std::max(1, (g.nx() - 2) / 8), by = std::max(1, (g.ny() - 2) / 8);
  for (int s = 0; s < samples; ++s) {
    int i0 = 1, i1 = g.nx() - 2, j0 = 1, j1 = g.ny() - 2;
    if (s % 2 == 1) {
      i0 = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(g.nx() - 1 - bx));
      j0 = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(g.ny() - 1 - by));
      i1 = i0 + bx - 1;
      j1 = j0 + by - 1;
    }
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const std::size_t k = g.index(i, j);
        x[k] = (mask[k] || i < i0 || i > i1 || j < j0 || j > j1) ? 0.0 : dist(rng);
      }
    op.apply_interior(x, y);
    worst = std::min(worst, kernels::dot(x, y) / kernels::dot(x, x));
  }
  return worst;
}

}  // namespace coefid
