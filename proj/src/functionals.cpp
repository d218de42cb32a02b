#include "coefid/functionals.hpp"

#include <cmath>
#include <set>

namespace coefid {

void CoefficientTriple::validate() const {
  require_same_grid(p, q);
  require_same_grid(p, f);
  if (!p.all_finite() || !q.all_finite() || !f.all_finite())
    throw ValidationError("coefficient triple contains non-finite values");
}

std::vector<double> ProblemInstance::lambdas() const {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& m : data) out.push_back(m.lambda);
  return out;
}

void ProblemInstance::validate() const {
  if (data.empty()) throw ValidationError("problem instance needs at least one lambda");
  for (const auto& m : data) {
    if (!(m.u.grid() == grid)) throw GridMismatch();
    if (!std::isfinite(m.lambda)) throw ValidationError("lambda must be finite");
    if (!m.u.all_finite()) throw ValidationError("measured data contains non-finite values");
  }
  if (!(p_boundary.grid == grid)) throw GridMismatch();
  if (p_boundary.values.size() != BoundaryMask(grid).nodes().size())
    throw ValidationError("p boundary has the wrong number of values");
  if (truth) {
    truth->validate();
    if (!(truth->grid() == grid)) throw GridMismatch();
  }
}

std::vector<std::string> ProblemInstance::warnings(bool recover_p, bool recover_q,
                                                   bool recover_f) const {
  std::vector<std::string> out;
  const std::vector<double> all = lambdas();
  const std::set<double> distinct(all.begin(), all.end());
  const int active = int(recover_p) + int(recover_q) + int(recover_f);
  if (active == 3 && distinct.size() < 3)
    out.push_back("joint recovery of p, q and f needs at least three distinct lambdas, have " +
                  std::to_string(distinct.size()));
  if (recover_q && distinct.size() == 1 && *distinct.begin() == 0.0)
    out.push_back("q cannot be recovered from lambda = 0 data alone");
  return out;
}

std::string to_string(Functional which) {
  return which == Functional::GLambda ? "G_lambda" : "G_T";
}

Functional functional_from_string(const std::string& name) {
  if (name == "G_lambda" || name == "G_λ" || name == "glambda") return Functional::GLambda;
  if (name == "G_T" || name == "gt") return Functional::GT;
  throw ValidationError("unknown functional '" + name + "' (expected G_lambda or G_T)");
}

// ---------------------------------------------------------------------------

Field2D forward_solution(const CoefficientTriple& c, const Measurement& m,
                         const SolverConfig& cfg) {
  try {
    return solve_dirichlet(c.p, c.q, m.lambda, c.f, m.u, cfg);
  } catch (const NonConvergence& e) {
    if (e.lambda()) throw;
    throw e.with_lambda(m.lambda);
  }
}

std::vector<Field2D> forward_solutions(const CoefficientTriple& c, const ProblemInstance& inst,
                                       const SolverConfig& cfg) {
  std::vector<Field2D> out;
  out.reserve(inst.data.size());
  for (const auto& m : inst.data) out.push_back(forward_solution(c, m, cfg));
  return out;
}

double G_lambda_from_solution(const CoefficientTriple& c, const Measurement& m,
                              const Field2D& u_c) {
  const Field2D d = m.u - u_c;
  return energy_inner(c.p, d, d) + m.lambda * inner(c.q, hadamard(d, d));
}

double eval_G_lambda(const CoefficientTriple& c, const Measurement& m, const SolverConfig& cfg) {
  return G_lambda_from_solution(c, m, forward_solution(c, m, cfg));
}

double G_lambda_alt_from_solution(const CoefficientTriple& c, const Measurement& m,
                                  const Field2D& u_c) {
  const Field2D& u = m.u;
  const Field2D sq_diff = hadamard(u, u) - hadamard(u_c, u_c);
  return energy_inner(c.p, u, u) - energy_inner(c.p, u_c, u_c) +
         m.lambda * inner(c.q, sq_diff) - 2.0 * inner(c.f, u - u_c);
}

double eval_G_lambda_alt(const CoefficientTriple& c, const Measurement& m,
                         const SolverConfig& cfg) {
  return G_lambda_alt_from_solution(c, m, forward_solution(c, m, cfg));
}

GradientTriple grad_G_lambda_from_solution(const Measurement& m, const Field2D& u_c) {
  const Field2D& u = m.u;
  Field2D gp = energy_gradient(u, u) - energy_gradient(u_c, u_c);
  Field2D gq = m.lambda * (hadamard(u, u) - hadamard(u_c, u_c));
  Field2D gf = -2.0 * (u - u_c);
  return {std::move(gp), std::move(gq), std::move(gf)};
}

GradientTriple grad_G_lambda(const CoefficientTriple& c, const Measurement& m,
                             const SolverConfig& cfg) {
  return grad_G_lambda_from_solution(m, forward_solution(c, m, cfg));
}

Field2D linearized_residual(const TangentTriple& h, const Field2D& u_c, double lambda) {
  return apply_T(CoefficientTriple{h.h1, h.h2, h.h3}, u_c, lambda);
}

double second_diff_G_lambda(const CoefficientTriple& c, const TangentTriple& h,
                            const TangentTriple& k, const Measurement& m,
                            const SolverConfig& cfg) {
  const Field2D u_c = forward_solution(c, m, cfg);
  const Field2D eh = linearized_residual(h, u_c, m.lambda);
  const Field2D ek = linearized_residual(k, u_c, m.lambda);
  const StencilOperator op = assemble(c.p, c.q, m.lambda);
  return 2.0 * inner(apply_inverse_L(op, eh, cfg), ek);
}

IdentitySides difference_identity_check(const CoefficientTriple& c1, const CoefficientTriple& c2,
                                        const Measurement& m, const SolverConfig& cfg) {
  const Field2D u1 = forward_solution(c1, m, cfg);
  const Field2D u2 = forward_solution(c2, m, cfg);
  const Field2D& u = m.u;
  IdentitySides out;
  out.lhs = G_lambda_from_solution(c1, m, u1) - G_lambda_from_solution(c2, m, u2);
  const Field2D dp = c1.p - c2.p;
  const Field2D dq = c1.q - c2.q;
  const Field2D df = c1.f - c2.f;
  Field2D mid = u - 0.5 * (u1 + u2);
  out.rhs = energy_inner(dp, u, u) - energy_inner(dp, u1, u2) +
            m.lambda * inner(dq, hadamard(u, u) - hadamard(u1, u2)) - 2.0 * inner(df, mid);
  return out;
}

// ---------------------------------------------------------------------------

Field2D apply_T(const CoefficientTriple& c, const Field2D& u, double lambda) {
  require_same_grid(c.p, u);
  Field2D t = assemble(c.p, c.q, lambda).apply_interior(u);
  t -= c.f;
  return zero_boundary(std::move(t));
}

GTEvaluation eval_G_T(const CoefficientTriple& c, const Measurement& m, const SolverConfig& cfg) {
  GTEvaluation ev{0.0, 0.0, 0.0, 0.0, apply_T(c, m.u, m.lambda), Field2D(m.u.grid())};
  ev.v = solve_poisson_zero_bc(ev.t, cfg);
  ev.t_norm2 = inner(ev.t, ev.t);
  ev.energy = dirichlet_inner(ev.v, ev.v);
  ev.pairing = inner(ev.t, ev.v);
  ev.value = ev.t_norm2 + ev.energy;
  return ev;
}

GradientTriple grad_G_T_from_eval(const Measurement& m, const GTEvaluation& ev) {
  const Field2D z = ev.t + ev.v;
  Field2D gp = 2.0 * energy_gradient(m.u, z);
  Field2D gq = (2.0 * m.lambda) * hadamard(m.u, z);
  Field2D gf = -2.0 * z;
  return {std::move(gp), std::move(gq), std::move(gf)};
}

GradientTriple grad_G_T(const CoefficientTriple& c, const Measurement& m,
                        const SolverConfig& cfg) {
  return grad_G_T_from_eval(m, eval_G_T(c, m, cfg));
}

// ---------------------------------------------------------------------------

Evaluation evaluate(const CoefficientTriple& c, const ProblemInstance& inst, Functional which,
                    const SolverConfig& cfg) {
  Evaluation ev;
  ev.which = which;
  for (const auto& m : inst.data) {
    if (which == Functional::GLambda) {
      Field2D u_c = forward_solution(c, m, cfg);
      ev.terms.push_back(G_lambda_from_solution(c, m, u_c));
      ev.solutions.push_back(std::move(u_c));
    } else {
      GTEvaluation g = eval_G_T(c, m, cfg);
      ev.terms.push_back(g.value);
      ev.solutions.push_back(std::move(g.v));
      ev.residuals.push_back(std::move(g.t));
    }
  }
  // Fixed summation order keeps the total reproducible.
  for (double t : ev.terms) ev.value += t;
  return ev;
}

GradientTriple gradient(const ProblemInstance& inst, const Evaluation& ev) {
  const Grid2D& g = inst.grid;
  GradientTriple total{Field2D(g), Field2D(g), Field2D(g)};
  for (std::size_t n = 0; n < inst.data.size(); ++n) {
    const Measurement& m = inst.data[n];
    GradientTriple part =
        ev.which == Functional::GLambda
            ? grad_G_lambda_from_solution(m, ev.solutions[n])
            : grad_G_T_from_eval(m, GTEvaluation{0, 0, 0, 0, ev.residuals[n], ev.solutions[n]});
    total.p += part.p;
    total.q += part.q;
    total.f += part.f;
  }
  return total;
}

double eval_G_total(const CoefficientTriple& c, const ProblemInstance& inst, Functional which,
                    const SolverConfig& cfg) {
  return evaluate(c, inst, which, cfg).value;
}

GradientTriple grad_G_total(const CoefficientTriple& c, const ProblemInstance& inst,
                            Functional which, const SolverConfig& cfg) {
  return gradient(inst, evaluate(c, inst, which, cfg));
}

// ---------------------------------------------------------------------------

NaiveRecovery naive_recover_1d(std::span<const double> u, std::span<const double> f, double p0,
                               std::optional<double> epsilon) {
  const std::size_t n = u.size();
  if (n < 3) throw ValidationError("1D recovery needs at least 3 samples");
  if (f.size() != n) throw ValidationError("u and f must have the same number of samples");
  const double h = 1.0 / static_cast<double>(n - 1);
  NaiveRecovery out;
  out.epsilon = epsilon.value_or(h);
  out.du.resize(n);
  out.du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  for (std::size_t k = 1; k + 1 < n; ++k) out.du[k] = (u[k + 1] - u[k - 1]) / (2.0 * h);
  out.du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);

  out.p.resize(n);
  out.unstable.resize(n);
  const double flux0 = p0 * out.du[0];
  double integral = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) integral += 0.5 * h * (f[k - 1] + f[k]);
    out.p[k] = (flux0 - integral) / out.du[k];
    out.unstable[k] = std::abs(out.du[k]) < out.epsilon;
    out.division_unstable = out.division_unstable || out.unstable[k];
  }
  return out;
}

}  // namespace coefid
