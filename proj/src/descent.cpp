#include "coefid/descent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "coefid/data_pipeline.hpp"
#include "coefid/sobolev.hpp"

namespace coefid {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxShrinks = 80;

Field2D& component(CoefficientTriple& c, Component k) {
  return k == Component::P ? c.p : k == Component::Q ? c.q : c.f;
}

const Field2D& component(const GradientTriple& g, Component k) {
  return k == Component::P ? g.p : k == Component::Q ? g.q : g.f;
}

bool smoothed(const DescentConfig& cfg, Component k) {
  return k == Component::P ? cfg.neuberger_p : k == Component::Q ? cfg.neuberger_q : cfg.neuberger_f;
}

double relerr_or_nan(const Field2D& a, const std::optional<CoefficientTriple>& truth, Component k) {
  if (!truth) return kNaN;
  const Field2D& t = k == Component::P ? truth->p : k == Component::Q ? truth->q : truth->f;
  if (l1_norm(t) == 0.0) return kNaN;
  return rel_L1_error(a, t);
}

void fill_relerr(TraceRow& row, const CoefficientTriple& c, const ProblemInstance& inst) {
  row.relerr[0] = relerr_or_nan(c.p, inst.truth, Component::P);
  row.relerr[1] = relerr_or_nan(c.q, inst.truth, Component::Q);
  row.relerr[2] = relerr_or_nan(c.f, inst.truth, Component::F);
}

// Interior clamp; boundary nodes keep their pinned values.
void clamp_interior(Field2D& p, double nu) {
  const Grid2D& g = p.grid();
  for (int j = 1; j + 1 < g.ny(); ++j)
    for (int i = 1; i + 1 < g.nx(); ++i) p(i, j) = std::max(p(i, j), nu);
}

double boundary_deviation(const Field2D& p, const BoundaryValues& pinned) {
  const auto& nodes = BoundaryMask(p.grid()).nodes();
  double worst = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    worst = std::max(worst, std::abs(p[nodes[k]] - pinned.values[k]));
  return worst;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

}  // namespace

void DescentConfig::validate() const {
  if (!recover_p && !recover_q && !recover_f)
    throw ValidationError("descent needs at least one component to recover");
  if (!(initial_step > 0.0) || !std::isfinite(initial_step))
    throw ValidationError("initial_step must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("shrink must lie in (0, 1)");
  if (!(growth >= 1.0) || !std::isfinite(growth)) throw ValidationError("growth must be >= 1");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw ValidationError("sufficient_decrease must lie in (0, 1)");
  if (max_iterations < 0) throw ValidationError("max_iterations must be non-negative");
  if (stop_window < 1) throw ValidationError("stop_window must be positive");
  if (!(stop_tolerance >= 0.0)) throw ValidationError("stop_tolerance must be non-negative");
  if (cutoff && !std::isfinite(*cutoff)) throw ValidationError("cutoff must be finite");
  solver.validate();
}

bool DescentConfig::active(Component c) const noexcept {
  return c == Component::P ? recover_p : c == Component::Q ? recover_q : recover_f;
}

std::string DescentTrace::to_csv(bool timing) const {
  std::ostringstream os;
  os << "iter,G,alpha_p,alpha_q,alpha_f,gnorm_p,gnorm_q,gnorm_f,relerr_p,relerr_q,relerr_f,seconds\n";
  for (const auto& r : rows) {
    os << r.iter << ',' << csv_number(r.value);
    for (double a : r.alpha) os << ',' << csv_number(a);
    for (double g : r.gnorm) os << ',' << csv_number(g);
    for (double e : r.relerr) os << ',' << csv_number(e);
    os << ',' << csv_number(timing ? r.seconds : 0.0) << '\n';
  }
  return os.str();
}

bool DescentTrace::monotone() const noexcept {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].value > rows[k - 1].value) return false;
  return true;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iters";
    case StopReason::Converged: return "converged";
    case StopReason::Stalled: return "stalled";
    case StopReason::Failed: return "failed";
  }
  return "unknown";
}

Field2D project_cutoff(const Field2D& p, double nu) {
  Field2D out = p;
  for (double& v : out.values()) v = std::max(v, nu);
  return out;
}

CoefficientTriple initial_guess(const ProblemInstance& inst, const SolverConfig& cfg) {
  const Grid2D& g = inst.grid;
  const Field2D phi = boundary_overwrite(Field2D(g), inst.p_boundary);
  const Field2D one(g, 1.0), zero(g);
  Field2D p0 = solve_dirichlet(one, zero, 0.0, zero, phi, cfg);
  // Exact boundary values regardless of solver rounding.
  p0 = boundary_overwrite(p0, inst.p_boundary);
  return {std::move(p0), Field2D(g), Field2D(g)};
}

StepOutcome step_block(const CoefficientTriple& c, const Evaluation& current,
                       const ProblemInstance& inst, const DescentConfig& cfg, StepState& state) {
  StepOutcome out{c, current, {}, false};
  out.row.gnorm = {kNaN, kNaN, kNaN};
  bool moved = false;

  for (Component k : {Component::P, Component::Q, Component::F}) {
    const int idx = static_cast<int>(k);
    if (!cfg.active(k)) continue;

    const GradientTriple grad = gradient(inst, out.eval);
    Field2D g = component(grad, k);
    // p is pinned on the boundary, so its direction must vanish there.
    if (k == Component::P) g = zero_boundary(std::move(g));
    out.row.gnorm[idx] = l2_norm(g);

    const Field2D d = smoothed(cfg, k) ? neuberger(g, cfg.solver) : g;
    const double slope = inner(g, d);
    if (!(slope > 0.0) || !std::isfinite(slope)) continue;

    const Field2D& cur = component(out.c, k);
    const double scale = std::max(1.0, cur.max_abs());
    const double dmax = d.max_abs();
    double alpha = state.alpha[idx];

    for (int attempt = 0; attempt < kMaxShrinks; ++attempt, alpha *= cfg.shrink) {
      if (alpha * dmax <= 1e-15 * scale) break;
      CoefficientTriple trial = out.c;
      Field2D& t = component(trial, k);
      t.add_scaled(-alpha, d);
      if (k == Component::P && cfg.cutoff) clamp_interior(t, *cfg.cutoff);

      Evaluation ev;
      try {
        ev = evaluate(trial, inst, cfg.functional, cfg.solver);
      } catch (const NonConvergence&) {
        // A trial step that leaves the solvable region is simply too long.
        continue;
      }
      if (!std::isfinite(ev.value)) continue;

      const double required = cfg.sufficient_decrease * inner(g, cur - t);
      if (ev.value < out.eval.value && ev.value <= out.eval.value - required) {
        out.row.alpha[idx] = alpha;
        state.alpha[idx] = alpha * cfg.growth;
        out.c = std::move(trial);
        out.eval = std::move(ev);
        moved = true;
        break;
      }
    }
  }

  out.stalled = !moved;
  out.row.value = out.eval.value;
  return out;
}

DescentResult run(const CoefficientTriple& c0, const ProblemInstance& inst,
                  const DescentConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  inst.validate();
  c0.validate();
  if (!(c0.grid() == inst.grid)) throw GridMismatch();
  if (boundary_deviation(c0.p, inst.p_boundary) != 0.0)
    throw ValidationError("initial p does not match the pinned boundary values");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  DescentResult res{.c = c0};
  res.warnings = inst.warnings(cfg.recover_p, cfg.recover_q, cfg.recover_f);
  if (cfg.cutoff) clamp_interior(res.c.p, *cfg.cutoff);

  const double bound = 100.0 * std::max(1.0, c0.p.max_abs());
  auto track = [&](const Field2D& p) {
    res.max_abs_p = std::max(res.max_abs_p, p.max_abs());
    res.min_p = std::min(res.min_p, p.min());
    res.boundary_drift = std::max(res.boundary_drift, boundary_deviation(p, inst.p_boundary));
    if (!p.all_finite() || p.max_abs() > bound) res.diverged = true;
  };
  res.min_p = res.c.p.min();
  track(res.c.p);

  Evaluation ev = evaluate(res.c, inst, cfg.functional, cfg.solver);
  TraceRow first;
  first.value = ev.value;
  first.gnorm = {kNaN, kNaN, kNaN};
  fill_relerr(first, res.c, inst);
  first.seconds = elapsed();
  res.trace.rows.push_back(first);

  StepState state;
  state.alpha.fill(cfg.initial_step);

  for (int m = 1; m <= cfg.max_iterations; ++m) {
    if (ev.value == 0.0) {
      res.reason = StopReason::Converged;
      break;
    }
    std::optional<StepOutcome> next;
    try {
      next = step_block(res.c, ev, inst, cfg, state);
    } catch (const Error& e) {
      res.reason = StopReason::Failed;
      res.failure = e.what();
      break;
    }
    StepOutcome& step = *next;
    if (step.stalled) {
      res.reason = StopReason::Stalled;
      res.warnings.push_back("line search stalled at iteration " + std::to_string(m));
      break;
    }
    res.c = std::move(step.c);
    ev = std::move(step.eval);
    step.row.iter = m;
    fill_relerr(step.row, res.c, inst);
    step.row.seconds = elapsed();
    res.trace.rows.push_back(step.row);
    res.iterations = m;
    track(res.c.p);
    if (observer) observer(m, res.c);

    if (m >= cfg.stop_window) {
      const double before = res.trace.rows[m - cfg.stop_window].value;
      const double now = res.trace.rows[m].value;
      if (before > 0.0 && (before - now) / before < cfg.stop_tolerance) {
        res.reason = StopReason::Converged;
        break;
      }
    }
  }
  return res;
}

}  // namespace coefid
