#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coefid/functionals.hpp"

namespace coefid {

enum class Component { P = 0, Q = 1, F = 2 };

struct DescentConfig {
  Functional functional = Functional::GT;
  bool recover_p = true;
  bool recover_q = false;
  bool recover_f = false;

  // Backtracking line search, warm-started per component.
  double initial_step = 1.0;
  double shrink = 0.5;
  double growth = 1.2;
  double sufficient_decrease = 1e-4;

  int max_iterations = 500;
  /// Stop once (G[m - window] - G[m]) / G[m - window] falls below this.
  double stop_tolerance = 1e-8;
  int stop_window = 10;

  /// Lower clamp for interior values of p (disabled when empty).
  std::optional<double> cutoff;

  // Sobolev smoothing per component. p always keeps its boundary values.
  bool neuberger_p = true;
  bool neuberger_q = false;
  bool neuberger_f = false;

  SolverConfig solver;

  void validate() const;
  bool active(Component c) const noexcept;
};

struct TraceRow {
  int iter = 0;
  double value = 0.0;
  std::array<double, 3> alpha{};   ///< accepted step, 0 if frozen or inactive
  std::array<double, 3> gnorm{};   ///< L2 norm of the component gradient, NaN if not computed
  std::array<double, 3> relerr{};  ///< relative L1 error vs truth, NaN if unavailable
  double seconds = 0.0;
};

struct DescentTrace {
  std::vector<TraceRow> rows;

  /// CSV with header iter,G,alpha_p,...,relerr_f,seconds. With
  /// `timing == false` the seconds column is written as 0.
  std::string to_csv(bool timing = true) const;
  /// True if no recorded functional value exceeds its predecessor.
  bool monotone() const noexcept;
};

enum class StopReason { MaxIterations, Converged, Stalled, Failed };
std::string to_string(StopReason r);

struct StepOutcome {
  CoefficientTriple c;
  Evaluation eval;
  TraceRow row;
  bool stalled = false;  ///< every active component was frozen
};

/// Line-search memory carried between outer iterations.
struct StepState {
  std::array<double, 3> alpha{1.0, 1.0, 1.0};
};

/// One block-coordinate iteration p -> q -> f, each against the latest
/// partial triple. `current` must be the evaluation of `c`.
StepOutcome step_block(const CoefficientTriple& c, const Evaluation& current,
                       const ProblemInstance& inst, const DescentConfig& cfg, StepState& state);

struct DescentResult {
  CoefficientTriple c;
  DescentTrace trace{};
  StopReason reason = StopReason::MaxIterations;
  int iterations = 0;
  std::vector<std::string> warnings{};
  double max_abs_p = 0.0;       ///< over all iterates
  double min_p = 0.0;           ///< over all iterates
  double boundary_drift = 0.0;  ///< max |p_m - P| on the boundary over all iterates
  bool diverged = false;        ///< some |p_m| exceeded 100x the initial range
  std::string failure{};         ///< solver message when reason == Failed
};

/// Called after every accepted outer iteration with the new iterate.
using IterationObserver = std::function<void(int, const CoefficientTriple&)>;

/// Runs step_block until the iteration cap, a stalled line search, or a
/// relative decrease below cfg.stop_tolerance over cfg.stop_window iterations.
/// A solver failure after the initial evaluation ends the run with
/// StopReason::Failed and keeps the partial trace.
DescentResult run(const CoefficientTriple& c0, const ProblemInstance& inst,
                  const DescentConfig& cfg, const IterationObserver& observer = {});

/// Node-wise max(p, nu).
Field2D project_cutoff(const Field2D& p, double nu);

/// p0 solves -Laplace p0 = 0 with the pinned boundary values; q0 = f0 = 0.
CoefficientTriple initial_guess(const ProblemInstance& inst, const SolverConfig& cfg = {});

}  // namespace coefid
