#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coefid/functionals.hpp"

namespace coefid {

enum class Smoothing {
  None,
  Poly5,        ///< global least-squares fit by monomials of total degree <= 5
  Cubic,        ///< tensor-product cubic smoothing spline, weight chosen by GCV
  CubicInterp,  ///< tensor-product cubic spline through every node
};

std::string to_string(Smoothing s);
Smoothing smoothing_from_string(const std::string& name);

/// One synthetic experiment. example 1..4 selects a built-in coefficient
/// field; 0 means custom fields read from p_file / q_file / f_file.
struct ExperimentSpec {
  int example = 2;
  int nx = 49;
  int ny = 49;
  std::vector<double> lambdas{0.0};
  double noise_rel_l1 = 0.0;
  Smoothing smoothing = Smoothing::None;
  std::uint64_t seed = 42;
  double background_p = 1.0;  ///< value of p outside the inclusion in example 1
  int max_iters = 2000;
  Functional functional = Functional::GT;
  std::string p_file, q_file, f_file;

  Grid2D grid() const { return Grid2D(-1.0, 1.0, -1.0, 1.0, nx, ny); }
  void validate() const;
};

/// Built-in setup for examples 1..4 on the 49 x 49 grid.
ExperimentSpec canned_spec(int example);

/// Parses the JSON experiment document; missing fields take the canned
/// defaults of the chosen example. Throws ValidationError naming the field.
ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

/// Ground-truth (P, Q, F) of a built-in example. Q = F = 0.
CoefficientTriple truth_field(int example, const Grid2D& grid, double background_p = 1.0);

/// phi(x, y) = x + y + 4, the boundary data of every built-in example.
Field2D default_boundary(const Grid2D& grid);

struct NoisyField {
  Field2D field;
  double realized = 0.0;   ///< ||u - u_noisy||_1 / ||u||_1
  double amplitude = 0.0;  ///< half-width a of the uniform noise on [-a, a]
};

/// Adds i.i.d. uniform noise scaled so the realized relative L1 error equals
/// `target`. Deterministic for a given seed.
NoisyField add_uniform_noise(const Field2D& u, double target, std::uint64_t seed);

/// Same contract on raw samples; `weights` define the L1 norm.
std::vector<double> add_uniform_noise(std::span<const double> u, std::span<const double> weights,
                                      double target, std::uint64_t seed,
                                      double* realized = nullptr);

/// Weighted least-squares fit by the 21 monomials x^a y^b, a + b <= 5, in
/// coordinates scaled to [-1, 1]. Trapezoid weights make the residual
/// orthogonal to every monomial under `inner`.
Field2D smooth_poly5(const Field2D& u);

/// Tensor-product natural cubic spline surface.
///
/// With smoothing weight mu = 0 it interpolates the node values. With mu > 0
/// each axis is first passed through the cubic smoothing spline minimizing
/// sum (s - u)^2 + mu * integral s''^2, and the surface interpolates the
/// smoothed node values.
class CubicSurface {
public:
  CubicSurface(const Field2D& u, double mu = 0.0);

  double mu() const noexcept { return mu_; }
  const Field2D& node_values() const noexcept { return nodes_; }
  double evaluate(double x, double y) const;
  /// Spline derivatives at the nodes.
  Field2D dx() const;
  Field2D dy() const;

private:
  double mu_;
  Field2D nodes_;
  Field2D mxx_;  // second x-derivative of each row spline at the nodes
  Field2D myy_;  // second y-derivative of each column spline at the nodes
};

CubicSurface smooth_cubic(const Field2D& u, double mu = 0.0);

/// Cubic smoothing spline surface with mu minimizing the generalized
/// cross-validation score over a log grid.
CubicSurface smooth_cubic_gcv(const Field2D& u);

Field2D apply_smoothing(const Field2D& u, Smoothing s);

/// integrate(|a - truth|) / integrate(|truth|). Throws ZeroDenominator.
double rel_L1_error(const Field2D& a, const Field2D& truth);

struct SpikeReport {
  double max = 0.0, min = 0.0;
  double argmax_x = 0.0, argmax_y = 0.0, argmin_x = 0.0, argmin_y = 0.0;
  double boundary_min = 0.0, boundary_max = 0.0;
  /// How far the interior overshoots the boundary range, in units of it.
  double overshoot = 0.0;
};

SpikeReport spike_report(const Field2D& u);

struct Synthesis {
  ExperimentSpec spec;
  ProblemInstance instance;            ///< measured = smoothed noisy data
  std::vector<Field2D> clean{};          ///< noise-free forward solutions
  std::vector<Field2D> noisy{};          ///< before smoothing
  std::vector<double> realized_noise{};
  std::vector<double> solver_residuals{};
  std::vector<std::string> notes{};
};

/// Builds the truth field, solves the forward problem for every lambda, adds
/// noise and smooths. Propagates NonConvergence (e.g. example 1 with
/// background_p = 0).
Synthesis synthesize(const ExperimentSpec& spec, const SolverConfig& cfg = {});

}  // namespace coefid
