#include "coefid/sobolev.hpp"

#include <cmath>
#include <limits>

namespace coefid {

Field2D neuberger(const Field2D& gradL2, const SolverConfig& cfg) {
  return solve_helmholtz_zero_bc(gradL2, cfg);
}

double smoothness_gain(const Field2D& gradL2, const SolverConfig& cfg) {
  if (gradL2.max_abs() == 0.0) return 0.0;
  const double denom = dirichlet_inner(gradL2, gradL2);
  const Field2D g = neuberger(gradL2, cfg);
  const double num = dirichlet_inner(g, g);
  // A constant input has zero seminorm but a non-constant smoothed image.
  if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / denom);
}

}  // namespace coefid
