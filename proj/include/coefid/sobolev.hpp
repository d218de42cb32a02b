#pragma once

#include "coefid/grid.hpp"
#include "coefid/pde_solver.hpp"

namespace coefid {

/// Neuberger (Sobolev) gradient: solves (-Laplace + I) g = gradL2 with g = 0 on
/// the boundary. For h vanishing on the boundary,
///   inner(g, h) + dirichlet_inner(g, h) == inner(gradL2, h),
/// so g represents the same derivative in the W^{1,2} pairing.
Field2D neuberger(const Field2D& gradL2, const SolverConfig& cfg = {});

/// Ratio of the discrete H1 seminorms |neuberger(r)|_1 / |r|_1; 0 for r = 0.
double smoothness_gain(const Field2D& gradL2, const SolverConfig& cfg = {});

}  // namespace coefid
