#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coefid/errors.hpp"

namespace coefid {

/// Uniform node-centred grid on [x0,x1] x [y0,y1].
///
/// Nodes are stored row-major: node (i, j) sits at x0 + i*hx, y0 + j*hy and
/// has flat index j*nx + i. Row j = 0 is the bottom edge (y = y0). Every
/// container and file format in the library uses this order.
class Grid2D {
public:
  Grid2D(double x0, double x1, double y0, double y1, int nx, int ny);

  /// n x n nodes on [-1,1]^2.
  static Grid2D square(int n) { return Grid2D(-1.0, 1.0, -1.0, 1.0, n, n); }

  double x0() const noexcept { return x0_; }
  double x1() const noexcept { return x1_; }
  double y0() const noexcept { return y0_; }
  double y1() const noexcept { return y1_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  double x(int i) const noexcept { return i == nx_ - 1 ? x1_ : x0_ + i * hx_; }
  double y(int j) const noexcept { return j == ny_ - 1 ? y1_ : y0_ + j * hy_; }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * nx_ + i;
  }
  bool on_boundary(int i, int j) const noexcept {
    return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
  }

  /// Trapezoid weights: product of 1D weights (h, or h/2 on the edges).
  double weight(int i, int j) const noexcept;
  double weight_x(int i) const noexcept { return (i == 0 || i == nx_ - 1) ? 0.5 * hx_ : hx_; }
  double weight_y(int j) const noexcept { return (j == 0 || j == ny_ - 1) ? 0.5 * hy_ : hy_; }

  /// Flat vector of trapezoid node weights in node order.
  const std::vector<double>& weights() const noexcept { return weights_; }

  bool operator==(const Grid2D& o) const noexcept {
    return x0_ == o.x0_ && x1_ == o.x1_ && y0_ == o.y0_ && y1_ == o.y1_ && nx_ == o.nx_ &&
           ny_ == o.ny_;
  }

private:
  double x0_, x1_, y0_, y1_;
  int nx_, ny_;
  double hx_, hy_;
  std::vector<double> weights_;
};

/// Scalar samples on the nodes of a Grid2D.
class Field2D {
public:
  explicit Field2D(Grid2D grid, double fill = 0.0);
  /// Takes ownership of `values`; rejects a wrong length or non-finite entries.
  Field2D(Grid2D grid, std::vector<double> values);

  static Field2D from_function(const Grid2D& grid,
                               const std::function<double(double, double)>& fn);

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  bool all_finite() const noexcept;
  double max_abs() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  Field2D& operator+=(const Field2D& o);
  Field2D& operator-=(const Field2D& o);
  Field2D& operator*=(double s) noexcept;
  /// this += a * x
  Field2D& add_scaled(double a, const Field2D& x);

  friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
  friend Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
  friend Field2D operator*(double s, Field2D a) { return a *= s; }
  /// Node-wise product.
  friend Field2D hadamard(Field2D a, const Field2D& b);

  bool operator==(const Field2D& o) const noexcept {
    return grid_ == o.grid_ && values_ == o.values_;
  }

private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Throws GridMismatch unless both fields share a grid.
void require_same_grid(const Field2D& a, const Field2D& b);

/// Per-node flag, true exactly on the edge nodes of the grid.
class BoundaryMask {
public:
  explicit BoundaryMask(const Grid2D& grid);
  const Grid2D& grid() const noexcept { return grid_; }
  bool operator[](std::size_t k) const noexcept { return flags_[k] != 0; }
  /// Flat indices of boundary nodes, counter-clockwise from (0,0).
  const std::vector<std::size_t>& nodes() const& noexcept { return nodes_; }
  std::vector<std::size_t> nodes() && noexcept { return std::move(nodes_); }

private:
  Grid2D grid_;
  std::vector<char> flags_;
  std::vector<std::size_t> nodes_;
};

/// Boundary values in BoundaryMask::nodes() order.
struct BoundaryValues {
  Grid2D grid;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// Discrete calculus

/// Trapezoid rule approximation of the integral of `a` over the domain.
double integrate(const Field2D& a);

/// integrate(a * b).
double inner(const Field2D& a, const Field2D& b);

/// sqrt(inner(a, a)).
double l2_norm(const Field2D& a);

/// Trapezoid approximation of the L1 norm.
double l1_norm(const Field2D& a);

/// Central differences inside, second-order one-sided differences on edges.
std::pair<Field2D, Field2D> gradient(const Field2D& a);

/// Edge-based Dirichlet pairing  sum_e m_e * (da_e)(db_e) / h_e^2.
///
/// Each edge e joins two neighbouring nodes; m_e = h_e * (transverse
/// trapezoid weight). For b vanishing on the boundary this equals
/// inner(a', -Laplace_h b) exactly, which is what makes the discrete
/// Green identity hold to solver precision.
double dirichlet_inner(const Field2D& a, const Field2D& b);

/// dirichlet_inner with each edge weighted by the arithmetic mean of p at
/// its two end nodes. Discrete form of  integral p grad(a).grad(b).
double energy_inner(const Field2D& p, const Field2D& a, const Field2D& b);

/// L2 (trapezoid-weighted) gradient of  p -> energy_inner(p, a, b).
///
/// inner(energy_gradient(a, b), h) == energy_inner(h, a, b) for every h.
/// At interior nodes this approximates grad(a).grad(b).
Field2D energy_gradient(const Field2D& a, const Field2D& b);

/// Boundary values in BoundaryMask::nodes() order.
BoundaryValues boundary_restrict(const Field2D& a);

/// Copy of `a` whose boundary nodes are taken from `src`.
Field2D boundary_overwrite(const Field2D& a, const Field2D& src);
/// Copy of `a` whose boundary nodes are taken from `values`.
Field2D boundary_overwrite(const Field2D& a, const BoundaryValues& values);

/// Copy of `a` with boundary nodes set to zero.
Field2D zero_boundary(Field2D a);

// ---------------------------------------------------------------------------
// Serialization. CSV: one line per grid row j = 0..ny-1, comma separated,
// shortest round-trip decimal form. JSON: {x0,x1,y0,y1,nx,ny,values:[...]}.

std::string to_csv(const Field2D& a);
Field2D from_csv(const Grid2D& grid, const std::string& text);
std::string to_json(const Field2D& a);
Field2D from_json(const std::string& text);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace coefid
