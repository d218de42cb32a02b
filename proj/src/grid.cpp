#include "coefid/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "coefid/kernels.hpp"

namespace coefid {

Grid2D::Grid2D(double x0, double x1, double y0, double y1, int nx, int ny)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), nx_(nx), ny_(ny) {
  if (nx < 3 || ny < 3)
    throw ValidationError("grid needs at least 3 nodes per axis (nx=" + std::to_string(nx) +
                          ", ny=" + std::to_string(ny) + ")");
  if (!(x1 > x0) || !(y1 > y0) || !std::isfinite(x0) || !std::isfinite(x1) ||
      !std::isfinite(y0) || !std::isfinite(y1))
    throw ValidationError("grid bounds must be finite with x1 > x0 and y1 > y0");
  hx_ = (x1 - x0) / (nx - 1);
  hy_ = (y1 - y0) / (ny - 1);
  weights_.resize(size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) weights_[index(i, j)] = weight_x(i) * weight_y(j);
}

double Grid2D::weight(int i, int j) const noexcept { return weight_x(i) * weight_y(j); }

// ---------------------------------------------------------------------------

Field2D::Field2D(Grid2D grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

Field2D::Field2D(Grid2D grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ValidationError("field has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_.size()) + " nodes");
  if (!all_finite()) throw ValidationError("field contains non-finite values");
}

Field2D Field2D::from_function(const Grid2D& grid,
                               const std::function<double(double, double)>& fn) {
  Field2D f(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) f(i, j) = fn(grid.x(i), grid.y(j));
  return f;
}

bool Field2D::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field2D::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field2D::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double Field2D::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

Field2D& Field2D::operator+=(const Field2D& o) {
  require_same_grid(*this, o);
  kernels::axpy(1.0, o.values_, values_);
  return *this;
}

Field2D& Field2D::operator-=(const Field2D& o) {
  require_same_grid(*this, o);
  kernels::axpy(-1.0, o.values_, values_);
  return *this;
}

Field2D& Field2D::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Field2D& Field2D::add_scaled(double a, const Field2D& x) {
  require_same_grid(*this, x);
  kernels::axpy(a, x.values_, values_);
  return *this;
}

Field2D hadamard(Field2D a, const Field2D& b) {
  require_same_grid(a, b);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
  return a;
}

void require_same_grid(const Field2D& a, const Field2D& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch();
}

// ---------------------------------------------------------------------------

BoundaryMask::BoundaryMask(const Grid2D& grid) : grid_(grid), flags_(grid.size(), 0) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  for (int i = 0; i < nx; ++i) nodes_.push_back(grid.index(i, 0));
  for (int j = 1; j < ny; ++j) nodes_.push_back(grid.index(nx - 1, j));
  for (int i = nx - 2; i >= 0; --i) nodes_.push_back(grid.index(i, ny - 1));
  for (int j = ny - 2; j >= 1; --j) nodes_.push_back(grid.index(0, j));
  for (std::size_t k : nodes_) flags_[k] = 1;
}

// ---------------------------------------------------------------------------

double integrate(const Field2D& a) {
  const auto& w = a.grid().weights();
  return kernels::dot(w, a.values());
}

double inner(const Field2D& a, const Field2D& b) {
  require_same_grid(a, b);
  return kernels::wdot(a.grid().weights(), a.values(), b.values());
}

double l2_norm(const Field2D& a) { return std::sqrt(std::max(0.0, inner(a, a))); }

double l1_norm(const Field2D& a) {
  const auto& w = a.grid().weights();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += w[k] * std::abs(a[k]);
  return s;
}

std::pair<Field2D, Field2D> gradient(const Field2D& a) {
  const Grid2D& g = a.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  Field2D dx(g), dy(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  for (int j = 0; j < ny; ++j) {
    dx(0, j) = 0.5 * ihx * (-3.0 * a(0, j) + 4.0 * a(1, j) - a(2, j));
    for (int i = 1; i < nx - 1; ++i) dx(i, j) = 0.5 * ihx * (a(i + 1, j) - a(i - 1, j));
    dx(nx - 1, j) = 0.5 * ihx * (3.0 * a(nx - 1, j) - 4.0 * a(nx - 2, j) + a(nx - 3, j));
  }
  for (int i = 0; i < nx; ++i) {
    dy(i, 0) = 0.5 * ihy * (-3.0 * a(i, 0) + 4.0 * a(i, 1) - a(i, 2));
    for (int j = 1; j < ny - 1; ++j) dy(i, j) = 0.5 * ihy * (a(i, j + 1) - a(i, j - 1));
    dy(i, ny - 1) = 0.5 * ihy * (3.0 * a(i, ny - 1) - 4.0 * a(i, ny - 2) + a(i, ny - 3));
  }
  return {std::move(dx), std::move(dy)};
}

namespace {

// Calls fn(k0, k1, c) for every grid edge joining nodes k0 and k1, where
// c = m_e / h_e^2 is the edge's quadrature factor.
template <class Fn>
void for_each_edge(const Grid2D& g, Fn&& fn) {
  const int nx = g.nx();
  const int ny = g.ny();
  for (int j = 0; j < ny; ++j) {
    const double c = g.weight_y(j) / g.hx();
    for (int i = 0; i + 1 < nx; ++i) fn(g.index(i, j), g.index(i + 1, j), c);
  }
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i) fn(g.index(i, j), g.index(i, j + 1), g.weight_x(i) / g.hy());
}

}  // namespace

double dirichlet_inner(const Field2D& a, const Field2D& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for_each_edge(a.grid(), [&](std::size_t k0, std::size_t k1, double c) {
    s += c * (a[k1] - a[k0]) * (b[k1] - b[k0]);
  });
  return s;
}

double energy_inner(const Field2D& p, const Field2D& a, const Field2D& b) {
  require_same_grid(p, a);
  require_same_grid(a, b);
  double s = 0.0;
  for_each_edge(a.grid(), [&](std::size_t k0, std::size_t k1, double c) {
    s += 0.5 * (p[k0] + p[k1]) * c * (a[k1] - a[k0]) * (b[k1] - b[k0]);
  });
  return s;
}

Field2D energy_gradient(const Field2D& a, const Field2D& b) {
  require_same_grid(a, b);
  const Grid2D& g = a.grid();
  Field2D out(g);
  for_each_edge(g, [&](std::size_t k0, std::size_t k1, double c) {
    const double half = 0.5 * c * (a[k1] - a[k0]) * (b[k1] - b[k0]);
    out[k0] += half;
    out[k1] += half;
  });
  const auto& w = g.weights();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= w[k];
  return out;
}

BoundaryValues boundary_restrict(const Field2D& a) {
  BoundaryMask mask(a.grid());
  BoundaryValues out{a.grid(), {}};
  out.values.reserve(mask.nodes().size());
  for (std::size_t k : mask.nodes()) out.values.push_back(a[k]);
  return out;
}

Field2D boundary_overwrite(const Field2D& a, const Field2D& src) {
  require_same_grid(a, src);
  Field2D out = a;
  for (std::size_t k : BoundaryMask(a.grid()).nodes()) out[k] = src[k];
  return out;
}

Field2D boundary_overwrite(const Field2D& a, const BoundaryValues& values) {
  if (!(a.grid() == values.grid)) throw GridMismatch();
  BoundaryMask mask(a.grid());
  if (values.values.size() != mask.nodes().size())
    throw ValidationError("boundary value count does not match the grid");
  Field2D out = a;
  for (std::size_t n = 0; n < mask.nodes().size(); ++n) out[mask.nodes()[n]] = values.values[n];
  return out;
}

Field2D zero_boundary(Field2D a) {
  for (std::size_t k : BoundaryMask(a.grid()).nodes()) a[k] = 0.0;
  return a;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const Field2D& a) {
  const Grid2D& g = a.grid();
  std::string out;
  out.reserve(a.size() * 20);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i > 0) out.push_back(',');
      out += format_double(a(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Field2D from_csv(const Grid2D& grid, const std::string& text) {
  std::vector<double> values;
  values.reserve(grid.size());
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw ValidationError("malformed CSV value in row " +
                                                       std::to_string(rows));
      values.push_back(v);
      ++count;
      p = res.ptr;
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (*p != ',') throw ValidationError("malformed CSV separator in row " +
                                           std::to_string(rows));
      ++p;
    }
    if (count != static_cast<std::size_t>(grid.nx()))
      throw ValidationError("CSV row " + std::to_string(rows) + " has " + std::to_string(count) +
                            " values, expected " + std::to_string(grid.nx()));
    ++rows;
  }
  if (rows != grid.ny())
    throw ValidationError("CSV has " + std::to_string(rows) + " rows, expected " +
                          std::to_string(grid.ny()));
  return Field2D(grid, std::move(values));
}

std::string to_json(const Field2D& a) {
  const Grid2D& g = a.grid();
  nlohmann::ordered_json j;
  j["x0"] = g.x0();
  j["x1"] = g.x1();
  j["y0"] = g.y0();
  j["y1"] = g.y1();
  j["nx"] = g.nx();
  j["ny"] = g.ny();
  j["values"] = std::vector<double>(a.values().begin(), a.values().end());
  return j.dump() + "\n";
}

Field2D from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Grid2D g(j.at("x0").get<double>(), j.at("x1").get<double>(), j.at("y0").get<double>(),
             j.at("y1").get<double>(), j.at("nx").get<int>(), j.at("ny").get<int>());
    return Field2D(g, j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed field JSON: ") + e.what());
  }
}

}  // namespace coefid
