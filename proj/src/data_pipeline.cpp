#include "coefid/data_pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace coefid {
namespace {

using json = nlohmann::ordered_json;

// Second derivatives of the natural cubic spline through y on a uniform grid.
std::vector<double> natural_second_derivs(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  const std::size_t k = n - 2;
  std::vector<double> diag(k, 2.0 * h / 3.0), rhs(k);
  const double off = h / 6.0;
  for (std::size_t i = 0; i < k; ++i) rhs[i] = (y[i + 2] - 2.0 * y[i + 1] + y[i]) / h;
  for (std::size_t i = 1; i < k; ++i) {
    const double w = off / diag[i - 1];
    diag[i] -= w * off;
    rhs[i] -= w * rhs[i - 1];
  }
  m[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = (rhs[i] - off * m[i + 2]) / diag[i];
  return m;
}

double spline_eval(std::span<const double> y, std::span<const double> m, double t0, double h,
                   double t) {
  const int n = static_cast<int>(y.size());
  int i = static_cast<int>(std::floor((t - t0) / h));
  i = std::clamp(i, 0, n - 2);
  const double a = (t0 + (i + 1) * h - t) / h;
  const double b = 1.0 - a;
  return a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
}

double spline_node_slope(std::span<const double> y, std::span<const double> m, double h,
                         std::size_t i) {
  const std::size_t n = y.size();
  if (i + 1 < n) return (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
  return (y[n - 1] - y[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
}

// Reinsch smoother (I + mu Q R^-1 Q^T)^-1 for n uniform knots.
Eigen::MatrixXd smoother(int n, double h, double mu) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  if (mu == 0.0) return id;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n - 2);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n - 2, n - 2);
  for (int k = 0; k < n - 2; ++k) {
    q(k, k) = 1.0 / h;
    q(k + 1, k) = -2.0 / h;
    q(k + 2, k) = 1.0 / h;
    r(k, k) = 2.0 * h / 3.0;
    if (k + 1 < n - 2) r(k, k + 1) = r(k + 1, k) = h / 6.0;
  }
  const Eigen::MatrixXd k = q * r.ldlt().solve(q.transpose());
  return (id + mu * k).ldlt().solve(id);
}

// Row j of the matrix is grid row j (fixed y), column i is fixed x.
Eigen::MatrixXd as_matrix(const Field2D& u) {
  const Grid2D& g = u.grid();
  Eigen::MatrixXd m(g.ny(), g.nx());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) m(j, i) = u(i, j);
  return m;
}

Field2D from_matrix(const Grid2D& g, const Eigen::MatrixXd& m) {
  Field2D out(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out(i, j) = m(j, i);
  return out;
}

double weighted_l1(std::span<const double> a, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += w[k] * std::abs(a[k]);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Field2D load_field(const std::string& path, const Grid2D& grid) {
  const std::string text = read_file(path);
  Field2D f = path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? from_json(text)
                                                                           : from_csv(grid, text);
  if (!(f.grid() == grid)) throw GridMismatch();
  return f;
}

}  // namespace

std::string to_string(Smoothing s) {
  switch (s) {
    case Smoothing::None: return "none";
    case Smoothing::Poly5: return "poly5";
    case Smoothing::Cubic: return "cubic";
    case Smoothing::CubicInterp: return "cubic_interp";
  }
  return "none";
}

Smoothing smoothing_from_string(const std::string& name) {
  if (name == "none") return Smoothing::None;
  if (name == "poly5") return Smoothing::Poly5;
  if (name == "cubic") return Smoothing::Cubic;
  if (name == "cubic_interp") return Smoothing::CubicInterp;
  throw ValidationError("smoothing: unknown value '" + name +
                        "' (expected none, poly5, cubic or cubic_interp)");
}

void ExperimentSpec::validate() const {
  if (example < 0 || example > 4) throw UnknownExample(std::to_string(example));
  if (nx < 3 || ny < 3) throw ValidationError("nx and ny must be at least 3");
  if (lambdas.empty()) throw ValidationError("lambda: at least one value is required");
  for (double l : lambdas)
    if (!std::isfinite(l)) throw ValidationError("lambda: values must be finite");
  if (!(noise_rel_l1 >= 0.0) || !std::isfinite(noise_rel_l1))
    throw ValidationError("noise_rel_l1 must be a finite non-negative number");
  if (!std::isfinite(background_p)) throw ValidationError("background_p must be finite");
  if (max_iters < 0) throw ValidationError("max_iters must be non-negative");
  if (example == 0 && p_file.empty())
    throw ValidationError("p_file: required for a custom example");
}

ExperimentSpec canned_spec(int example) {
  ExperimentSpec s;
  s.example = example;
  switch (example) {
    case 0:
      break;
    case 1:
      s.noise_rel_l1 = 0.07;
      s.smoothing = Smoothing::Poly5;
      break;
    case 2:
      s.noise_rel_l1 = 0.0074;
      s.smoothing = Smoothing::Cubic;
      break;
    case 3:
    case 4:
      break;
    default:
      throw UnknownExample(std::to_string(example));
  }
  return s;
}

ExperimentSpec spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("spec must be a JSON object");

  int example = 2;
  if (doc.contains("example")) {
    const json& e = doc["example"];
    if (e.is_string() && e.get<std::string>() == "custom") example = 0;
    else if (e.is_number_integer()) example = e.get<int>();
    else throw ValidationError("example: expected 1..4 or \"custom\"");
    if (example < 0 || example > 4) throw UnknownExample(e.dump());
  }
  ExperimentSpec s = canned_spec(example);

  auto number = [&](const char* key) -> double {
    const json& v = doc[key];
    if (!v.is_number()) throw ValidationError(std::string(key) + ": expected a number");
    return v.get<double>();
  };
  auto integer = [&](const char* key) -> long long {
    const json& v = doc[key];
    if (!v.is_number_integer()) throw ValidationError(std::string(key) + ": expected an integer");
    return v.get<long long>();
  };
  auto string = [&](const char* key) -> std::string {
    const json& v = doc[key];
    if (!v.is_string()) throw ValidationError(std::string(key) + ": expected a string");
    return v.get<std::string>();
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "example") continue;
    if (key == "nx") s.nx = static_cast<int>(integer("nx"));
    else if (key == "ny") s.ny = static_cast<int>(integer("ny"));
    else if (key == "lambda") {
      s.lambdas.clear();
      if (value.is_number()) s.lambdas.push_back(value.get<double>());
      else if (value.is_array()) {
        for (const auto& v : value) {
          if (!v.is_number()) throw ValidationError("lambda: expected numbers");
          s.lambdas.push_back(v.get<double>());
        }
      } else throw ValidationError("lambda: expected a number or an array of numbers");
    }
    else if (key == "noise_rel_l1") s.noise_rel_l1 = number("noise_rel_l1");
    else if (key == "smoothing") s.smoothing = smoothing_from_string(string("smoothing"));
    else if (key == "seed") {
      const long long seed = integer("seed");
      if (seed < 0) throw ValidationError("seed: must be non-negative");
      s.seed = static_cast<std::uint64_t>(seed);
    }
    else if (key == "background_p") s.background_p = number("background_p");
    else if (key == "max_iters") s.max_iters = static_cast<int>(integer("max_iters"));
    else if (key == "functional") s.functional = functional_from_string(string("functional"));
    else if (key == "p_file") s.p_file = string("p_file");
    else if (key == "q_file") s.q_file = string("q_file");
    else if (key == "f_file") s.f_file = string("f_file");
    else throw ValidationError(key + ": unknown field");
  }
  s.validate();
  return s;
}

std::string spec_to_json(const ExperimentSpec& s) {
  json doc;
  if (s.example == 0) doc["example"] = "custom";
  else doc["example"] = s.example;
  doc["nx"] = s.nx;
  doc["ny"] = s.ny;
  if (s.lambdas.size() == 1) doc["lambda"] = s.lambdas[0];
  else doc["lambda"] = s.lambdas;
  doc["noise_rel_l1"] = s.noise_rel_l1;
  doc["smoothing"] = to_string(s.smoothing);
  doc["seed"] = s.seed;
  doc["background_p"] = s.background_p;
  doc["max_iters"] = s.max_iters;
  doc["functional"] = to_string(s.functional);
  if (!s.p_file.empty()) doc["p_file"] = s.p_file;
  if (!s.q_file.empty()) doc["q_file"] = s.q_file;
  if (!s.f_file.empty()) doc["f_file"] = s.f_file;
  return doc.dump(2);
}

CoefficientTriple truth_field(int example, const Grid2D& grid, double background_p) {
  std::function<double(double, double)> fn;
  switch (example) {
    case 1:
      fn = [background_p](double x, double y) {
        return std::abs(x) < 0.5 && std::abs(y) < 0.5 ? 2.0 : background_p;
      };
      break;
    case 2:
      fn = [](double x, double y) { return 1.0 + std::sin(2.0 * x * y) + std::cos(2.0 * x * y); };
      break;
    case 3:
      // Sign quadrants; the axes belong to the non-negative side.
      fn = [](double x, double y) {
        if (x < 0.0 && y < 0.0) return -2.0;
        if (x >= 0.0 && y < 0.0) return 0.5;
        if (x < 0.0 && y >= 0.0) return 0.5;
        return 2.0;
      };
      break;
    case 4:
      // Overlapping bands resolved by the first matching case.
      fn = [](double x, double y) {
        const double ax = std::abs(x), ay = std::abs(y);
        if (-0.25 < ax && ax < 0.75 && -0.25 < ay && ay < 0.75) return -2.0;
        if (0.25 < ax && ax < 0.75 && 0.25 < ay && ay < 0.75) return 2.0;
        return 1.0;
      };
      break;
    default:
      throw UnknownExample(std::to_string(example));
  }
  return {Field2D::from_function(grid, fn), Field2D(grid), Field2D(grid)};
}

Field2D default_boundary(const Grid2D& grid) {
  return Field2D::from_function(grid, [](double x, double y) { return x + y + 4.0; });
}

std::vector<double> add_uniform_noise(std::span<const double> u, std::span<const double> weights,
                                      double target, std::uint64_t seed, double* realized) {
  if (weights.size() != u.size()) throw ValidationError("weights and samples differ in length");
  if (!(target >= 0.0) || !std::isfinite(target))
    throw ValidationError("noise level must be a finite non-negative number");
  std::vector<double> out(u.begin(), u.end());
  if (realized) *realized = 0.0;
  if (target == 0.0) return out;

  const double norm_u = weighted_l1(u, weights);
  if (norm_u == 0.0) throw ZeroDenominator();

  std::mt19937_64 rng(seed);
  std::vector<double> e(u.size());
  // 53 random bits mapped to [-1, 1); spelled out so the stream does not
  // depend on the standard library's distribution implementation.
  for (double& v : e) v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  const double norm_e = weighted_l1(e, weights);
  if (norm_e == 0.0) throw ZeroDenominator();

  // The realized error is linear in the amplitude, so one scaling hits it.
  const double a = target * norm_u / norm_e;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += a * e[k];
  if (realized) {
    std::vector<double> diff(u.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = out[k] - u[k];
    *realized = weighted_l1(diff, weights) / norm_u;
  }
  return out;
}

NoisyField add_uniform_noise(const Field2D& u, double target, std::uint64_t seed) {
  NoisyField out{u, 0.0, 0.0};
  const auto& w = u.grid().weights();
  std::vector<double> v = add_uniform_noise(u.values(), w, target, seed, &out.realized);
  out.field = Field2D(u.grid(), std::move(v));
  if (target > 0.0) {
    const Field2D diff = out.field - u;
    out.amplitude = diff.max_abs();
  }
  return out;
}

Field2D smooth_poly5(const Field2D& u) {
  const Grid2D& g = u.grid();
  const double cx = 0.5 * (g.x0() + g.x1()), sx = 0.5 * (g.x1() - g.x0());
  const double cy = 0.5 * (g.y0() + g.y1()), sy = 0.5 * (g.y1() - g.y0());
  const auto n = static_cast<Eigen::Index>(g.size());
  constexpr int kTerms = 21;
  Eigen::MatrixXd a(n, kTerms);
  Eigen::VectorXd b(n), sw(n);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const auto k = static_cast<Eigen::Index>(g.index(i, j));
      const double x = (g.x(i) - cx) / sx, y = (g.y(j) - cy) / sy;
      sw(k) = std::sqrt(g.weight(i, j));
      int col = 0;
      for (int deg = 0; deg <= 5; ++deg)
        for (int py = 0; py <= deg; ++py)
          a(k, col++) = std::pow(x, deg - py) * std::pow(y, py);
      b(k) = u[static_cast<std::size_t>(k)];
    }
  }
  const Eigen::MatrixXd wa = sw.asDiagonal() * a;
  const Eigen::VectorXd wb = sw.cwiseProduct(b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wa, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                            : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) throw IllConditioned("degree-5 surface fit is rank deficient on this grid", cond);
  const Eigen::VectorXd coef = svd.solve(wb);
  const Eigen::VectorXd fit = a * coef;
  return Field2D(g, std::vector<double>(fit.data(), fit.data() + fit.size()));
}

CubicSurface::CubicSurface(const Field2D& u, double mu)
    : mu_(mu), nodes_(u.grid()), mxx_(u.grid()), myy_(u.grid()) {
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw ValidationError("spline smoothing weight must be finite and non-negative");
  if (!u.all_finite()) throw ValidationError("spline data contains non-finite values");
  const Grid2D& g = u.grid();
  if (mu == 0.0) {
    nodes_ = u;
  } else {
    const Eigen::MatrixXd sx = smoother(g.nx(), g.hx(), mu);
    const Eigen::MatrixXd sy = smoother(g.ny(), g.hy(), mu);
    nodes_ = from_matrix(g, sy * as_matrix(u) * sx.transpose());
  }
  std::vector<double> line;
  for (int j = 0; j < g.ny(); ++j) {
    line.assign(nodes_.data() + g.index(0, j), nodes_.data() + g.index(0, j) + g.nx());
    const auto m = natural_second_derivs(line, g.hx());
    for (int i = 0; i < g.nx(); ++i) mxx_(i, j) = m[i];
  }
  line.resize(g.ny());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) line[j] = nodes_(i, j);
    const auto m = natural_second_derivs(line, g.hy());
    for (int j = 0; j < g.ny(); ++j) myy_(i, j) = m[j];
  }
}

double CubicSurface::evaluate(double x, double y) const {
  const Grid2D& g = nodes_.grid();
  if (!(x >= g.x0() && x <= g.x1() && y >= g.y0() && y <= g.y1()))
    throw ValidationError("spline evaluation point lies outside the grid");
  std::vector<double> column(g.ny());
  for (int j = 0; j < g.ny(); ++j) {
    const double* row = nodes_.data() + g.index(0, j);
    const double* m = mxx_.data() + g.index(0, j);
    column[j] = spline_eval({row, std::size_t(g.nx())}, {m, std::size_t(g.nx())}, g.x0(), g.hx(), x);
  }
  const auto m = natural_second_derivs(column, g.hy());
  return spline_eval(column, m, g.y0(), g.hy(), y);
}

Field2D CubicSurface::dx() const {
  const Grid2D& g = nodes_.grid();
  Field2D out(g);
  for (int j = 0; j < g.ny(); ++j) {
    std::span<const double> row(nodes_.data() + g.index(0, j), std::size_t(g.nx()));
    std::span<const double> m(mxx_.data() + g.index(0, j), std::size_t(g.nx()));
    for (int i = 0; i < g.nx(); ++i) out(i, j) = spline_node_slope(row, m, g.hx(), i);
  }
  return out;
}

Field2D CubicSurface::dy() const {
  const Grid2D& g = nodes_.grid();
  Field2D out(g);
  std::vector<double> col(g.ny()), m(g.ny());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) {
      col[j] = nodes_(i, j);
      m[j] = myy_(i, j);
    }
    for (int j = 0; j < g.ny(); ++j) out(i, j) = spline_node_slope(col, m, g.hy(), j);
  }
  return out;
}

CubicSurface smooth_cubic(const Field2D& u, double mu) { return CubicSurface(u, mu); }

CubicSurface smooth_cubic_gcv(const Field2D& u) {
  const Grid2D& g = u.grid();
  const Eigen::MatrixXd data = as_matrix(u);
  const double n = static_cast<double>(g.size());
  double best_score = std::numeric_limits<double>::infinity();
  double best_mu = 0.0;
  for (int k = 0; k <= 90; ++k) {
    const double mu = std::pow(10.0, -8.0 + 0.1 * k);
    const Eigen::MatrixXd sx = smoother(g.nx(), g.hx(), mu);
    const Eigen::MatrixXd sy = smoother(g.ny(), g.hy(), mu);
    const double rss = (data - sy * data * sx.transpose()).squaredNorm();
    const double dof = n - sx.trace() * sy.trace();
    if (!(dof > 0.0)) continue;
    const double score = n * rss / (dof * dof);
    if (score < best_score) {
      best_score = score;
      best_mu = mu;
    }
  }
  return CubicSurface(u, best_mu);
}

Field2D apply_smoothing(const Field2D& u, Smoothing s) {
  switch (s) {
    case Smoothing::None: return u;
    case Smoothing::Poly5: return smooth_poly5(u);
    case Smoothing::Cubic: return smooth_cubic_gcv(u).node_values();
    case Smoothing::CubicInterp: return smooth_cubic(u, 0.0).node_values();
  }
  return u;
}

double rel_L1_error(const Field2D& a, const Field2D& truth) {
  require_same_grid(a, truth);
  const double den = l1_norm(truth);
  if (den == 0.0) throw ZeroDenominator();
  return l1_norm(a - truth) / den;
}

SpikeReport spike_report(const Field2D& u) {
  const Grid2D& g = u.grid();
  SpikeReport r;
  r.max = -std::numeric_limits<double>::infinity();
  r.min = std::numeric_limits<double>::infinity();
  r.boundary_max = -std::numeric_limits<double>::infinity();
  r.boundary_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double v = u(i, j);
      if (v > r.max) r.max = v, r.argmax_x = g.x(i), r.argmax_y = g.y(j);
      if (v < r.min) r.min = v, r.argmin_x = g.x(i), r.argmin_y = g.y(j);
      if (g.on_boundary(i, j)) {
        r.boundary_max = std::max(r.boundary_max, v);
        r.boundary_min = std::min(r.boundary_min, v);
      }
    }
  }
  const double range = r.boundary_max - r.boundary_min;
  const double excess = std::max(r.max - r.boundary_max, r.boundary_min - r.min);
  r.overshoot = range > 0.0 ? excess / range : 0.0;
  return r;
}

Synthesis synthesize(const ExperimentSpec& spec, const SolverConfig& cfg) {
  spec.validate();
  const Grid2D grid = spec.grid();
  CoefficientTriple truth = spec.example == 0
                                ? CoefficientTriple{load_field(spec.p_file, grid), Field2D(grid),
                                                    Field2D(grid)}
                                : truth_field(spec.example, grid, spec.background_p);
  if (spec.example == 0) {
    if (!spec.q_file.empty()) truth.q = load_field(spec.q_file, grid);
    if (!spec.f_file.empty()) truth.f = load_field(spec.f_file, grid);
  }
  truth.validate();

  Synthesis out{.spec = spec,
                .instance = ProblemInstance{grid, {}, boundary_restrict(truth.p), std::nullopt}};

  if (spec.example == 1 && spec.background_p != 0.0)
    out.notes.push_back("example 1 uses background p = " + format_double(spec.background_p) +
                        " outside the inclusion; the literal value 0 makes the forward problem singular");
  if (spec.example == 3)
    out.notes.push_back("example 3 read as sign quadrants; nodes on the axes take the non-negative case");
  if (spec.example == 4)
    out.notes.push_back("example 4 bands resolved by the first matching case");

  const Field2D phi = default_boundary(grid);
  ProblemInstance& inst = out.instance;

  for (std::size_t n = 0; n < spec.lambdas.size(); ++n) {
    const double lambda = spec.lambdas[n];
    SolveReport rep = [&] {
      try {
        return solve_dirichlet_report(truth.p, truth.q, lambda, truth.f, phi, cfg);
      } catch (const NonConvergence& e) {
        if (e.lambda()) throw;
        throw e.with_lambda(lambda);
      }
    }();
    out.solver_residuals.push_back(rep.relative_residual);
    NoisyField noisy = add_uniform_noise(rep.solution, spec.noise_rel_l1, spec.seed + n);
    out.realized_noise.push_back(noisy.realized);
    Field2D measured = apply_smoothing(noisy.field, spec.smoothing);
    out.clean.push_back(std::move(rep.solution));
    out.noisy.push_back(std::move(noisy.field));
    inst.data.push_back({lambda, std::move(measured)});
  }
  inst.truth = std::move(truth);
  inst.validate();
  return out;
}

}  // namespace coefid
