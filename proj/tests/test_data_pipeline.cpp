#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "coefid/data_pipeline.hpp"
#include "support.hpp"

using namespace coefid;
using namespace coefid::test;

namespace {

double at(const Field2D& f, double x, double y) {
  const Grid2D& g = f.grid();
  const int i = static_cast<int>(std::lround((x - g.x0()) / g.hx()));
  const int j = static_cast<int>(std::lround((y - g.y0()) / g.hy()));
  return f(i, j);
}

Field2D monomial(const Grid2D& g, int a, int b) {
  return Field2D::from_function(g, [a, b](double x, double y) {
    return std::pow(x, a) * std::pow(y, b);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Ground truth

TEST(TruthField, PointValues) {
  const Grid2D g = Grid2D::square(41);  // spacing 0.05, so the probes are nodes
  EXPECT_DOUBLE_EQ(at(truth_field(2, g).p, 0.0, 0.0), 2.0);
  EXPECT_NEAR(at(truth_field(2, g).p, 0.5, 0.5), 1.0 + std::sin(0.5) + std::cos(0.5), 1e-15);
  EXPECT_EQ(at(truth_field(1, g).p, 0.0, 0.0), 2.0);
  EXPECT_EQ(at(truth_field(1, g).p, 0.9, 0.9), 1.0);
  EXPECT_EQ(at(truth_field(1, g, 0.0).p, 0.9, 0.9), 0.0);
  const Field2D p3 = truth_field(3, g).p;
  EXPECT_EQ(at(p3, -0.5, -0.5), -2.0);
  EXPECT_EQ(at(p3, 0.5, -0.5), 0.5);
  EXPECT_EQ(at(p3, -0.5, 0.5), 0.5);
  EXPECT_EQ(at(p3, 0.5, 0.5), 2.0);
  const Field2D p4 = truth_field(4, g).p;
  EXPECT_EQ(at(p4, 0.0, 0.0), -2.0);
  EXPECT_EQ(at(p4, 0.5, 0.5), -2.0);  // first matching band wins
  EXPECT_EQ(at(p4, 0.9, 0.0), 1.0);
}

TEST(TruthField, QAndFVanish) {
  const Grid2D g = Grid2D::square(9);
  for (int e = 1; e <= 4; ++e) {
    const CoefficientTriple t = truth_field(e, g);
    EXPECT_EQ(t.q.max_abs(), 0.0);
    EXPECT_EQ(t.f.max_abs(), 0.0);
  }
  EXPECT_THROW(truth_field(5, g), UnknownExample);
  EXPECT_THROW(canned_spec(7), UnknownExample);
}

TEST(TruthField, DefaultBoundary) {
  const Grid2D g = Grid2D::square(5);
  EXPECT_EQ(at(default_boundary(g), -1.0, 1.0), 4.0);
  EXPECT_EQ(at(default_boundary(g), 1.0, 1.0), 6.0);
}

// ---------------------------------------------------------------------------
// Noise

TEST(Noise, ZeroTargetIsIdentity) {
  const Field2D u = default_boundary(Grid2D::square(9));
  const NoisyField n = add_uniform_noise(u, 0.0, 1);
  EXPECT_EQ(n.field, u);
  EXPECT_EQ(n.realized, 0.0);
}

TEST(Noise, HitsExampleLevels) {
  const Grid2D g = Grid2D::square(49);
  const Field2D u = default_boundary(g) + sinsin(g);
  const NoisyField a = add_uniform_noise(u, 0.07, 42);
  EXPECT_GE(a.realized, 0.0693);
  EXPECT_LE(a.realized, 0.0707);
  EXPECT_NEAR(rel_L1_error(a.field, u), a.realized, 1e-12);
  const NoisyField b = add_uniform_noise(u, 0.0074, 42);
  EXPECT_NEAR(b.realized, 0.0074, 0.01 * 0.0074);
}

TEST(Noise, CalibratedForAnyTargetAndSeed) {
  const Grid2D g = Grid2D::square(17);
  const Field2D u = default_boundary(g);
  for (double target : {1e-4, 1e-3, 0.02, 0.1, 0.2})
    for (std::uint64_t seed = 0; seed < 20; ++seed)
      EXPECT_NEAR(add_uniform_noise(u, target, seed).realized, target, 0.01 * target);
}

TEST(Noise, UniformWithinAmplitude) {
  const Grid2D g = Grid2D::square(65);
  const Field2D u(g, 3.0);
  const NoisyField n = add_uniform_noise(u, 0.05, 9);
  // For uniform noise on [-a, a], E|e| = a/2, so a is close to 2 * 0.05 * 3.
  EXPECT_NEAR(n.amplitude, 0.3, 0.01);
  const Field2D e = n.field - u;
  EXPECT_NEAR(integrate(e) / 4.0, 0.0, 0.01);
}

TEST(Noise, Deterministic) {
  const Field2D u = default_boundary(Grid2D::square(9));
  EXPECT_EQ(add_uniform_noise(u, 0.01, 5).field, add_uniform_noise(u, 0.01, 5).field);
  EXPECT_NE(add_uniform_noise(u, 0.01, 5).field, add_uniform_noise(u, 0.01, 6).field);
}

TEST(Noise, RejectsBadInput) {
  const Grid2D g = Grid2D::square(5);
  EXPECT_THROW(add_uniform_noise(Field2D(g, 1.0), -0.1, 1), ValidationError);
  EXPECT_THROW(add_uniform_noise(Field2D(g), 0.1, 1), ZeroDenominator);
}

// ---------------------------------------------------------------------------
// Degree-5 fit

TEST(Poly5, ReproducesPolynomials) {
  const Grid2D g(0.0, 3.0, -1.0, 2.0, 21, 17);
  const Field2D u = Field2D::from_function(g, [](double x, double y) {
    return 1.0 - 2.0 * x + x * x * y - 0.1 * std::pow(x, 3) * std::pow(y, 2) + 0.05 * std::pow(y, 5);
  });
  EXPECT_LT(max_diff(smooth_poly5(u), u), 1e-8 * u.max_abs());
}

TEST(Poly5, ResidualOrthogonalToMonomials) {
  const Grid2D g = Grid2D::square(25);
  const Field2D u = random_field(g, 3);
  const Field2D r = u - smooth_poly5(u);
  for (int d = 0; d <= 5; ++d)
    for (int b = 0; b <= d; ++b) {
      const Field2D m = monomial(g, d - b, b);
      EXPECT_LT(std::abs(inner(r, m)), 1e-8 * std::sqrt(inner(u, u) * inner(m, m)));
    }
}

TEST(Poly5, IsAProjection) {
  const Grid2D g = Grid2D::square(19);
  const Field2D once = smooth_poly5(random_field(g, 4));
  EXPECT_LT(max_diff(smooth_poly5(once), once), 1e-10);
}

TEST(Poly5, ConstantPlusNoise) {
  const Grid2D g = Grid2D::square(33);
  const Field2D c(g, 5.0);
  const double n = static_cast<double>(g.size());
  double mean_err = 0.0;
  const int trials = 20;
  for (int s = 0; s < trials; ++s) {
    const NoisyField noisy = add_uniform_noise(c, 0.01, s);
    const Field2D fit = smooth_poly5(noisy.field);
    mean_err += std::abs(integrate(fit) / 4.0 - 5.0) / trials;
    // 21 fitted parameters carry about 21/N of the noise variance a^2/3.
    const double rms = std::sqrt(integrate(hadamard(fit - c, fit - c)) / 4.0);
    EXPECT_LT(rms, noisy.amplitude * std::sqrt(21.0 / n));
  }
  EXPECT_LT(mean_err, 0.05 / std::sqrt(n) * 2.0);
}

TEST(Poly5, TooFewNodesIsIllConditioned) {
  EXPECT_THROW(smooth_poly5(random_field(Grid2D::square(5), 1)), IllConditioned);
  EXPECT_THROW(smooth_poly5(random_field(Grid2D(0, 1, 0, 1, 30, 3), 1)), IllConditioned);
  EXPECT_NO_THROW(smooth_poly5(random_field(Grid2D::square(7), 1)));
}

// ---------------------------------------------------------------------------
// Cubic spline surface

TEST(Cubic, InterpolatesNodes) {
  const Grid2D g(0.0, 1.0, 0.0, 2.0, 11, 15);
  const Field2D u = random_field(g, 6);
  const CubicSurface s = smooth_cubic(u);
  EXPECT_EQ(s.mu(), 0.0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) EXPECT_NEAR(s.evaluate(g.x(i), g.y(j)), u(i, j), 1e-13);
  EXPECT_LT(max_diff(s.node_values(), u), 1e-13);
}

TEST(Cubic, AffineDerivativesAreExact) {
  const Grid2D g = Grid2D::square(13);
  const Field2D u = Field2D::from_function(g, [](double x, double y) { return 3.0 * x - 2.0 * y + 1.0; });
  const CubicSurface s = smooth_cubic(u);
  EXPECT_LT(max_diff(s.dx(), Field2D(g, 3.0)), 1e-12);
  EXPECT_LT(max_diff(s.dy(), Field2D(g, -2.0)), 1e-12);
  EXPECT_NEAR(s.evaluate(0.123, -0.77), 3.0 * 0.123 + 2.0 * 0.77 + 1.0, 1e-12);
}

TEST(Cubic, DerivativesConvergeSecondOrder) {
  double prev = 0.0;
  for (int n : {17, 33, 65}) {
    const Grid2D g = Grid2D::square(n);
    const CubicSurface s = smooth_cubic(sinsin(g));
    const Field2D exact = Field2D::from_function(g, [](double x, double y) {
      return kPi * std::cos(kPi * x) * std::sin(kPi * y);
    });
    const double err = max_diff(s.dx(), exact);
    if (prev > 0.0) {
      EXPECT_GT(std::log2(prev / err), 1.9);
    }
    prev = err;
  }
}

TEST(Cubic, GcvSmoothsNoise) {
  const Grid2D g = Grid2D::square(33);
  const Field2D clean = default_boundary(g) + sinsin(g);
  const NoisyField noisy = add_uniform_noise(clean, 0.01, 3);
  const CubicSurface s = smooth_cubic_gcv(noisy.field);
  EXPECT_GT(s.mu(), 0.0);
  EXPECT_LT(rel_L1_error(s.node_values(), clean), 0.5 * noisy.realized);
  // Smoothing must not distort noise-free smooth data much.
  EXPECT_LT(rel_L1_error(smooth_cubic_gcv(clean).node_values(), clean), 1e-3);
}

TEST(Cubic, ApplySmoothingDispatch) {
  const Grid2D g = Grid2D::square(9);
  const Field2D u = random_field(g, 8);
  EXPECT_EQ(apply_smoothing(u, Smoothing::None), u);
  EXPECT_LT(max_diff(apply_smoothing(u, Smoothing::CubicInterp), u), 1e-13);
  EXPECT_LT(max_diff(apply_smoothing(u, Smoothing::Poly5), smooth_poly5(u)), 0.0 + 1e-15);
  for (Smoothing s : {Smoothing::None, Smoothing::Poly5, Smoothing::Cubic, Smoothing::CubicInterp})
    EXPECT_EQ(smoothing_from_string(to_string(s)), s);
  EXPECT_THROW(smoothing_from_string("spline"), ValidationError);
}

// ---------------------------------------------------------------------------
// Error metric

TEST(RelL1, TrivialCases) {
  const Field2D t = default_boundary(Grid2D::square(9));
  EXPECT_EQ(rel_L1_error(t, t), 0.0);
  EXPECT_DOUBLE_EQ(rel_L1_error(2.0 * t, t), 1.0);
  EXPECT_THROW(rel_L1_error(t, Field2D(t.grid())), ZeroDenominator);
}

TEST(RelL1, HalfDomainPerturbation) {
  const Grid2D g = Grid2D::square(11);
  const Field2D t(g, 2.0);
  Field2D a = t;
  double weight = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (g.x(i) < 0.0) {
        a(i, j) += 0.1;
        weight += g.weight(i, j);
      }
  EXPECT_NEAR(rel_L1_error(a, t), 0.1 * weight / (2.0 * 4.0), 1e-15);
}

// ---------------------------------------------------------------------------
// Specs

TEST(Spec, CannedSetups) {
  EXPECT_EQ(canned_spec(1).noise_rel_l1, 0.07);
  EXPECT_EQ(canned_spec(1).smoothing, Smoothing::Poly5);
  EXPECT_EQ(canned_spec(1).background_p, 1.0);
  EXPECT_EQ(canned_spec(2).noise_rel_l1, 0.0074);
  EXPECT_EQ(canned_spec(2).smoothing, Smoothing::Cubic);
  for (int e : {3, 4}) {
    EXPECT_EQ(canned_spec(e).noise_rel_l1, 0.0);
    EXPECT_EQ(canned_spec(e).lambdas, std::vector<double>{0.0});
    EXPECT_EQ(canned_spec(e).nx, 49);
  }
}

TEST(Spec, ParsesDocument) {
  const ExperimentSpec s = spec_from_json(
      R"({"example":1,"nx":33,"ny":25,"lambda":[0,1.5],"noise_rel_l1":0.01,
          "smoothing":"cubic","seed":7,"background_p":0.5,"max_iters":10,"functional":"G_lambda"})");
  EXPECT_EQ(s.example, 1);
  EXPECT_EQ(s.nx, 33);
  EXPECT_EQ(s.ny, 25);
  EXPECT_EQ(s.lambdas, (std::vector<double>{0.0, 1.5}));
  EXPECT_EQ(s.smoothing, Smoothing::Cubic);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.background_p, 0.5);
  EXPECT_EQ(s.functional, Functional::GLambda);
  EXPECT_EQ(spec_from_json(R"({"example":3,"lambda":2})").lambdas, std::vector<double>{2.0});
}

TEST(Spec, MissingFieldsTakeExampleDefaults) {
  const ExperimentSpec s = spec_from_json(R"({"example":1})");
  EXPECT_EQ(s.noise_rel_l1, 0.07);
  EXPECT_EQ(s.smoothing, Smoothing::Poly5);
  EXPECT_EQ(s.nx, 49);
}

TEST(Spec, RoundTrip) {
  ExperimentSpec s = canned_spec(2);
  s.lambdas = {0.0, 1.0, 3.0};
  s.seed = 99;
  const ExperimentSpec back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(back.example, s.example);
  EXPECT_EQ(back.lambdas, s.lambdas);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.noise_rel_l1, s.noise_rel_l1);
  EXPECT_EQ(back.smoothing, s.smoothing);
}

TEST(Spec, ErrorsNameTheField) {
  auto message = [](const std::string& text) {
    try {
      spec_from_json(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"nosie":0.1})").find("nosie"), std::string::npos);
  EXPECT_NE(message(R"({"nx":"big"})").find("nx"), std::string::npos);
  EXPECT_NE(message(R"({"lambda":[]})").find("lambda"), std::string::npos);
  EXPECT_NE(message(R"({"noise_rel_l1":-1})").find("noise_rel_l1"), std::string::npos);
  EXPECT_NE(message(R"({"example":"custom"})").find("p_file"), std::string::npos);
  EXPECT_FALSE(message("[1,2]").empty());
  EXPECT_FALSE(message("{").empty());
  EXPECT_THROW(spec_from_json(R"({"nx":2})"), ValidationError);
  EXPECT_THROW(spec_from_json(R"({"example":9})"), UnknownExample);
}

// ---------------------------------------------------------------------------
// Synthesis

TEST(Synthesize, NoiseFreeDataIsConsistent) {
  ExperimentSpec s = canned_spec(2);
  s.nx = s.ny = 25;
  s.noise_rel_l1 = 0.0;
  s.smoothing = Smoothing::None;
  s.lambdas = {0.0, 1.0};
  const Synthesis d = synthesize(s);
  ASSERT_EQ(d.instance.data.size(), 2u);
  for (const auto& m : d.instance.data) {
    const Field2D t = apply_T(*d.instance.truth, m.u, m.lambda);
    EXPECT_LT(t.max_abs(), 1e-6);
  }
  EXPECT_EQ(d.instance.p_boundary.values, boundary_restrict(d.instance.truth->p).values);
  EXPECT_EQ(d.clean[0], d.instance.data[0].u);
  for (double r : d.solver_residuals) EXPECT_LE(r, 1e-10);
}

TEST(Synthesize, NoisyExampleTwo) {
  ExperimentSpec s = canned_spec(2);
  s.nx = s.ny = 25;
  const Synthesis d = synthesize(s);
  EXPECT_NEAR(d.realized_noise[0], 0.0074, 0.01 * 0.0074);
  EXPECT_NEAR(rel_L1_error(d.noisy[0], d.clean[0]), d.realized_noise[0], 1e-12);
  // The smoothed data sits closer to the clean solution than the raw samples.
  EXPECT_LT(rel_L1_error(d.instance.data[0].u, d.clean[0]), d.realized_noise[0]);
  const Synthesis again = synthesize(s);
  EXPECT_EQ(again.instance.data[0].u, d.instance.data[0].u);
}

TEST(Synthesize, ExampleOneBackgroundZeroIsSingular) {
  ExperimentSpec s = canned_spec(1);
  s.nx = s.ny = 25;
  s.background_p = 0.0;
  EXPECT_THROW(synthesize(s), NonConvergence);
  s.background_p = 1.0;
  const Synthesis d = synthesize(s);
  bool noted = false;
  for (const auto& n : d.notes) noted = noted || n.find("background") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST(Synthesize, ExampleFourSingleLambda) {
  ExperimentSpec s = canned_spec(4);
  s.nx = s.ny = 17;
  const Synthesis d = synthesize(s);
  EXPECT_EQ(d.instance.lambdas(), std::vector<double>{0.0});
  EXPECT_FALSE(d.notes.empty());
}

TEST(Synthesize, SpikeReportLocatesExtremes) {
  const Grid2D g = Grid2D::square(21);
  Field2D u = default_boundary(g);
  u(5, 15) = 20.0;
  u(14, 4) = -10.0;
  const SpikeReport r = spike_report(u);
  EXPECT_EQ(r.max, 20.0);
  EXPECT_DOUBLE_EQ(r.argmax_x, g.x(5));
  EXPECT_DOUBLE_EQ(r.argmax_y, g.y(15));
  EXPECT_EQ(r.min, -10.0);
  EXPECT_EQ(r.boundary_min, 2.0);
  EXPECT_EQ(r.boundary_max, 6.0);
  EXPECT_DOUBLE_EQ(r.overshoot, 3.5);
}

TEST(Synthesize, CustomFieldsFromFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "coefid_custom_test";
  std::filesystem::create_directories(dir);
  ExperimentSpec s;
  s.example = 0;
  s.nx = s.ny = 13;
  const Field2D p = truth_field(2, s.grid()).p;
  std::ofstream(dir / "p.csv") << to_csv(p);
  s.p_file = (dir / "p.csv").string();
  const Synthesis d = synthesize(s);
  EXPECT_LT(max_diff(d.instance.truth->p, p), 1e-12);
  s.p_file = (dir / "missing.csv").string();
  EXPECT_THROW(synthesize(s), ValidationError);
  std::filesystem::remove_all(dir);
}
