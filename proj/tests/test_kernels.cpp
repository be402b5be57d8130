#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hypo/kernels.hpp"
#include "hypo/lifting.hpp"

using namespace hypo;

namespace {

FieldSystem corpus(const std::string& name) { return load_field_system(std::string(HYPO_CORPUS_DIR) + "/" + name); }

const FundamentalSolution& K0() {
  static const FundamentalSolution k = FundamentalSolution::build();
  return k;
}

LiftedSystem grushin_lift() {
  auto g = corpus("grushin");
  return lift(g.fields, 2, {0, 0});
}

template <class V>
using Scalar = std::decay_t<decltype(std::declval<V>()[0])>;

double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

ParametrixConfig heisenberg_config() {
  ParametrixConfig cfg;
  cfg.psi = BoxBump::polynomial_box({0, 0, 0}, {0.3, 0.3, 0.3}, {0.6, 0.6, 0.6}, 5);
  cfg.psi_prime = BoxBump::polynomial_box({0, 0, 0}, {0.7, 0.7, 0.7}, {1.2, 1.2, 1.2}, 5);
  return cfg;
}

// Coarse quadrature for tests that compare norms rather than values.
ParametrixConfig coarse_config(double panel_phase) {
  ParametrixConfig cfg = heisenberg_config();
  cfg.panel_phase = panel_phase;
  cfg.n = 4;
  cfg.core_rule = {2, 2, 4, true, 0};
  return cfg;
}

ParametrixConfig grushin_config() {
  ParametrixConfig cfg = heisenberg_config();
  cfg.panel_phase = 6;
  cfg.n = 8;
  cfg.core_rule = {2, 2, 6, true, 0};
  return cfg;
}

ParametrixConfig line_config() {
  ParametrixConfig cfg;
  cfg.psi = BoxBump::polynomial_box({0}, {2}, {3}, 5);
  cfg.psi_prime = BoxBump::polynomial_box({0}, {3.5}, {5}, 5);
  cfg.panel_phase = 1;
  cfg.n = 16;
  cfg.core_rule = {4, 1, 16, true, 0};
  return cfg;
}

// Left-invariant fields of the Heisenberg group in exponential coordinates with [Y1, Y2] = Y3.
template <class S>
std::array<std::array<S, 3>, 2> heisenberg_fields(const std::vector<S>& z) {
  return {{{S(1.0), S(0.0), z[1] * -0.5}, {S(0.0), S(1.0), z[0] * 0.5}}};
}

// Linear combination of polynomial bumps.
struct BumpSum {
  std::vector<BoxBump> bumps;
  std::vector<double> coef;
  template <class V>
  auto operator()(const V& x) const {
    Scalar<V> s(0.0);
    for (std::size_t k = 0; k < bumps.size(); ++k) s += bumps[k](x) * coef[k];
    return s;
  }
};

}  // namespace

TEST(FundamentalSolution, BracketScaleAndSign) {
  EXPECT_EQ(K0().a_exact(), Rational(16));
  EXPECT_LT(K0().c(), 0);
  RecordProperty("c", std::to_string(K0().c()));
}

TEST(FundamentalSolution, Homogeneity) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-2, 2), T(0.2, 3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> z{U(rng), U(rng), U(rng)};
    const double t = T(rng);
    std::vector<double> zt{t * z[0], t * z[1], t * t * z[2]};
    EXPECT_NEAR(K0()(zt), K0()(z) / (t * t), 1e-12 * std::abs(K0()(z)) / (t * t));
  }
  EXPECT_EQ(K0().kernel().degree, -2);
  EXPECT_EQ(K0().kernel().homogeneous_dimension(), 4);
}

TEST(FundamentalSolution, AnnihilatedAwayFromOrigin) {
  std::mt19937 rng(2);
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> R(0.5, 2);
  using J = Jet<3, 2>;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z{N(rng), N(rng), N(rng)};
    const double gauge = std::pow(std::pow(z[0] * z[0] + z[1] * z[1], 2) + 16 * z[2] * z[2], 0.25);
    const double s = R(rng) / gauge;
    z = {s * z[0], s * z[1], s * s * z[2]};
    auto [res, scale] = K0().l0_residual(z);
    EXPECT_LE(res, 1e-8 * scale);
    // Same check with the fields written out by hand.
    std::vector<J> zj(3);
    for (int k = 0; k < 3; ++k) zj[k] = J::variable(k, z[k]);
    J K = K0()(zj);
    auto Y = heisenberg_fields(zj);
    double L = 0;
    for (int j = 0; j < 2; ++j) {
      J first;
      for (int r = 0; r < 3; ++r) first += Y[j][r] * K.derivative(r);
      for (int r = 0; r < 3; ++r) L += Y[j][r].value() * first.derivative(r).value();
    }
    EXPECT_LE(std::abs(L), 1e-8 * scale);
  }
}

TEST(FundamentalSolution, FluxIndependentOfRadius) {
  std::vector<double> f;
  for (double r : {0.5, 1.0, 2.0}) f.push_back(K0().flux(r));
  for (double v : f) EXPECT_NEAR(v, 1.0, 1e-6);
  EXPECT_NEAR(f[0], f[2], 1e-6);
}

TEST(FundamentalSolution, BoxFluxOracle) {
  // Σ_j Y_j² = div(Σ_j (Y_j K) Y_j) since the Y_j are divergence free, so the flux of the
  // horizontal gradient through any box around 0 equals ⟨L0 K0, 1⟩ = 1.
  const double a = 16, c = K0().c();
  auto flux_density = [&](std::vector<double> z, int axis) {
    const double r2 = z[0] * z[0] + z[1] * z[1];
    const double N = r2 * r2 + a * z[2] * z[2];
    const double dN[3] = {4 * r2 * z[0], 4 * r2 * z[1], 2 * a * z[2]};
    auto Y = heisenberg_fields(z);
    double s = 0;
    for (int j = 0; j < 2; ++j) {
      double yn = 0;
      for (int r = 0; r < 3; ++r) yn += Y[j][r] * dN[r];
      s += -0.5 * c * std::pow(N, -1.5) * yn * Y[j][axis];
    }
    return s;
  };
  for (double h : {0.5, 1.0, 2.0}) {
    const double hz = h * h;
    const double half[3] = {h, h, hz};
    double total = 0;
    for (int axis = 0; axis < 3; ++axis)
      for (int sign : {-1, 1}) {
        const int i = (axis + 1) % 3, k = (axis + 2) % 3;
        total += sign * gk(
                            [&](double p) {
                              return gk(
                                  [&](double q) {
                                    std::vector<double> z(3);
                                    z[axis] = sign * half[axis];
                                    z[i] = p;
                                    z[k] = q;
                                    return flux_density(z, axis);
                                  },
                                  -half[k], half[k], 1e-11);
                            },
                            -half[i], half[i], 1e-11);
      }
    EXPECT_NEAR(total, 1.0, 1e-6) << "half width " << h;
  }
}

TEST(FundamentalSolution, JsonRecord) {
  auto j = K0().to_json();
  EXPECT_EQ(j["a"], "16");
  EXPECT_EQ(j["Q"], 4);
  EXPECT_EQ(j["degree"], -2);
}

TEST(ShellIntegral, OddKernelCancels) {
  GroupKernel odd{"odd", {1, 1, 2}, -4, [](const std::vector<double>& z) {
                    const double r2 = z[0] * z[0] + z[1] * z[1];
                    return z[0] * std::pow(r2 * r2 + z[2] * z[2], -1.25);
                  }};
  GroupKernel even{"even", {1, 1, 2}, -4, [](const std::vector<double>& z) {
                     const double r2 = z[0] * z[0] + z[1] * z[1];
                     return 1 / (r2 * r2 + z[2] * z[2]);
                   }};
  EXPECT_NEAR(shell_integral(odd, 0.5, 2), 0.0, 1e-12);
  // A positive kernel of degree −Q has shell mass proportional to log(b/a).
  const double s1 = shell_integral(even, 0.5, 1), s2 = shell_integral(even, 1, 2);
  EXPECT_GT(s1, 0);
  EXPECT_NEAR(s1, s2, 1e-8 * s1);
}

TEST(Parametrix, HeisenbergKernelIsGroupDifference) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  auto cfg = heisenberg_config();
  Parametrix<3> P(chart, K0().kernel(), cfg);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-0.6, 0.6);
  const double c = K0().c();
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{U(rng), U(rng), U(rng)}, x1{U(rng), U(rng), U(rng)};
    // Coordinates (x, y, t); exp(u)(x1) = x.
    const double u1 = x[0] - x1[0], u2 = x[2] - x1[2];
    const double u3 = x[1] - x1[1] - u2 * x1[0] - u1 * u2 / 2;
    const double direct = cfg.psi(x) * c / std::sqrt(std::pow(u1 * u1 + u2 * u2, 2) + 16 * u3 * u3) * cfg.psi_prime(x1);
    EXPECT_NEAR(P.kernel(x, x1), direct, 1e-9 * std::max(1.0, std::abs(direct)));
  }
}

TEST(Parametrix, ZeroCutoffGivesZeroOperator) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  auto cfg = heisenberg_config();
  cfg.psi = BoxBump::zero_bump(3);
  Parametrix<3> P(chart, K0().kernel(), cfg);
  auto one = [](const auto& x) { return Scalar<decltype(x)>(1.0); };
  EXPECT_EQ(P.apply(one, {0, 0, 0}), 0.0);
  EXPECT_EQ(P.kernel({0.1, 0, 0}, {0, 0.1, 0}), 0.0);
  auto s = P.residual(one, {0.1, 0.1, 0.1});
  EXPECT_EQ(s.residual, 0.0);
}

TEST(Parametrix, RejectsCutoffThatIsNotOneOnSupport) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  auto cfg = heisenberg_config();
  cfg.psi_prime = BoxBump::polynomial_box({0, 0, 0}, {0.4, 0.4, 0.4}, {1.2, 1.2, 1.2}, 5);
  EXPECT_THROW(Parametrix<3>(chart, K0().kernel(), cfg), PreconditionError);
}

TEST(Parametrix, KernelBoundNearDiagonal) {
  auto sys = grushin_lift();
  ThetaChart chart(sys.lifted, 2, {}, {0, 0, 0});
  Parametrix<3> P(chart, K0().kernel(), grushin_config());
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(-0.3, 0.3), D(-1, 1);
  // |K̃| ρ^{Q−2} on 10³ pairs at three distance scales.
  std::vector<double> worst;
  for (double scale : {1e-1, 1e-2, 1e-3}) {
    double m = 0;
    for (int i = 0; i < 334; ++i) {
      std::vector<double> x{U(rng), U(rng), U(rng)};
      std::vector<double> x1{x[0] + scale * D(rng), x[1] + scale * scale * D(rng), x[2] + scale * D(rng)};
      const double rho = chart.rho(x1, x);
      m = std::max(m, std::abs(P.kernel(x, x1)) * rho * rho);
    }
    ASSERT_TRUE(std::isfinite(m));
    worst.push_back(m);
  }
  EXPECT_LE(worst[1], 1.5 * worst[0]);
  EXPECT_LE(worst[2], 1.5 * worst[0]);
}

TEST(Parametrix, ConstantInputStableUnderRefinement) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  auto one = [](const auto& x) { return Scalar<decltype(x)>(1.0); };
  auto coarse = heisenberg_config();
  coarse.n = 10;
  coarse.core_rule = {3, 2, 10, true, 0};
  auto fine = coarse;
  fine.panel_phase = 3;
  fine.n = 12;
  fine.core_rule = {4, 2, 12, true, 0};
  const double a = Parametrix<3>(chart, K0().kernel(), coarse).apply(one, {0, 0, 0});
  const double b = Parametrix<3>(chart, K0().kernel(), fine).apply(one, {0, 0, 0});
  EXPECT_NE(a, 0.0);
  EXPECT_NEAR(a, b, 1e-5 * std::abs(b));
}

TEST(Parametrix, Linearity) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  Parametrix<3> P(chart, K0().kernel(), heisenberg_config());
  auto f = [](const auto& x) { return x[0] * x[1] + 1.0; };
  auto g = [](const auto& x) {
    using std::cos;
    return cos(x[2] * 3.0);
  };
  auto fg = [&](const auto& x) { return f(x) * 2.0 + g(x) * -0.5; };
  for (std::vector<double> x : {std::vector<double>{0, 0, 0}, {0.2, -0.1, 0.3}}) {
    const double lhs = P.apply(fg, x);
    const double rhs = 2 * P.apply(f, x) - 0.5 * P.apply(g, x);
    EXPECT_NEAR(lhs, rhs, 1e-6 * std::abs(rhs));
  }
}

TEST(Parametrix, ZeroInputZeroResidual) {
  auto sys = grushin_lift();
  ThetaChart chart(sys.lifted, 2, {}, {0, 0, 0});
  Parametrix<3> P(chart, K0().kernel(), grushin_config());
  auto zero = [](const auto& x) { return Scalar<decltype(x)>(0.0); };
  EXPECT_EQ(P.apply(zero, {0.1, 0, 0}), 0.0);
  auto s = P.residual(zero, {0.1, 0.2, -0.1});
  EXPECT_EQ(s.residual, 0.0);
  for (double v : s.field_residual) EXPECT_EQ(v, 0.0);
}

TEST(Parametrix, OneDimensionalEngineMatchesLineParametrix) {
  auto line = corpus("line");
  ThetaChart chart(line.fields, 1, {}, {0});
  auto cfg = line_config();
  Parametrix<1> P(chart, line_green_kernel(), cfg);
  LineParametrix L(cfg.psi.factors[0], cfg.psi_prime.factors[0], 48, 16);
  for (double w : {2.0, 8.0}) {
    auto f = OscillatoryTest::moment_free(BoxBump::polynomial({0}, 2, 8), w);
    auto f1 = [&](double s) { return f(std::vector<double>{s}); };
    double scale = 0;
    for (double x = -2.9; x <= 2.9; x += 0.29) scale = std::max(scale, std::abs(L.apply(f1, x)));
    for (double x = -2.9; x <= 2.9; x += 0.29) {
      auto s = P.residual(f, {x});
      EXPECT_NEAR(s.parametrix_value, L.apply(f1, x), 1e-6 * scale) << "ω " << w << " x " << x;
      EXPECT_NEAR(s.residual, L.residual(f1, x), 1e-6 * scale) << "ω " << w << " x " << x;
    }
  }
}

TEST(ResidualCheck, AbelianFlatness) {
  auto line = corpus("line");
  ThetaChart chart(line.fields, 1, {}, {0});
  Parametrix<1> P(chart, line_green_kernel(), line_config());
  ResidualCheckConfig rc;
  rc.residual_grid = {64};
  rc.flat_tol = 1e-6;
  auto rep = residual_smoothing_check<1>(
      P, [](double w) { return OscillatoryTest::moment_free(BoxBump::polynomial({0}, 2, 8), w); }, rc, "line");
  EXPECT_TRUE(rep.pass) << rep.to_json().dump();
  for (double r : rep.ratios) EXPECT_LE(r, 1e-6);
  auto j = rep.to_json();
  EXPECT_EQ(j["system_id"], "line");
  EXPECT_EQ(j["frequencies"].size(), 4u);
}

TEST(ResidualCheck, ZeroInput) {
  auto line = corpus("line");
  ThetaChart chart(line.fields, 1, {}, {0});
  Parametrix<1> P(chart, line_green_kernel(), line_config());
  ResidualCheckConfig rc;
  rc.residual_grid = {16};
  rc.flat_tol = 0;
  auto rep = residual_smoothing_check<1>(
      P, [](double w) { return OscillatoryTest{BoxBump::zero_bump(1), w, 0}; }, rc, "line");
  for (double r : rep.ratios) EXPECT_EQ(r, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(ResidualCheck, LiftedGrushinLowFrequencies) {
  auto sys = grushin_lift();
  ThetaChart chart(sys.lifted, 2, {}, {0, 0, 0});
  Parametrix<3> P(chart, K0().kernel(), grushin_config());
  ResidualCheckConfig rc;
  rc.frequencies = {2, 4};
  rc.residual_grid = {3, 3, 3};
  auto rep = residual_smoothing_check<3>(
      P,
      [](double w) {
        return OscillatoryTest{BoxBump::polynomial_box({0, 0, 0}, {3, 9, 3}, {4.5, 13.5, 4.5}, 5), w, 0};
      },
      rc, "grushin-lift");
  EXPECT_TRUE(rep.pass) << rep.to_json().dump();
  EXPECT_GE(rep.gradient_growth[0], 1.8);
  EXPECT_LE(rep.residual_growth[0], 1.2);
}

TEST(ImprovedParametrix, ResidualOrderIncreases) {
  std::vector<LineParametrix> levels{{Plateau{0, 1, 2, 0, 5}, Plateau{0, 2.5, 3.5, 0, 5}},
                                     {Plateau{0, 2, 3, 0, 5}, Plateau{0, 3.5, 4.5, 0, 5}}};
  auto sup = [&](std::size_t nl, double w) {
    std::vector<LineParametrix> sub(levels.begin(), levels.begin() + nl);
    double m = 0;
    for (int i = 0; i <= 16; ++i) {
      const double x = -3.2 + 6.4 * i / 16;
      m = std::max(m, std::abs(improved_line_residual(sub, [w](double s) { return std::cos(w * s); }, x)));
    }
    return m;
  };
  std::vector<double> r1, r2;
  for (double w : {16.0, 32.0, 64.0}) {
    r1.push_back(sup(1, w));
    r2.push_back(sup(2, w));
  }
  for (int k = 0; k < 2; ++k) {
    const double s1 = std::log2(r1[k + 1] / r1[k]), s2 = std::log2(r2[k + 1] / r2[k]);
    EXPECT_LE(s2, s1 - 1) << "octave " << k;
  }
  std::vector<LineParametrix> bad{levels[1], levels[0]};
  EXPECT_THROW(improved_line_residual(bad, [](double) { return 1.0; }, 0), PreconditionError);
}

TEST(Restriction, LeftInverseOfExtension) {
  auto R = Restriction::normalized(BoxBump::polynomial({0.1}, 0.5, 4));
  auto f = [](const std::vector<double>& x) { return std::sin(x[0]) + x[1] * x[1]; };
  auto Ef = extend_E(f, 2);
  for (std::vector<double> x : {std::vector<double>{0.1, 0.2}, {-0.4, 0.3}}) EXPECT_NEAR(R(Ef, x), f(x), 1e-14);
  EXPECT_THROW(Restriction(BoxBump::polynomial({0}, 0.5, 4), 1.0), PreconditionError);
  EXPECT_NO_THROW(Restriction(BoxBump::polynomial({0}, 0.5, 4), R.scale()));
}

TEST(Restriction, ExtensionCommutesWithBaseFields) {
  auto sys = grushin_lift();
  const int nt = sys.p + sys.k;
  std::vector<int> to_lifted{0, 1};
  auto x = [](int i) { return RationalPolynomial::variable(2, i); };
  std::vector<RationalPolynomial> tests{x(0) * x(0) * x(1), x(1) * x(1) * x(1) + x(0), x(0) * x(0) * x(0) * x(0) * x(1) * x(1)};
  for (const auto& f : tests)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        RationalPolynomial base = sys.base[a].apply(sys.base[b].apply(f));
        RationalPolynomial lifted = sys.lifted[a].apply(sys.lifted[b].apply(f.remap(to_lifted, nt)));
        EXPECT_TRUE(lifted == base.remap(to_lifted, nt));
      }
}

TEST(Restriction, CommutatorDefectMatchesIntegrationByParts) {
  auto sys = grushin_lift();
  ASSERT_EQ(sys.p + sys.k, 3);
  const BoxBump zeta = BoxBump::polynomial({0}, 0.5, 4);
  auto grid = tensor_grid(zeta, {48});
  auto lambda = [&](const auto& v) { return zeta(std::vector{v[2]}) * (v[0] * v[2] + 1.0); };
  auto f = [](const auto& v) { return v[0] * v[0] * v[2] + v[1] + v[2] * v[2] * v[2] * v[1]; };
  for (int j = 0; j < 2; ++j)
    for (std::vector<double> x : {std::vector<double>{0.2, -0.1}, {-0.3, 0.4}}) {
      auto c = commutator_defect<3>(sys.lifted, 2, j, lambda, f, x, grid);
      EXPECT_LE(c.residual(), 1e-12 * std::max({1.0, std::abs(c.lhs), std::abs(c.r_prime_xj)})) << j;
    }
}

TEST(Restriction, PushforwardKernelAgreesWithNestedIntegral) {
  auto sys = grushin_lift();
  ThetaChart chart(sys.lifted, 2, {}, {0, 0, 0});
  Parametrix<3> P(chart, K0().kernel(), grushin_config());
  const BoxBump zeta = BoxBump::polynomial({0}, 0.4, 4);
  auto R = Restriction::normalized(zeta, 48);
  auto x1p_grid = tensor_grid(BoxBump::polynomial_box({0}, {0.7}, {1.2}, 5), {96});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  int checked = 0;
  while (checked < 10) {
    std::vector<double> x{U(rng), U(rng)}, x1{U(rng), U(rng)};
    if (std::hypot(x[0] - x1[0], x[1] - x1[1]) < 0.3) continue;
    const double pk = pushforward_kernel<3>(P, R, 2, x, x1, x1p_grid);
    const double oracle = gk(
        [&](double xp) {
          const double z = R.scale() * zeta(std::vector{xp});
          if (z == 0) return 0.0;
          auto inner = [&](double x1p) {
            std::vector<double> xt{x[0], x[1], xp}, x1t{x1[0], x1[1], x1p};
            return P.kernel(xt, x1t) * chart.volume_density(x1t);
          };
          // Pieces between the plateau edges of ψ′ are smooth.
          return z * (gk(inner, -1.2, -0.7, 1e-9) + gk(inner, -0.7, 0.7, 1e-9) + gk(inner, 0.7, 1.2, 1e-9));
        },
        -0.4, 0.4, 1e-9);
    EXPECT_NEAR(pk, oracle, 1e-5 * std::max(1e-3, std::abs(oracle))) << checked;
    ++checked;
  }
  // Outside the projection of supp ψ the push-forward vanishes.
  EXPECT_EQ(pushforward_kernel<3>(P, R, 2, {0.7, 0}, {0, 0}, x1p_grid), 0.0);
  auto zero_cfg = grushin_config();
  zero_cfg.psi = BoxBump::zero_bump(3);
  Parametrix<3> Z(chart, K0().kernel(), zero_cfg);
  EXPECT_EQ(pushforward_kernel<3>(Z, R, 2, {0.1, 0}, {0, 0.2}, x1p_grid), 0.0);
}

TEST(Parametrix, BoundedOnSampledUnitBall) {
  auto fs = corpus("heisenberg");
  ThetaChart chart(fs.fields, 2, {}, {0, 0, 0});
  auto cfg = coarse_config(8);
  cfg.psi = BoxBump::polynomial({0, 0, 0}, 0.6, 2);
  Parametrix<3> P(chart, K0().kernel(), cfg);
  // 20 random unit-norm combinations of 1, cos x_i, sin x_i; P f is the same combination of P b_k.
  using J0 = Jet<3, 0>;
  std::vector<std::function<J0(const std::vector<J0>&)>> dict{[](const std::vector<J0>&) { return J0(1.0); }};
  for (int i = 0; i < 3; ++i) {
    dict.push_back([i](const std::vector<J0>& x) { return cos(x[i]); });
    dict.push_back([i](const std::vector<J0>& x) { return sin(x[i]); });
  }
  std::mt19937 rng(6);
  std::normal_distribution<double> A(0, 1);
  const auto fgrid = tensor_grid(cfg.psi_prime, {12, 12, 12});
  std::vector<std::vector<double>> coef(20, std::vector<double>(dict.size()));
  for (auto& c : coef) {
    for (auto& v : c) v = A(rng);
    double n2 = 0;
    for (const auto& g : fgrid) {
      std::vector<J0> x(g.x.begin(), g.x.end());
      double f = 0;
      for (std::size_t k = 0; k < dict.size(); ++k) f += c[k] * dict[k](x).value();
      n2 += g.weight * f * f;
    }
    for (auto& v : c) v /= std::sqrt(n2);
  }
  auto norms = [&](int n) {
    std::vector<double> out(coef.size(), 0.0);
    for (const auto& g : tensor_grid(cfg.psi, {n, n, n})) {
      const double p = cfg.psi(g.x);
      const auto rule = P.local_rule(g.x, restrict_hint(P.hint_of(dict[0]), cfg.psi_prime));
      std::vector<double> pb;
      for (const auto& b : dict) pb.push_back(p * P.integral_jet<0>(b, g.x, rule).value());
      for (std::size_t t = 0; t < coef.size(); ++t) {
        double v = 0;
        for (std::size_t q = 0; q < pb.size(); ++q) v += coef[t][q] * pb[q];
        out[t] += g.weight * v * v;
      }
    }
    for (auto& v : out) v = std::sqrt(v);
    return out;
  };
  auto a = norms(4), b = norms(6);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(std::isfinite(a[i]));
    ma = std::max(ma, a[i]);
    mb = std::max(mb, b[i]);
  }
  RecordProperty("max_norm_coarse", std::to_string(ma));
  RecordProperty("max_norm", std::to_string(mb));
  EXPECT_GT(mb, 0);
  EXPECT_NEAR(ma, mb, 0.05 * mb);
}

TEST(Parametrix, ContinuousInParameter) {
  auto fs = corpus("heisenberg_family");
  auto cfg = coarse_config(4);
  auto f = [](const auto& x) {
    using std::cos;
    return cos(x[0] * 2.0) * (x[1] + 1.0);
  };
  auto grid = tensor_grid(cfg.psi, {3, 3, 3});
  auto values = [&](double s) {
    ThetaChart chart(fs.fields, 2, {s}, {0, 0, 0});
    Parametrix<3> P(chart, K0().kernel(), cfg);
    std::vector<double> v;
    for (const auto& g : grid) v.push_back(P.apply(f, g.x));
    return v;
  };
  const auto base = values(0.3);
  std::vector<double> diffs;
  for (double gap : {0.2, 0.1, 0.05}) {
    const auto v = values(0.3 + gap);
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) d += grid[i].weight * std::pow(v[i] - base[i], 2);
    diffs.push_back(std::sqrt(d));
  }
  EXPECT_GT(diffs[0], diffs[1]);
  EXPECT_GT(diffs[1], diffs[2]);
  EXPECT_GT(diffs[2], 0);
}

TEST(SobolevNorms, EmbeddingRatioBounded) {
  auto fs = corpus("heisenberg_family");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> C(-0.5, 0.5), Rd(0.3, 1.0);
  double worst = 0;
  for (double s : {0.0, 0.5, 1.0}) {
    const auto coeffs = field_coefficients(fs.fields, {s});
    for (int i = 0; i < 20; ++i) {
      const auto bump = BoxBump::polynomial({C(rng), C(rng), C(rng)}, Rd(rng), 4);
      auto f = [&](const auto& x) { return bump(x); };
      auto [s2, l2] = sobolev_norms<3, 2>(coeffs, f, tensor_grid(bump, {16, 16, 16}), 2, 1);
      ASSERT_GT(s2, 0);
      worst = std::max(worst, l2 / s2);
    }
  }
  RecordProperty("max_ratio", std::to_string(worst));
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LE(worst, 1.0);
}

TEST(SobolevNorms, FieldCoefficientsSubstituteParameter) {
  auto fs = corpus("heisenberg_family");
  auto c = field_coefficients(fs.fields, {2.0});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[1][1].evaluate(std::vector<double>{0.5, 0, 0}), 2.5, 1e-15);
  EXPECT_NEAR(c[1][2].evaluate(std::vector<double>{0.5, 0, 0}), 1.0, 1e-15);
}
