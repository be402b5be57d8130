#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hypo/expr_parser.hpp"
#include "hypo/groupoid_chart.hpp"

using namespace hypo;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kVars{"x1", "x2", "y"};

PolyVectorField field(const std::string& a, const std::string& b, int q = 1) {
  std::vector<std::string> vars{"x1", "x2"};
  if (q) vars.push_back("y");
  return PolyVectorField(2, q, {parse_polynomial(a, vars), parse_polynomial(b, vars)});
}

/// cos(m·x + n·x′ + θ) on the torus.
struct TrigKernel {
  std::vector<double> m, n;
  double theta = 0;

  template <class S>
  S operator()(const std::vector<S>& x, const Point& xp, const Point&) const {
    using std::cos;
    S a(theta);
    for (std::size_t i = 0; i < m.size(); ++i) a = a + m[i] * x[i] + S(n[i] * xp[i]);
    return cos(a);
  }
};

struct TorusCase {
  DensityPair d;
  std::vector<PolyVectorField> frame;
  std::vector<std::array<double, 2>> a;  // constant coefficients of X_j
  TrigKernel k{{1, 2}, {2, -1}, 0.4};
  double alpha = 2;

  TorusCase() {
    d.p = 2;
    d.q = 0;
    d.mu = PolyExpDensity::constant(2, Rational(3));
    d.alpha = PolyExpDensity::constant(2, Rational(2));
    frame = {field("1", "1/2", 0), field("3/10", "-1", 0)};
    a = {{{1, 0.5}}, {{0.3, -1}}};
  }
  /// f(x′) = cos(n·x′), so R(k) f(x) = α 2π² cos(m·x + θ) exactly.
  FieldFn f() const {
    return [n = k.n](const Point& x, const Point&) { return std::cos(n[0] * x[0] + n[1] * x[1]); };
  }
  double phase(const Point& x) const { return k.m[0] * x[0] + k.m[1] * x[1] + k.theta; }
  double am(int j) const { return a[j][0] * k.m[0] + a[j][1] * k.m[1]; }
  double Rf(const Point& x) const { return alpha * 2 * kPi * kPi * std::cos(phase(x)); }
  double XRf(int j, const Point& x) const { return -alpha * 2 * kPi * kPi * am(j) * std::sin(phase(x)); }
  double DeltaRf(const Point& x) const {
    double s = 0;
    for (int j = 0; j < 2; ++j) s += am(j) * am(j);
    return s * Rf(x);
  }
};

ChartKernel fixed_kernel(unsigned seed) {
  std::mt19937 rng(seed);
  return random_chart_kernel(rng, 2, 1);
}

}  // namespace

TEST(PolyExpDensity, ParsesAllForms) {
  const Point z{0.3, -0.4, 0.5};
  const auto a = PolyExpDensity::parse("(2 + x1*x2)*exp(x1 - y/2)", kVars);
  EXPECT_NEAR(a(z), (2 + 0.3 * -0.4) * std::exp(0.3 - 0.25), 1e-14);
  EXPECT_NEAR(PolyExpDensity::parse("exp(x2^2)", kVars)(z), std::exp(0.16), 1e-14);
  EXPECT_NEAR(PolyExpDensity::parse("3 + y", kVars)(z), 3.5, 1e-14);
  EXPECT_NEAR(a.log_of(z), std::log(a(z)), 1e-14);
  EXPECT_THROW(PolyExpDensity::parse("exp(x1)*2", kVars), ParseError);
  EXPECT_THROW(PolyExpDensity::parse("2+exp(x1)", kVars), ParseError);
}

TEST(DensityPair, RejectsNonPositiveDensity) {
  auto cfg = ChartIdentityConfig::standard();
  EXPECT_NO_THROW(cfg.densities.check_positive(cfg.box));
  cfg.densities.alpha = PolyExpDensity::parse("x1 + 2", kVars);
  EXPECT_NO_THROW(cfg.densities.check_positive(cfg.box));
  cfg.densities.alpha = PolyExpDensity::parse("x1 + 1/2", kVars);
  EXPECT_THROW(cfg.densities.check_positive(cfg.box), PreconditionError);
  EXPECT_THROW(modular_delta(cfg.densities, cfg.box), PreconditionError);
}

TEST(ModularFunction, CocycleIsExact) {
  const auto cfg = ChartIdentityConfig::standard();
  const auto delta = modular_delta(cfg.densities, cfg.box);
  EXPECT_TRUE(delta.cocycle_exact());
  const Point x{0.1, -0.3}, xp{0.5, 0.2}, xpp{-0.7, 0.9}, y{0.4};
  EXPECT_NEAR(delta(x, xp, y) * delta(xp, xpp, y), delta(x, xpp, y), 1e-13 * delta(x, xpp, y));
  EXPECT_NEAR(delta(x, x, y), 1.0, 1e-15);
}

TEST(ModularFunction, QuasiInvarianceHoldsForInverse) {
  // μ = e^x, α = 1 on [−1, 1]; f(x, x′) = 1 + x x′².
  DensityPair d;
  d.p = 1;
  d.q = 0;
  d.mu = PolyExpDensity::parse("exp(x)", {"x"});
  d.alpha = PolyExpDensity::constant(1, Rational(1));
  const ChartBox box = ChartBox::cube(1, 0, 1.0);
  const auto delta = modular_delta(d, box);
  const KernelFn f = [](const Point& x, const Point& xp, const Point&) { return 1 + x[0] * xp[0] * xp[0]; };
  const auto r = quasi_invariance(delta, box, f, 24);
  const double e = std::numbers::e;
  const double exact = 2 * (e - 1 / e) + (2.0 / 3.0) * (2 / e);
  EXPECT_NEAR(r.reference, exact, 1e-12);
  EXPECT_NEAR(r.with_inverse, exact, 1e-12);
  EXPECT_GT(std::abs(r.with_delta - exact), 0.1);
}

TEST(Representation, HomomorphismOnNodes) {
  const auto cfg = ChartIdentityConfig::standard();
  const auto& d = cfg.densities;
  const LeafRule rule = LeafRule::gauss({-0.8, -0.8}, {0.8, 0.8}, 2, 5);
  const ChartKernel a = fixed_kernel(1), b = fixed_kernel(2);
  const KernelFn ka = [a](const Point& x, const Point& xp, const Point& y) { return a(x, xp, y); };
  const KernelFn kb = [b](const Point& x, const Point& xp, const Point& y) { return b(x, xp, y); };
  const Point y{0.3};
  const Eigen::MatrixXd Ma = rep_matrix(ka, d, rule, y), Mb = rep_matrix(kb, d, rule, y);
  const Eigen::MatrixXd Mab = rep_matrix(convolve(ka, kb, d, rule), d, rule, y);
  EXPECT_LE((Ma * Mb - Mab).cwiseAbs().maxCoeff(), 1e-13 * Mab.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd Mstar = rep_matrix(involution(ka), d, rule, y);
  EXPECT_LE((grid_adjoint(Ma, d, rule, y) - Mstar).cwiseAbs().maxCoeff(), 1e-13 * Mstar.cwiseAbs().maxCoeff());
}

TEST(Representation, ApplyMatchesMatrix) {
  const auto cfg = ChartIdentityConfig::standard();
  const LeafRule rule = LeafRule::gauss({-1, -1}, {1, 1}, 1, 6);
  const ChartKernel k = fixed_kernel(3);
  const Point y{-0.2};
  const FieldFn f = [](const Point& x, const Point&) { return std::sin(x[0]) + x[1]; };
  const Eigen::MatrixXd M = rep_matrix(k, cfg.densities, rule, y);
  Eigen::VectorXd u(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index b = 0; b < u.size(); ++b) u(b) = f(rule.x[b], y);
  const Eigen::VectorXd Mu = M * u;
  for (Eigen::Index a = 0; a < u.size(); a += 7)
    EXPECT_NEAR(Mu(a), rep_apply(k, cfg.densities, rule, f, rule.x[a], y), 1e-13);
}

TEST(ChartCalculus, ZerothOrderCoefficients) {
  // μ = e^{x1}, α = 1, X = ∂_1: l = −1/2 and c = −1.
  DensityPair d;
  d.p = 2;
  d.q = 1;
  d.mu = PolyExpDensity::parse("exp(x1)", kVars);
  d.alpha = PolyExpDensity::constant(3, Rational(1));
  ChartCalculus<2> calc(d, {field("1", "0")});
  const Point x{0.2, -0.1}, y{0.5};
  EXPECT_NEAR(calc.l(0, x, y), -0.5, 1e-15);
  EXPECT_NEAR(calc.c(0, x, y), -1.0, 1e-15);
  // X = x2 ∂_1 + ∂_2 with μ = (2 + x1²) e^{y x2}, α = e^{x2}.
  d.mu = PolyExpDensity::parse("(2 + x1^2)*exp(y*x2)", kVars);
  d.alpha = PolyExpDensity::parse("exp(x2)", kVars);
  ChartCalculus<2> calc2(d, {field("x2", "1")});
  const double dlogmu1 = 2 * x[0] / (2 + x[0] * x[0]), dlogmu2 = y[0];
  EXPECT_NEAR(calc2.l(0, x, y), -0.5 * (x[1] * dlogmu1 + dlogmu2 - 1), 1e-14);
  EXPECT_NEAR(calc2.c(0, x, y), -(x[1] * dlogmu1 + dlogmu2), 1e-14);
}

TEST(ChartCalculus, RejectsFrameOffThePlaques) {
  auto cfg = ChartIdentityConfig::standard();
  EXPECT_THROW(ChartCalculus<2>(cfg.densities, {field("1", "0", 0)}), PreconditionError);
  EXPECT_THROW(ChartCalculus<2>(cfg.densities, {PolyVectorField(3, 0)}), PreconditionError);
  ChartKernel k = fixed_kernel(4);
  EXPECT_NO_THROW(check_in_chart(k, cfg.box));
  k.bump_xp.factors[0].center = 0.7;
  EXPECT_THROW(check_in_chart(k, cfg.box), PreconditionError);
}

TEST(ChartCalculus, KernelLiftsMatchFourierOracle) {
  TorusCase t;
  ChartCalculus<2> calc(t.d, t.frame);
  const LeafRule rule = LeafRule::periodic(2, 8);
  const FieldFn f = t.f();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0, 2 * kPi);
  const double scale = 2 * kPi * kPi * t.alpha * 4;
  for (int s = 0; s < 5; ++s) {
    const Point x{U(rng), U(rng)}, y{};
    EXPECT_NEAR(rep_apply(t.k, t.d, rule, f, x, y), t.Rf(x), 1e-12 * scale);
    for (int j = 0; j < 2; ++j) {
      auto Lk = [&](const Point& a, const Point& b, const Point& yy) { return calc.L(j, t.k, a, b, yy); };
      auto Ltk = [&](const Point& a, const Point& b, const Point& yy) { return calc.Ltilde(j, t.k, a, b, yy); };
      EXPECT_NEAR(rep_apply(Lk, t.d, rule, f, x, y), t.XRf(j, x), 1e-12 * scale);
      EXPECT_NEAR(rep_apply(Ltk, t.d, rule, f, x, y), -t.XRf(j, x), 1e-12 * scale);
    }
    auto Dk = [&](const Point& a, const Point& b, const Point& yy) { return calc.Delta(t.k, a, b, yy); };
    EXPECT_NEAR(rep_apply(Dk, t.d, rule, f, x, y), t.DeltaRf(x), 1e-12 * scale);
  }
}

TEST(ChartCalculus, OperatorSideMatchesFourierOracle) {
  TorusCase t;
  ChartCalculus<2> calc(t.d, t.frame);
  const FieldFn u = [&t](const Point& x, const Point&) { return t.Rf(x); };
  const double scale = 2 * kPi * kPi * t.alpha * 4;
  for (double h : {0.02, 0.01}) {
    const double tol = 2e-8 * std::pow(h / 0.01, 4) * scale * 10;
    const Point x{0.7, 2.1}, y{};
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(calc.X(j, u, x, y, h), t.XRf(j, x), tol);
      EXPECT_NEAR(calc.Xstar(j, u, x, y, h), -t.XRf(j, x), tol);
    }
    EXPECT_NEAR(calc.DeltaH(u, x, y, h), t.DeltaRf(x), tol);
  }
}

TEST(ChartCalculus, CovarianceDetectsWrongDensity) {
  auto cfg = ChartIdentityConfig::standard();
  ChartCalculus<2> right(cfg.densities, cfg.frame);
  DensityPair wrong = cfg.densities;
  wrong.mu = PolyExpDensity::parse("(2 + x1*x2 + y^2)*exp(x1)", kVars);
  ChartCalculus<2> bad(wrong, cfg.frame);
  const ChartKernel k = fixed_kernel(6);
  const LeafRule rule = LeafRule::on_support(k.bump_xp, 2, 10);
  const FieldFn f = [](const Point& x, const Point&) { return std::cos(x[0] - 2 * x[1]); };
  const FieldFn u = [&](const Point& x, const Point& y) { return rep_apply(k, cfg.densities, rule, f, x, y); };
  const Point x{k.bump_x.factors[0].center, k.bump_x.factors[1].center}, y{0.6};
  auto Lk = [&](const ChartCalculus<2>& c) {
    return [&c, &k](const Point& a, const Point& b, const Point& yy) { return c.L(1, k, a, b, yy); };
  };
  const double lhs = right.X(1, u, x, y, 0.005);
  const double good = rep_apply(Lk(right), cfg.densities, rule, f, x, y);
  const double off = rep_apply(Lk(bad), cfg.densities, rule, f, x, y);
  EXPECT_LE(std::abs(lhs - good), 1e-6 * std::abs(good));
  EXPECT_GT(std::abs(lhs - off), 1e-3 * std::abs(good));
}

TEST(ChartIdentities, ConvergeUnderRefinement) {
  auto cfg = ChartIdentityConfig::standard();
  cfg.pairs = 3;
  const auto reps = verify_chart_identities<2>(cfg);
  ASSERT_EQ(reps.size(), 4u);
  for (const auto& r : reps) {
    SCOPED_TRACE(r.identity);
    EXPECT_TRUE(r.pass) << r.to_json().dump();
    EXPECT_LE(r.residuals.back(), 1e-7);
    for (double f : r.reductions) EXPECT_GE(f, 4.0);
    const auto j = r.to_json();
    EXPECT_TRUE(j.contains("refinement_slopes"));
  }
}
