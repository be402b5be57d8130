#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "hypo/errors.hpp"
#include "hypo/spectral.hpp"

using namespace hypo;

namespace {

constexpr double kPi = std::numbers::pi;
const double kLambda = 100 * kPi * kPi;

/// Sorted distinct values, merging entries closer than tol.
std::vector<double> distinct(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

/// Eigenvalues of −(μu′)′ = λ μ u on R/Z by a flux-form second-order difference scheme.
std::vector<double> circle_fd_eigenvalues(const std::function<double(double)>& mu, int n) {
  const double h = 1.0 / n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double mp = mu((i + 0.5) * h), mm = mu((i - 0.5) * h);
    A(i, i) = (mp + mm) / (h * h);
    A(i, (i + 1) % n) = -mp / (h * h);
    A(i, (i + n - 1) % n) = -mm / (h * h);
    B(i, i) = mu(i * h);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

}  // namespace

TEST(Slope, ParsesAndReduces) {
  const Slope s = Slope::parse("4/10");
  EXPECT_TRUE(s.is_rational());
  EXPECT_EQ(s.p, 2);
  EXPECT_EQ(s.q, 5);
  EXPECT_EQ(Slope::parse("-1/-3").to_string(), "1/3");
  EXPECT_EQ(Slope::parse("0").to_string(), "0");
  EXPECT_FALSE(Slope::parse("golden").is_rational());
  EXPECT_NEAR(static_cast<double>(Slope::sqrt2().value()), std::sqrt(2.0), 1e-16);
  EXPECT_THROW(Slope::parse("1/0"), PreconditionError);
  EXPECT_THROW(Slope::parse("pi"), ParseError);
  EXPECT_THROW(Slope::parse(""), ParseError);
}

TEST(FourierSpectrum, DecoupledSlopeZero) {
  const auto r = fourier_spectrum({Slope::rational(0, 1), 1});
  const auto v = r.values();
  ASSERT_EQ(v.size(), 9u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(v[i], 0.0);
  for (int i = 3; i < 9; ++i) EXPECT_NEAR(v[i], 4 * kPi * kPi, 1e-12);
}

TEST(FourierSpectrum, HalfSlopeIsSquaredIntegers) {
  const auto r = fourier_spectrum({Slope::rational(1, 2), 2});
  for (const auto& e : r.modes) {
    const double j = 2.0 * e.m + e.n;
    EXPECT_NEAR(e.value, kPi * kPi * j * j, 1e-13 * std::max(1.0, e.value));
    EXPECT_TRUE(r.leafwise.contains(e.value, 1e-12 * std::max(1.0, e.value)));
  }
  EXPECT_NEAR(LeafwiseDescriptor::lattice_value(3, 2), 9 * kPi * kPi, 1e-12);
}

TEST(FourierSpectrum, GoldenNearResonance) {
  const auto r = fourier_spectrum({Slope::golden(), 50});
  double min_positive = INFINITY;
  for (const auto& e : r.modes)
    if (e.m != 0 || e.n != 0) min_positive = std::min(min_positive, e.value);
  // Convergent 34/21 of the golden ratio.
  const long double t = 21 * (1 + std::sqrt(5.0L)) / 2 - 34;
  EXPECT_LT(min_positive, 0.02);
  EXPECT_NEAR(min_positive, static_cast<double>(4 * t * t) * kPi * kPi, 1e-12);
}

TEST(FourierSpectrum, SymmetricUnderNegation) {
  for (const auto* a : {"2/5", "golden"}) {
    const auto r = fourier_spectrum({Slope::parse(a), 7});
    std::map<std::pair<int, int>, double> by_mode;
    for (const auto& e : r.modes) by_mode[{e.m, e.n}] = e.value;
    for (const auto& [k, v] : by_mode) {
      EXPECT_EQ(v, by_mode.at({-k.first, -k.second}));
      EXPECT_GE(v, 0.0);
    }
    const auto v = r.values();
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
  }
}

TEST(LeafwiseSpectrum, Descriptors) {
  const auto d0 = leafwise_spectrum({Slope::rational(0, 1), 1});
  EXPECT_FALSE(d0.half_line);
  EXPECT_TRUE(d0.contains(4 * kPi * kPi * 9, 1e-9));
  EXPECT_FALSE(d0.contains(kPi * kPi, 1e-9));
  const auto dh = leafwise_spectrum({Slope::rational(1, 2), 1});
  EXPECT_TRUE(dh.contains(kPi * kPi, 1e-12));
  EXPECT_EQ(dh.lattice_below(kLambda).size(), 11u);
  const auto dg = leafwise_spectrum({Slope::golden(), 1});
  EXPECT_TRUE(dg.half_line);
  EXPECT_TRUE(dg.contains(0.123, 0));
  EXPECT_FALSE(dg.contains(-1, 0));
}

TEST(GapReport, RationalSetEquality) {
  for (const auto* a : {"0", "1/2", "1/3", "2/5"}) {
    const TorusModel m{Slope::parse(a), 16};
    const auto g = spectral_gap_report(fourier_spectrum(m), leafwise_spectrum(m), kLambda);
    EXPECT_TRUE(g.pass) << g.to_json().dump();
    EXPECT_TRUE(g.missing.empty());
    EXPECT_TRUE(g.extra.empty());
  }
  // A truncation too small to reach the lattice below Λ is reported, not hidden.
  const TorusModel small{Slope::rational(2, 5), 2};
  const auto g = spectral_gap_report(fourier_spectrum(small), leafwise_spectrum(small), kLambda);
  EXPECT_FALSE(g.pass);
  EXPECT_FALSE(g.missing.empty());
  EXPECT_TRUE(g.extra.empty());
  EXPECT_THROW(spectral_gap_report(fourier_spectrum(small), leafwise_spectrum(small), 0.0), PreconditionError);
}

TEST(GapReport, GoldenDensityImproves) {
  std::vector<double> eps;
  for (int N : {50, 200}) {
    const TorusModel m{Slope::golden(), N};
    const auto g = spectral_gap_report(fourier_spectrum(m), leafwise_spectrum(m), 100.0, 0.5);
    EXPECT_EQ(g.containment, 0.0);
    eps.push_back(g.epsilon);
  }
  EXPECT_LE(eps[1], eps[0] / 2);
  EXPECT_LE(eps[1], 1.0);
  const auto j = spectral_gap_report(fourier_spectrum({Slope::golden(), 20}),
                                     leafwise_spectrum({Slope::golden(), 20}), 100.0)
                     .to_json();
  for (const char* key : {"alpha", "N", "Lambda", "epsilon", "pass"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(CosineDensity, ParseEvaluateAndCoefficients) {
  const auto mu = CosineDensity::parse("3; 1:1:1; 0.5:0:1");
  EXPECT_NEAR(mu(0.1, 0.2), 3 + std::cos(2 * kPi * 0.3) + 0.5 * std::cos(2 * kPi * 0.2), 1e-14);
  EXPECT_EQ(mu.coefficient(0, 0), 3.0);
  EXPECT_EQ(mu.coefficient(1, 1), 0.5);
  EXPECT_EQ(mu.coefficient(-1, -1), 0.5);
  EXPECT_EQ(mu.coefficient(0, -1), 0.25);
  EXPECT_EQ(mu.coefficient(1, 0), 0.0);
  EXPECT_THROW(CosineDensity::parse("x"), ParseError);
  EXPECT_THROW(CosineDensity::parse("1; 2:1"), ParseError);
  EXPECT_THROW(CosineDensity::parse("1; 2:1:0").check_positive(), PreconditionError);
  EXPECT_THROW(variable_coefficient_spectrum(Slope::golden(), CosineDensity::parse("1; -1:0:1"), 4),
               PreconditionError);
}

TEST(Galerkin, UnitDensityReducesToFourier) {
  for (const auto* a : {"1/3", "golden"}) {
    const auto alpha = Slope::parse(a);
    const auto g = variable_coefficient_spectrum(alpha, CosineDensity::parse("1"), 6);
    const auto f = fourier_spectrum({alpha, 6}).values();
    ASSERT_EQ(g.eigenvalues.size(), f.size());
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(g.eigenvalues[i], f[i], 1e-12 * std::max(1.0, f[i]));
  }
}

TEST(Galerkin, ConstantsSpanTheKernel) {
  const auto g = variable_coefficient_spectrum(Slope::golden(), CosineDensity::parse("3; 1:1:1; 0.5:0:1"), 5);
  ASSERT_EQ(g.blocks.size(), 1u);
  const auto& b = g.blocks[0];
  Eigen::Index zero = -1;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(b.modes.size()); ++i)
    if (b.modes[i] == std::pair(0, 0)) zero = i;
  ASSERT_GE(zero, 0);
  EXPECT_EQ(b.stiffness.col(zero).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.eigenvalues[0], 0.0);
  EXPECT_GT(g.eigenvalues[1], 0.0);
}

TEST(Galerkin, MatchesFiniteDifferenceOnCircle) {
  // μ = 2 + cos 2πx with α = 0: the n = 0 block is −(μu′)′ = λμu on the circle.
  const auto mu = CosineDensity::parse("2; 1:1:0");
  std::vector<double> second;
  for (int N : {16, 32}) {
    const auto g = variable_coefficient_spectrum(Slope::rational(0, 1), mu, N);
    EXPECT_TRUE(g.exactly_symmetric());
    EXPECT_GE(g.min_eigenvalue(), -1e-12);
    second.push_back(distinct(g.eigenvalues, 1e-9).at(1));
  }
  EXPECT_NEAR(second[0], second[1], 5e-4 * second[1]);
  const auto fd = distinct(circle_fd_eigenvalues([](double x) { return 2 + std::cos(2 * kPi * x); }, 400), 1e-6);
  EXPECT_NEAR(second[1], fd.at(1), 1e-3 * second[1]);
}

TEST(Galerkin, RitzValuesDecreaseWithTruncation) {
  const auto mu = CosineDensity::parse("3; 1:1:1; 0.5:0:1; -0.4:2:-1");
  const auto a = variable_coefficient_spectrum(Slope::golden(), mu, 5).eigenvalues;
  const auto b = variable_coefficient_spectrum(Slope::golden(), mu, 7).eigenvalues;
  for (std::size_t k = 0; k < 20; ++k) EXPECT_LE(b[k], a[k] * (1 + 1e-10) + 1e-12) << k;
}

TEST(Galerkin, RandomDensitiesSymmetricSemidefinite) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> U(-1, 1);
  std::uniform_int_distribution<int> F(-2, 2);
  for (int trial = 0; trial < 6; ++trial) {
    CosineDensity mu;
    mu.c0 = 0;
    double total = 0;
    for (int t = 0; t < 3; ++t) {
      CosineDensity::Term term{U(rng), F(rng), F(rng)};
      total += std::abs(term.c);
      mu.terms.push_back(term);
    }
    mu.c0 = total + 0.1;
    const auto alpha = trial % 2 ? Slope::sqrt2() : Slope::rational(trial + 1, 3);
    const auto g = variable_coefficient_spectrum(alpha, mu, 6);
    EXPECT_TRUE(g.exactly_symmetric());
    EXPECT_GE(g.min_eigenvalue(), -1e-12);
    EXPECT_NO_THROW(check_semidefinite(g));
  }
  GalerkinResult bad;
  bad.eigenvalues = {-1e-6, 1.0};
  EXPECT_THROW(check_semidefinite(bad), NumericalError);
}

TEST(SpectrumCsv, HasHeaderAndRows) {
  const auto csv = fourier_spectrum({Slope::rational(1, 2), 1}).to_csv();
  EXPECT_EQ(csv.rfind("m,n,eigenvalue\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
}
