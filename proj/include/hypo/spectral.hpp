#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

namespace hypo {

/// Slope α of the field X = ∂x + α∂y on R²/Z². Rational slopes are kept as p/q in lowest terms;
/// the irrational ones carry a tag and an extended-precision value.
struct Slope {
  enum class Kind { Rational, Golden, Sqrt2 };
  Kind kind = Kind::Rational;
  long long p = 0, q = 1;

  static Slope rational(long long p, long long q);
  static Slope golden();
  static Slope sqrt2();
  /// "p/q", an integer, "golden" or "sqrt2".
  static Slope parse(const std::string& text);

  bool is_rational() const { return kind == Kind::Rational; }
  long double value() const;
  std::string to_string() const;
};

struct TorusModel {
  Slope alpha;
  int N = 1;  // Fourier modes |m|, |n| ≤ N
};

struct ModeEigenvalue {
  int m = 0, n = 0;
  double value = 0;
  long long j = 0;  // rational slope: value = 4π² j² / q² with j = q m + p n
};

/// Leafwise spectrum: [0, ∞) for irrational slopes, {4π² k² / q²} for α = p/q.
struct LeafwiseDescriptor {
  bool half_line = false;
  long long q = 1;

  static double lattice_value(long long k, long long q);
  /// Lattice indices k ≥ 0 with lattice_value(k, q) ≤ Λ.
  std::vector<long long> lattice_below(double Lambda) const;
  bool contains(double lambda, double tol) const;
  nlohmann::json to_json() const;
};

struct SpectrumResult {
  TorusModel model;
  std::vector<ModeEigenvalue> modes;  // sorted by value, then (m, n)
  LeafwiseDescriptor leafwise;

  std::vector<double> values() const;
  /// CSV with columns m,n,eigenvalue.
  std::string to_csv() const;
};

/// Exact eigenvalues 4π²(m + αn)² on the modes e^{2πi(mx+ny)}, |m|, |n| ≤ N.
SpectrumResult fourier_spectrum(const TorusModel& model);
LeafwiseDescriptor leafwise_spectrum(const TorusModel& model);

struct GapReport {
  std::string alpha;
  int N = 0;
  double Lambda = 0;
  bool rational = false;
  // Rational slopes: lattice indices below Λ missing from, or extra in, the truncated spectrum.
  std::vector<long long> missing, extra;
  // Largest distance from a truncated eigenvalue to the leafwise set.
  double containment = 0;
  // Irrational slopes: largest distance from a grid point of [0, Λ] to the nearest eigenvalue.
  double epsilon = 0;
  double grid_step = 0;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Rational slopes: exact set equality of the truncated spectrum and the lattice below Λ, after
/// multiplicity erasure. Irrational slopes: ε over a grid of step grid_step on [0, Λ]; passes when
/// ε ≤ epsilon_bound.
GapReport spectral_gap_report(const SpectrumResult& spectrum, const LeafwiseDescriptor& leafwise, double Lambda,
                              double grid_step = 0.5, double epsilon_bound = 1.0);

/// μ(x, y) = c0 + Σ c cos(2π(a x + b y)).
struct CosineDensity {
  struct Term {
    double c;
    int a, b;
  };
  double c0 = 1;
  std::vector<Term> terms;

  double operator()(double x, double y) const;
  /// Fourier coefficient μ̂(a, b).
  double coefficient(int a, int b) const;
  /// "c0" or "c0; c:a:b; c:a:b ...".
  static CosineDensity parse(const std::string& text);
  /// Throws PreconditionError unless μ > 0 on a grid fine enough for its frequencies.
  void check_positive() const;
};

struct GalerkinBlock {
  std::vector<std::pair<int, int>> modes;
  Eigen::MatrixXd stiffness, mass;
  Eigen::VectorXd eigenvalues;
};

struct GalerkinResult {
  std::vector<GalerkinBlock> blocks;  // modes coupled by μ̂
  std::vector<double> eigenvalues;    // all blocks, sorted

  bool exactly_symmetric() const;
  double min_eigenvalue() const;
};

/// Galerkin discretization of Δ_H = −(1/μ) X(μ X ·) on |m|, |n| ≤ N: stiffness
/// A_kl = 4π² t_k t_l μ̂(k − l), t = m + αn, mass M_kl = μ̂(k − l), solved as A v = λ M v.
GalerkinResult variable_coefficient_spectrum(const Slope& alpha, const CosineDensity& mu, int N);

/// Throws NumericalError if an eigenvalue is below −tol.
void check_semidefinite(const GalerkinResult& r, double tol = 1e-12);

}  // namespace hypo
