#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hypo/lifting.hpp"
#include "hypo/spectral.hpp"
#include "hypo/vfield.hpp"

namespace hypo::jobs {

/// Outcome of one batch job: a JSON report, an optional CSV or text artifact, and the verdict.
struct Result {
  nlohmann::json report;
  bool pass = true;
  std::string csv;
  std::string text;
};

/// "origin" or a comma-separated list of rationals or decimals ("1/2, -3, 0.25").
std::vector<Rational> parse_point(const std::string& text, int n);
std::vector<double> to_double(const std::vector<Rational>& v);

/// Witt dimensions of g_{d,m}, with antisymmetry and Jacobi checked exactly on all basis triples.
Result lie_dims(int d, int m);
Result flag(const FieldSystem& sys, int m, const std::vector<Rational>& at);
/// Fails with "not bracket generating up to m" when no step ≤ m exists.
Result hormander(const FieldSystem& sys, int m, const std::vector<Rational>& at);
Result free(const FieldSystem& sys, int m, const std::vector<Rational>& at);
/// The lifted system as corpus text, and a JSON summary of rounds and flags.
Result lift_system(const FieldSystem& sys, int m, const std::vector<Rational>& at, const LiftOptions& opts);

struct ThetaCheckOptions {
  int m = 2;
  std::vector<double> base;  // lifted coordinates; padded with zeros
  std::vector<double> y;     // parameter values; padded with zeros
  int pairs = 50;
  double radius = 0.1;
  int max_weight = 4;
  unsigned seed = 42;
  double tol = 1e-8;
  LiftOptions lift;
};
/// Θ(x, x) = 0, Θ(x, x1) = −Θ(x1, x) and local-degree violations of Θ_* X̃_j. Systems that are not
/// free at the base point are lifted first.
Result theta_check(const FieldSystem& sys, const ThetaCheckOptions& opts);

/// K0 constants, the L0 K0 residual at random gauge-sphere points, flux at radii from 0.5 to 2, and the
/// exact weighted homogeneity of the quadratic form under the root.
Result k0_calibrate(int points, unsigned seed, double tol);

/// Residual smoothing sweep: the moment-free abelian case for one-dimensional systems (flatness),
/// otherwise the order-2 lift of a two-generator system with the fundamental solution K0 (growth).
Result parametrix_residual(const FieldSystem& sys, const std::vector<double>& frequencies);

/// Covariance, adjoint, intertwining and self-adjointness checks on the standard chart.
Result chart_identities(int pairs, unsigned seed, double tol);

/// Fourier spectrum of the Kronecker model, or the Galerkin spectrum when a density is given.
Result spectrum(const Slope& alpha, int N, const std::optional<CosineDensity>& mu);
Result gap_report(const Slope& alpha, int N, double Lambda, double grid_step, double epsilon_bound);

}  // namespace hypo::jobs
