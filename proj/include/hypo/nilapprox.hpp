#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <vector>

#include "hypo/liealg.hpp"
#include "hypo/vfield.hpp"

namespace hypo {

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 60;
};

/// Canonical coordinates of the first kind built from the Lyndon frame of a system that is free
/// of order m, at a fixed parameter value y.
class ThetaChart {
 public:
  ThetaChart(const std::vector<PolyVectorField>& fields, int m, std::vector<double> y,
             std::vector<double> base_point, NewtonOptions newton = {});

  const FreeNilpotentAlgebra& algebra() const { return alg_; }
  const std::vector<PolyVectorField>& fields() const { return fields_; }
  const std::vector<PolyVectorField>& frame() const { return flow_.frame(); }
  const FrameFlow& flow() const { return flow_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& base_point() const { return base_; }
  int dim() const { return alg_.dim(); }

  /// exp(Σ u_k X̃_k)(x).
  std::vector<double> flow_from(const std::vector<double>& x, const std::vector<double>& u) const;
  /// Matrix whose columns are the frame fields at x.
  Eigen::MatrixXd frame_matrix(const std::vector<double>& x) const;
  /// D_u exp(Σ u_k X̃_k)(x).
  Eigen::MatrixXd flow_jacobian(const std::vector<double>& x, const std::vector<double>& u) const;

  /// Θ(x, x1): the u with exp(Σ u_k X̃_k)(x) = x1, by damped Newton.
  std::vector<double> theta(const std::vector<double>& x, const std::vector<double>& x1) const;
  std::vector<double> canonical_coords(const std::vector<double>& target) const { return theta(base_, target); }
  double rho(const std::vector<double>& x, const std::vector<double>& x1) const;

  /// |det frame(x)|^{-1}: density of dv_y against Lebesgue measure.
  double volume_density(const std::vector<double>& x) const;

  /// Taylor expansion of u ↦ exp(Σ u_k X̃_k)(x) up to the given weighted degree (Lie series).
  std::vector<RealPolynomial> flow_series(const std::vector<double>& x, int max_weight) const;

 private:
  std::vector<PolyVectorField> fields_;
  FreeNilpotentAlgebra alg_;
  std::vector<double> y_;
  std::vector<double> base_;
  NewtonOptions newton_;
  FrameFlow flow_;
  std::vector<RealPolynomial> frame_at_y_;                  // [k * P + i], base variables only
  std::vector<std::vector<RealPolynomial>> flow_jac_poly_;  // d flow_i / d u_k in (x0, u, y), triangular case
};

struct Violation {
  int basis_index;
  int weight;
  double coeff;
};

struct LocalDegreeReport {
  int j = 0;
  int max_weight = 0;
  std::vector<RealPolynomial> expansion;  // coefficient of Y_k, as a polynomial in group coordinates
  std::vector<Violation> violations;      // terms of weight below w_k in expansion[k] - δ_jk
  double max_violation = 0;
  double max_remainder = 0;               // largest |coeff| of expansion - δ_j over all weights

  nlohmann::json to_json() const;
};

/// Expands Θ_* X̃_j at the chart's base point in the left-invariant frame Y_k.
LocalDegreeReport pushforward_expansion(const ThetaChart& chart, int j, int max_weight, double threshold = 1e-8);

/// Truncated multiplication keeping terms of weighted degree <= max_weight.
RealPolynomial mul_truncated(const RealPolynomial& a, const RealPolynomial& b, const std::vector<int>& weights,
                             int max_weight);

}  // namespace hypo
