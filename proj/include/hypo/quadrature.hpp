#pragma once

#include <functional>
#include <vector>

namespace hypo {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1].
const QuadRule& gauss_legendre(int n);

/// Composite Gauss–Legendre on [a, b]: `panels` equal panels of n points each.
QuadRule composite_gauss(double a, double b, int panels, int n);

/// Adaptive Gauss–Legendre by panel bisection; stops when a panel's two estimates agree to
/// abs_tol + rel_tol * |panel|. Throws NumericalError past max_depth.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10,
                          double abs_tol = 1e-14, int max_depth = 30);

/// Nodes of a homogeneous "cube-polar" rule: u = δ_ρ(σ) with σ on the boundary of [-1,1]^n and
/// ρ in [0, R]. Each node carries the weight of du, i.e. w_face · ρ^{Q-1} dρ dσ.
struct PolarNode {
  std::vector<double> u;
  double weight;
  double rho;
  std::vector<double> sigma;
};

struct PolarRuleSpec {
  int rho_panels = 4;
  int face_panels = 4;  // per face coordinate
  int n = 10;           // Gauss points per panel
  bool dyadic_rho = true;  // panels [0, R/2^{p-1}], ..., [R/2, R]
  double rho_min = 0;      // > 0 gives a shell rule with uniform ρ panels
};

std::vector<PolarNode> cube_polar_rule(const std::vector<int>& weights, double R, const PolarRuleSpec& spec);

}  // namespace hypo
