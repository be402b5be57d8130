#include "hypo/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "hypo/errors.hpp"

namespace hypo {

const QuadRule& gauss_legendre(int n) {
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw PreconditionError("gauss_legendre needs n >= 1");
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

QuadRule composite_gauss(double a, double b, int panels, int n) {
  const auto& g = gauss_legendre(n);
  QuadRule r;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(lo + h * (g.nodes[i] + 1) / 2);
      r.weights.push_back(g.weights[i] * h / 2);
    }
  }
  return r;
}

namespace {

double gauss_panel(const std::function<double(double)>& f, double a, double b, int n) {
  const auto& g = gauss_legendre(n);
  double s = 0;
  for (int i = 0; i < n; ++i) s += g.weights[i] * f(a + (b - a) * (g.nodes[i] + 1) / 2);
  return s * (b - a) / 2;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole, double rel_tol,
             double abs_tol, int depth) {
  const double m = (a + b) / 2;
  const double left = gauss_panel(f, a, m, 10), right = gauss_panel(f, m, b, 10);
  const double both = left + right;
  if (std::abs(both - whole) <= abs_tol + rel_tol * std::abs(both)) return both;
  if (depth <= 0) throw NumericalError("adaptive quadrature did not converge");
  return adapt(f, a, m, left, rel_tol, abs_tol / 2, depth - 1) +
         adapt(f, m, b, right, rel_tol, abs_tol / 2, depth - 1);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double abs_tol, int max_depth) {
  return adapt(f, a, b, gauss_panel(f, a, b, 10), rel_tol, abs_tol, max_depth);
}

std::vector<PolarNode> cube_polar_rule(const std::vector<int>& weights, double R, const PolarRuleSpec& spec) {
  const int n = static_cast<int>(weights.size());
  int Q = 0;
  for (int w : weights) Q += w;
  std::vector<std::pair<double, double>> rho_nodes;  // (ρ, weight)
  {
    const auto& g = gauss_legendre(spec.n);
    std::vector<double> cuts{spec.rho_min};
    if (spec.rho_min > 0)
      for (int p = 1; p <= spec.rho_panels; ++p) cuts.push_back(spec.rho_min + (R - spec.rho_min) * p / spec.rho_panels);
    else if (spec.dyadic_rho)
      for (int p = spec.rho_panels - 1; p >= 0; --p) cuts.push_back(R / std::pow(2.0, p));
    else
      for (int p = 1; p <= spec.rho_panels; ++p) cuts.push_back(R * p / spec.rho_panels);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
      for (int i = 0; i < spec.n; ++i) {
        const double h = cuts[p + 1] - cuts[p];
        rho_nodes.push_back({cuts[p] + h * (g.nodes[i] + 1) / 2, g.weights[i] * h / 2});
      }
  }
  const QuadRule face = composite_gauss(-1, 1, spec.face_panels, spec.n);
  std::vector<PolarNode> out;
  if (n == 1) {
    for (auto [rho, wr] : rho_nodes)
      for (int s : {-1, 1}) {
        const double u = s * std::pow(rho, weights[0]);
        out.push_back({{u}, wr * weights[0] * std::pow(rho, Q - 1), rho, {double(s)}});
      }
    return out;
  }
  std::vector<int> idx(n - 1, 0);
  const int fn = static_cast<int>(face.nodes.size());
  for (int i = 0; i < n; ++i)
    for (int s : {-1, 1}) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        std::vector<double> sigma(n);
        double wf = 1;
        for (int k = 0, t = 0; k < n; ++k) {
          if (k == i) {
            sigma[k] = s;
            continue;
          }
          sigma[k] = face.nodes[idx[t]];
          wf *= face.weights[idx[t]];
          ++t;
        }
        for (auto [rho, wr] : rho_nodes) {
          std::vector<double> u(n);
          for (int k = 0; k < n; ++k) u[k] = std::pow(rho, weights[k]) * sigma[k];
          out.push_back({std::move(u), wr * wf * weights[i] * std::pow(rho, Q - 1), rho, sigma});
        }
        int t = 0;
        while (t < n - 1 && ++idx[t] == fn) idx[t++] = 0;
        if (t == n - 1) break;
      }
    }
  return out;
}

}  // namespace hypo
