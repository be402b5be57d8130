#pragma once

#include <array>
#include <cmath>
#include <type_traits>
#include <vector>

#include "hypo/jet.hpp"

namespace hypo {

/// C^∞ step: 0 for t <= 0, 1 for t >= 1, e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) between.
template <class S>
S smooth_step(const S& t) {
  using std::exp;
  const double v = value_of(t);
  if (v <= 0) return S(0.0);
  if (v >= 1) return S(1.0);
  S a = exp(S(-1.0) / t);
  S b = exp(S(-1.0) / (S(1.0) - t));
  return a / (a + b);
}

namespace bump_detail {

/// p(t) for monomial coefficients c, composed through a jet when S is one.
template <class S>
S polynomial_compose(const std::vector<double>& c, const S& t) {
  const double v = value_of(t);
  auto horner = [&](int k) {  // k-th derivative at v
    double r = 0;
    for (int i = static_cast<int>(c.size()) - 1; i >= k; --i) {
      double f = 1;
      for (int a = 0; a < k; ++a) f *= i - a;
      r = r * v + c[i] * f;
    }
    return r;
  };
  if constexpr (std::is_same_v<S, double>) {
    return horner(0);
  } else {
    std::array<double, S::order + 1> d;
    for (int k = 0; k <= S::order; ++k) d[k] = horner(k);
    return t.compose(d);
  }
}

/// Monomial coefficients of Σ_{j>k} C(2k+1, j) t^j (1 − t)^{2k+1−j}.
inline const std::vector<double>& step_coefficients(int k) {
  static std::vector<std::vector<double>> cache;
  if (static_cast<int>(cache.size()) <= k) cache.resize(k + 1);
  auto& c = cache[k];
  if (!c.empty()) return c;
  const int n = 2 * k + 1;
  c.assign(n + 1, 0.0);
  auto binom = [](int a, int b) {
    double r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  for (int j = k + 1; j <= n; ++j)
    for (int m = 0; m <= n - j; ++m)  // (1 − t)^{n−j} = Σ C(n−j, m) (−t)^m
      c[j + m] += binom(n, j) * binom(n - j, m) * (m % 2 ? -1.0 : 1.0);
  return c;
}

/// Monomial coefficients of (1 − r²)^k in r.
inline const std::vector<double>& power_coefficients(int k) {
  static std::vector<std::vector<double>> cache;
  if (static_cast<int>(cache.size()) <= k) cache.resize(k + 1);
  auto& c = cache[k];
  if (!c.empty()) return c;
  c.assign(2 * k + 1, 0.0);
  double b = 1;
  for (int m = 0; m <= k; ++m) {
    c[2 * m] = (m % 2 ? -b : b);
    b = b * (k - m) / (m + 1);
  }
  return c;
}

}  // namespace bump_detail

/// Polynomial step of degree 2k + 1 with k vanishing derivatives at both ends: C^k, gentle derivatives.
template <class S>
S polynomial_step(const S& t, int k) {
  const double v = value_of(t);
  if (v <= 0) return S(0.0);
  if (v >= 1) return S(1.0);
  return bump_detail::polynomial_compose(bump_detail::step_coefficients(k), t);
}

/// One-dimensional plateau: 1 on |s - center| <= inner, 0 on |s - center| >= outer.
/// step = k > 0 swaps the C^∞ transition for polynomial_step of order k.
/// With power k > 0 the profile is instead (1 − (d/outer)²)^k, a C^{k−1} bump with no plateau.
struct Plateau {
  double center = 0;
  double inner = 0.5;
  double outer = 1.0;
  int power = 0;
  int step = 0;

  template <class S>
  S operator()(const S& s) const {
    using std::abs;
    using std::exp;
    if (power > 0) {
      S r = (s - S(center)) * (1.0 / outer);
      if (std::abs(value_of(r)) >= 1) return S(0.0);
      return bump_detail::polynomial_compose(bump_detail::power_coefficients(power), r);
    }
    S d = abs(s - S(center));
    S t = (S(outer) - d) / (outer - inner);
    return step > 0 ? polynomial_step(t, step) : smooth_step(t);
  }
  bool inside_support(double s) const { return std::abs(s - center) < outer; }
  /// Identically 1 on a neighbourhood of s (up to the profile's smoothness at the plateau edge).
  bool on_plateau(double s) const { return power == 0 && std::abs(s - center) <= inner; }
};

/// Product of plateaus, one per coordinate.
struct BoxBump {
  std::vector<Plateau> factors;
  bool zero = false;

  static BoxBump cube(const std::vector<double>& center, double inner, double outer) {
    BoxBump b;
    for (double c : center) b.factors.push_back({c, inner, outer});
    return b;
  }
  /// Box plateau with C^k polynomial transitions; per-axis radii.
  static BoxBump polynomial_box(const std::vector<double>& center, const std::vector<double>& inner,
                                const std::vector<double>& outer, int k) {
    BoxBump b;
    for (std::size_t i = 0; i < center.size(); ++i) b.factors.push_back({center[i], inner[i], outer[i], 0, k});
    return b;
  }
  /// Product of (1 − ((x_i − c_i)/r)²)^k.
  static BoxBump polynomial(const std::vector<double>& center, double radius, int power) {
    BoxBump b;
    for (double c : center) b.factors.push_back({c, 0.0, radius, power});
    return b;
  }
  int dim() const { return static_cast<int>(factors.size()); }
  bool is_zero() const { return zero; }
  static BoxBump zero_bump(int n) {
    BoxBump b = cube(std::vector<double>(n, 0.0), 0.5, 1.0);
    b.zero = true;
    return b;
  }

  template <class S>
  S operator()(const std::vector<S>& x) const {
    if (zero) return S(0.0);
    S r(1.0);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (!factors[i].inside_support(value_of(x[i]))) return S(0.0);
      if (factors[i].on_plateau(value_of(x[i]))) continue;
      r = r * factors[i](x[i]);
    }
    return r;
  }
  bool inside_support(const std::vector<double>& x) const {
    if (zero) return false;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (!factors[i].inside_support(x[i])) return false;
    return true;
  }
  /// True when this bump equals 1 wherever `other` is nonzero.
  bool is_one_on_support_of(const BoxBump& other) const {
    if (other.factors.size() != factors.size()) return false;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto& a = factors[i];
      const auto& b = other.factors[i];
      if (a.power > 0) return false;
      if (b.center - b.outer < a.center - a.inner || b.center + b.outer > a.center + a.inner) return false;
    }
    return true;
  }
};

}  // namespace hypo
