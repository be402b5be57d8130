#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hypo/bump.hpp"
#include "hypo/errors.hpp"
#include "hypo/jet.hpp"
#include "hypo/polynomial.hpp"
#include "hypo/quadrature.hpp"
#include "hypo/vfield.hpp"

namespace hypo {

using Point = std::vector<double>;

/// Closed box U × T in chart coordinates (x, y); x has p entries, y has q.
struct ChartBox {
  std::vector<double> lo, hi;
  int p = 0, q = 0;

  static ChartBox cube(int p, int q, double half_width);
  bool contains(const Point& x, const Point& y) const;
};

/// Strictly positive P(z) exp(E(z)) in z = (x, y).
class PolyExpDensity {
 public:
  PolyExpDensity() = default;
  PolyExpDensity(RationalPolynomial prefactor, RationalPolynomial exponent);
  static PolyExpDensity constant(int nvars, const Rational& c);
  /// "P", "exp(E)" or "P*exp(E)" with P, E in the corpus polynomial syntax.
  static PolyExpDensity parse(const std::string& text, const std::vector<std::string>& variables);

  const RationalPolynomial& prefactor() const { return pre_q_; }
  const RationalPolynomial& exponent() const { return ex_q_; }
  int nvars() const { return pre_q_.nvars(); }

  template <class S>
  S operator()(const std::vector<S>& z) const {
    using std::exp;
    return pre_.evaluate(z) * exp(ex_.evaluate(z));
  }
  template <class S>
  S log_of(const std::vector<S>& z) const {
    using std::log;
    return log(pre_.evaluate(z)) + ex_.evaluate(z);
  }

 private:
  RationalPolynomial pre_q_, ex_q_;
  RealPolynomial pre_, ex_;
};

template <class S>
std::vector<S> join(const std::vector<S>& x, const Point& y) {
  std::vector<S> z(x);
  for (double v : y) z.push_back(S(v));
  return z;
}

/// μ(x,y)|dx||dy| on the chart and the leafwise density α(x,y)|dx|.
struct DensityPair {
  PolyExpDensity mu, alpha;
  int p = 0, q = 0;

  /// Throws PreconditionError unless both densities are positive on a grid of the closed box.
  void check_positive(const ChartBox& box, int samples_per_axis = 9) const;
  /// √(μ(x′)/μ(x)) √(α(x) α(x′)), the chart weight of R_μ.
  double rep_weight(const Point& x, const Point& xp, const Point& y) const;
};

/// δ(x, x′, y) = μ(x,y) α(x′,y) / (μ(x′,y) α(x,y)).
class ModularFunction {
 public:
  explicit ModularFunction(DensityPair d) : d_(std::move(d)) {}
  double operator()(const Point& x, const Point& xp, const Point& y) const;
  /// δ(x,x′)δ(x′,x″) = δ(x,x″) by exact arithmetic on prefactors and exponents.
  bool cocycle_exact() const;
  const DensityPair& densities() const { return d_; }

 private:
  DensityPair d_;
};

/// Checks positivity on the box first.
ModularFunction modular_delta(const DensityPair& d, const ChartBox& box);

using KernelFn = std::function<double(const Point& x, const Point& xp, const Point& y)>;
using FieldFn = std::function<double(const Point& x, const Point& y)>;

/// ∫∫ δ^{±1}(x,x′,y) f(x′,x,y) dν^x(x′) dμ(x,y) against ∫∫ f dν^x dμ.
struct QuasiInvariance {
  double with_delta = 0;
  double with_inverse = 0;
  double reference = 0;
};
QuasiInvariance quasi_invariance(const ModularFunction& delta, const ChartBox& box, const KernelFn& f,
                                 int nodes_per_axis);

/// Quadrature nodes in the leaf coordinates x.
struct LeafRule {
  std::vector<Point> x;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
  /// Tensor composite Gauss over a box.
  static LeafRule gauss(const std::vector<double>& lo, const std::vector<double>& hi, int panels, int n);
  /// Tensor composite Gauss over the support box of a bump.
  static LeafRule on_support(const BoxBump& b, int panels, int n);
  /// Equispaced nodes on [0, 2π)^p, exact for trigonometric polynomials of degree < N.
  static LeafRule periodic(int p, int N);
};

/// k(x, x′, y) = P(x, x′, y) B(x) B′(x′); P has 2p + q variables.
struct ChartKernel {
  RealPolynomial poly;
  BoxBump bump_x, bump_xp;

  template <class S>
  S operator()(const std::vector<S>& x, const Point& xp, const Point& y) const {
    S b = bump_x(x);
    if (value_of(b) == 0) return b;
    const double bp = bump_xp(xp);
    if (bp == 0) return S(0.0);
    std::vector<S> z(x);
    for (double v : xp) z.push_back(S(v));
    for (double v : y) z.push_back(S(v));
    return poly.evaluate(z) * b * bp;
  }
};

/// Throws PreconditionError if the kernel's support is not inside U × U.
void check_in_chart(const ChartKernel& k, const ChartBox& box);

/// R_μ(k) f(x, y) = ∫ k(x,x′,y) √(μ(x′)/μ(x)) √(α(x)α(x′)) f(x′,y) dx′.
template <class K>
double rep_apply(const K& k, const DensityPair& d, const LeafRule& rule, const FieldFn& f, const Point& x,
                 const Point& y) {
  double s = 0;
  for (std::size_t b = 0; b < rule.size(); ++b) {
    const double kv = k(x, rule.x[b], y);
    if (kv == 0) continue;
    s += rule.w[b] * kv * d.rep_weight(x, rule.x[b], y) * f(rule.x[b], y);
  }
  return s;
}

/// Matrix of R_μ(k) on the nodes of a rule: (R u)_a = Σ_b M_ab u_b.
template <class K>
Eigen::MatrixXd rep_matrix(const K& k, const DensityPair& d, const LeafRule& rule, const Point& y) {
  const auto n = static_cast<Eigen::Index>(rule.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      M(a, b) = rule.w[b] * k(rule.x[a], rule.x[b], y) * d.rep_weight(rule.x[a], rule.x[b], y);
  return M;
}

/// Adjoint of a node matrix for the inner product Σ_a w_a μ(x_a, y) u_a v_a.
Eigen::MatrixXd grid_adjoint(const Eigen::MatrixXd& M, const DensityPair& d, const LeafRule& rule, const Point& y);

/// k*(x, x′, y) = k(x′, x, y) for real kernels.
KernelFn involution(KernelFn k);
/// k1 ∗ k2 (x, x′, y) = ∫ k1(x, x″, y) k2(x″, x′, y) α(x″, y) dx″.
KernelFn convolve(KernelFn k1, KernelFn k2, const DensityPair& d, LeafRule rule);

/// Kernel lifts of a tangent frame and the assembled Δ = φ Σ_j L̃_{X_j} L_{X_j} ψ on one chart.
/// Kernel-side operators act on the first slot x through jets; the operator side (X, X*, Δ_H on
/// functions) uses fourth-order central differences, so the two sides are computed independently.
template <int P>
class ChartCalculus {
 public:
  ChartCalculus(DensityPair d, std::vector<PolyVectorField> frame, BoxBump phi = {}, BoxBump psi = {})
      : d_(std::move(d)), phi_(std::move(phi)), psi_(std::move(psi)) {
    if (d_.p != P) throw PreconditionError("chart calculus dimension does not match the densities");
    for (const auto& X : frame) {
      if (X.p() != P || X.q() != d_.q)
        throw PreconditionError("frame not tangent to the plaques: expected fields in the leaf coordinates");
      std::vector<RealPolynomial> a;
      for (int i = 0; i < P; ++i) a.push_back(X.component(i).cast<double>());
      a_.push_back(std::move(a));
    }
  }

  int frame_size() const { return static_cast<int>(a_.size()); }
  const DensityPair& densities() const { return d_; }

  /// l_X = −½ X log(μ/α), so that L_X = r*X + r*l_X.
  double l(int j, const Point& x, const Point& y) const { return coefficients<1>(x, y).l[j].value(); }
  /// c_X = −(1/μ) Σ_i ∂_i(μ X^i), so that X* = −X + c_X in L²(μ).
  double c(int j, const Point& x, const Point& y) const { return coefficients<1>(x, y).c[j].value(); }

  template <class K>
  double L(int j, const K& k, const Point& x, const Point& xp, const Point& y) const {
    using J = Jet<P, 1>;
    const auto co = coefficients<1>(x, y);
    const J g = k(vars<1>(x), xp, y);
    double s = co.l[j].value() * g.value();
    for (int i = 0; i < P; ++i) s += co.X[j][i].value() * g.derivative(i).value();
    return s;
  }

  /// L̃_X = −r*X + r*(c_X − l_X), so that X* R_μ(k) = R_μ(L̃_X k).
  template <class K>
  double Ltilde(int j, const K& k, const Point& x, const Point& xp, const Point& y) const {
    using J = Jet<P, 1>;
    const auto co = coefficients<1>(x, y);
    const J g = k(vars<1>(x), xp, y);
    double s = (co.c[j].value() - co.l[j].value()) * g.value();
    for (int i = 0; i < P; ++i) s -= co.X[j][i].value() * g.derivative(i).value();
    return s;
  }

  template <class K>
  double Delta(const K& k, const Point& x, const Point& xp, const Point& y) const {
    using J = Jet<P, 2>;
    const auto xj = vars<2>(x);
    const auto co = coefficients<2>(x, y);
    const J g = psi_(xj) * k(xj, xp, y);
    double s = 0;
    for (int j = 0; j < frame_size(); ++j) {
      J Lg = co.l[j] * g;
      for (int i = 0; i < P; ++i) Lg += co.X[j][i] * g.derivative(i);
      double v = (co.c[j].value() - co.l[j].value()) * Lg.value();
      for (int i = 0; i < P; ++i) v -= co.X[j][i].value() * Lg.derivative(i).value();
      s += v;
    }
    return phi_(x) * s;
  }

  /// X_j u at x.
  double X(int j, const FieldFn& u, const Point& x, const Point& y, double h) const {
    Stencil st(u, x, y, h);
    double s = 0;
    for (int i = 0; i < P; ++i) s += eval(a_[j][i], x, y) * st.d1(i);
    return s;
  }
  /// X_j* u = −X_j u + c_j u at x.
  double Xstar(int j, const FieldFn& u, const Point& x, const Point& y, double h) const {
    return -X(j, u, x, y, h) + c(j, x, y) * u(x, y);
  }
  /// Δ_H u = φ Σ_j X_j* X_j (ψ u) at x.
  double DeltaH(const FieldFn& u, const Point& x, const Point& y, double h) const {
    FieldFn v = [&](const Point& z, const Point& yy) { return psi_(z) * u(z, yy); };
    Stencil st(v, x, y, h);
    std::array<double, P> grad;
    for (int i = 0; i < P; ++i) grad[i] = st.d1(i);
    double s = 0;
    for (int j = 0; j < frame_size(); ++j) {
      double Xv = 0, XXv = 0;
      for (int k = 0; k < P; ++k) {
        const double ak = eval(a_[j][k], x, y);
        Xv += ak * grad[k];
        for (int i = 0; i < P; ++i) {
          const double ai = eval(a_[j][i], x, y);
          XXv += ai * eval(a_[j][k].derivative(i), x, y) * grad[k] + ai * ak * st.d2(i, k);
        }
      }
      s += -XXv + c(j, x, y) * Xv;
    }
    return phi_(x) * s;
  }

 private:
  DensityPair d_;
  BoxBump phi_, psi_;
  std::vector<std::vector<RealPolynomial>> a_;  // a_[j][i]: X_j = Σ_i a_ji ∂_i

  template <int ORD>
  static std::vector<Jet<P, ORD>> vars(const Point& x) {
    std::vector<Jet<P, ORD>> v(P);
    for (int i = 0; i < P; ++i) v[i] = Jet<P, ORD>::variable(i, x[i]);
    return v;
  }
  static double eval(const RealPolynomial& p, const Point& x, const Point& y) { return p.evaluate(join(x, y)); }

  template <int ORD>
  struct Coefficients {
    std::vector<std::array<Jet<P, ORD>, P>> X;
    std::vector<Jet<P, ORD>> l, c;
  };
  /// Jets at x of a_ji, l_j and c_j; l and c are exact to order ORD − 1.
  template <int ORD>
  Coefficients<ORD> coefficients(const Point& x, const Point& y) const {
    using J = Jet<P, ORD + 1>;
    using JO = Jet<P, ORD>;
    const auto z = join(vars<ORD + 1>(x), y);
    const J log_mu = d_.mu.log_of(z);
    const J h = log_mu - d_.alpha.log_of(z);
    auto truncate = [](const J& a) {
      JO r;
      for (int k = 0; k < JO::size; ++k) r[k] = a[k];
      return r;
    };
    Coefficients<ORD> out;
    for (const auto& a : a_) {
      std::array<JO, P> Xj;
      J l, c;
      for (int i = 0; i < P; ++i) {
        const J ai = a[i].template evaluate<J>(z);
        Xj[i] = truncate(ai);
        l += ai * h.derivative(i);
        c -= ai.derivative(i) + ai * log_mu.derivative(i);
      }
      out.X.push_back(Xj);
      out.l.push_back(truncate(l * -0.5));
      out.c.push_back(truncate(c));
    }
    return out;
  }

  /// Fourth-order central differences with cached evaluations.
  class Stencil {
   public:
    Stencil(const FieldFn& u, const Point& x, const Point& y, double h) : u_(u), x_(x), y_(y), h_(h) {}
    double d1(int i) {
      double s = 0;
      for (int t = 0; t < 4; ++t) s += kD1[t] * at(i, kOff[t], i, 0);
      return s / (12 * h_);
    }
    double d2(int i, int k) {
      if (i == k) {
        double s = -30 * at(i, 0, i, 0);
        for (int t = 0; t < 4; ++t) s += kD2[t] * at(i, kOff[t], i, 0);
        return s / (12 * h_ * h_);
      }
      double s = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) s += kD1[a] * kD1[b] * at(i, kOff[a], k, kOff[b]);
      return s / (144 * h_ * h_);
    }

   private:
    static constexpr int kOff[4] = {-2, -1, 1, 2};
    static constexpr double kD1[4] = {1, -8, 8, -1};
    static constexpr double kD2[4] = {-1, 16, 16, -1};
    const FieldFn& u_;
    const Point& x_;
    const Point& y_;
    double h_;
    std::map<std::array<int, P>, double> cache_;

    double at(int i, int a, int k, int b) {
      std::array<int, P> key{};
      key[i] += a;
      key[k] += b;
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
      Point z = x_;
      for (int m = 0; m < P; ++m) z[m] += key[m] * h_;
      return cache_[key] = u_(z, y_);
    }
  };
};

/// Residuals of one identity across refinement levels.
struct IdentityReport {
  std::string identity;
  std::vector<double> residuals;
  std::vector<double> reductions;  // residual_ℓ / residual_{ℓ+1}
  bool pass = false;

  nlohmann::json to_json() const;
};

void finish_identity_report(IdentityReport& r, double tol, double min_reduction);

/// Setup for the covariance, adjoint, intertwining and self-adjointness checks.
struct ChartIdentityConfig {
  ChartBox box;
  DensityPair densities;
  std::vector<PolyVectorField> frame;
  BoxBump phi, psi;
  int pairs = 10;
  unsigned seed = 42;
  int points_per_pair = 3;
  std::vector<double> fd_steps{0.006, 0.003, 0.0015};  // operator-side difference steps per level
  std::vector<int> rule_points{8, 12, 16};         // Gauss points per axis per level, two panels
  std::vector<int> pairing_points{12, 16, 20};      // Gauss points per axis for ⟨a, b⟩ per level
  double tol = 1e-7;
  double min_reduction = 4;

  /// p = 2, q = 1 chart with polynomial-exponential densities and a parameter-dependent frame.
  static ChartIdentityConfig standard();
};

/// Random polynomial-bump kernel with supports inside the plateau of φ.
ChartKernel random_chart_kernel(std::mt19937& rng, int p, int q);

template <int P>
std::vector<IdentityReport> verify_chart_identities(const ChartIdentityConfig& cfg) {
  cfg.densities.check_positive(cfg.box);
  ChartCalculus<P> calc(cfg.densities, cfg.frame, cfg.phi, cfg.psi);
  const int q = cfg.box.q;
  const auto levels = cfg.fd_steps.size();
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<IdentityReport> reps(4);
  reps[0].identity = "covariance X R(k) = R(L_X k)";
  reps[1].identity = "adjoint X* R(k) = R(L~_X k)";
  reps[2].identity = "intertwining R(Delta k) = Delta_H R(k)";
  reps[3].identity = "self-adjointness <Delta k1, k2> = <k1, Delta k2>";
  for (auto& r : reps) r.residuals.assign(levels, 0.0);
  auto inner_point = [&](const BoxBump& b) {
    Point x;
    for (const auto& f : b.factors) x.push_back(f.center + 0.7 * f.outer * U(rng));
    return x;
  };
  for (int pair = 0; pair < cfg.pairs; ++pair) {
    const ChartKernel k1 = random_chart_kernel(rng, P, q), k2 = random_chart_kernel(rng, P, q);
    check_in_chart(k1, cfg.box);
    check_in_chart(k2, cfg.box);
    std::array<double, P> freq;
    for (auto& v : freq) v = 2 * U(rng);
    const double phase = U(rng), tilt = 0.5 * U(rng);
    FieldFn f = [freq, phase, tilt](const Point& x, const Point& y) {
      double a = phase;
      for (int i = 0; i < P; ++i) a += freq[i] * x[i];
      return std::cos(a) * (1 + (y.empty() ? 0.0 : tilt * y[0]));
    };
    std::vector<Point> xs, ys, xps;
    for (int s = 0; s < cfg.points_per_pair; ++s) {
      xs.push_back(inner_point(k1.bump_x));
      xps.push_back(inner_point(k1.bump_xp));
      Point y;
      for (int t = 0; t < q; ++t) y.push_back(0.8 * U(rng));
      ys.push_back(y);
    }
    // ⟨a, b⟩ is integrated over the common x-support of k1 and k2.
    std::vector<double> lo(P), hi(P);
    for (int i = 0; i < P; ++i) {
      const auto &a = k1.bump_x.factors[i], &b = k2.bump_x.factors[i];
      lo[i] = std::max(a.center - a.outer, b.center - b.outer);
      hi[i] = std::min(a.center + a.outer, b.center + b.outer);
    }
    for (std::size_t lv = 0; lv < levels; ++lv) {
      const double h = cfg.fd_steps[lv];
      const LeafRule rule = LeafRule::on_support(k1.bump_xp, 2, cfg.rule_points[lv]);
      FieldFn u = [&](const Point& x, const Point& y) { return rep_apply(k1, cfg.densities, rule, f, x, y); };
      std::array<double, 4> diff{}, scale{};
      for (int s = 0; s < cfg.points_per_pair; ++s) {
        const Point &x = xs[s], &y = ys[s];
        for (int j = 0; j < calc.frame_size(); ++j) {
          auto Lk = [&](const Point& a, const Point& b, const Point& yy) { return calc.L(j, k1, a, b, yy); };
          auto Ltk = [&](const Point& a, const Point& b, const Point& yy) { return calc.Ltilde(j, k1, a, b, yy); };
          const double r0 = rep_apply(Lk, cfg.densities, rule, f, x, y);
          const double r1 = rep_apply(Ltk, cfg.densities, rule, f, x, y);
          diff[0] = std::max(diff[0], std::abs(calc.X(j, u, x, y, h) - r0));
          diff[1] = std::max(diff[1], std::abs(calc.Xstar(j, u, x, y, h) - r1));
          scale[0] = std::max(scale[0], std::abs(r0));
          scale[1] = std::max(scale[1], std::abs(r1));
        }
        auto Dk = [&](const Point& a, const Point& b, const Point& yy) { return calc.Delta(k1, a, b, yy); };
        const double r2 = rep_apply(Dk, cfg.densities, rule, f, x, y);
        diff[2] = std::max(diff[2], std::abs(calc.DeltaH(u, x, y, h) - r2));
        scale[2] = std::max(scale[2], std::abs(r2));
        if (hi[0] > lo[0]) {
          const LeafRule pr = LeafRule::gauss(lo, hi, 1, cfg.pairing_points[lv]);
          const Point& xp = xps[s];
          double lhs = 0, rhs = 0;
          for (std::size_t n = 0; n < pr.size(); ++n) {
            const Point& z = pr.x[n];
            const double al = cfg.densities.alpha(join(z, y));
            lhs += pr.w[n] * al * calc.Delta(k1, z, xp, y) * k2(z, xp, y);
            rhs += pr.w[n] * al * k1(z, xp, y) * calc.Delta(k2, z, xp, y);
          }
          diff[3] = std::max(diff[3], std::abs(lhs - rhs));
          scale[3] = std::max(scale[3], std::max(std::abs(lhs), std::abs(rhs)));
        }
      }
      for (int t = 0; t < 4; ++t)
        if (scale[t] > 0) reps[t].residuals[lv] = std::max(reps[t].residuals[lv], diff[t] / scale[t]);
    }
  }
  for (auto& r : reps) finish_identity_report(r, cfg.tol, cfg.min_reduction);
  return reps;
}

}  // namespace hypo
