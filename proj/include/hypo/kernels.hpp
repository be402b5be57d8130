#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "hypo/bump.hpp"
#include "hypo/errors.hpp"
#include "hypo/jet.hpp"
#include "hypo/nilapprox.hpp"
#include "hypo/quadrature.hpp"

namespace hypo {

/// A function on a graded group in exponential coordinates, homogeneous of the given degree.
struct GroupKernel {
  std::string name;
  std::vector<int> weights;
  double degree = 0;  // λ − Q for a kernel of type λ
  std::function<double(const std::vector<double>&)> eval;

  double operator()(const std::vector<double>& u) const { return eval(u); }
  int homogeneous_dimension() const;
};

/// Green kernel |u|/2 of d²/du² on the line.
GroupKernel line_green_kernel();

/// Fundamental solution c·((z1² + z2²)² + a z3²)^{-1/2} of L0 = Y1² + Y2² on G_{2,2}.
class FundamentalSolution {
 public:
  /// Fixes a by symbolic annihilation of L0 and c by the flux normalization.
  static FundamentalSolution build(double flux_tol = 1e-11);

  const FreeNilpotentAlgebra& algebra() const { return alg_; }
  const Rational& a_exact() const { return a_; }
  double a() const { return a_.get_d(); }
  double c() const { return c_; }

  template <class S>
  S operator()(const std::vector<S>& z) const {
    using std::pow;
    S r2 = z[0] * z[0] + z[1] * z[1];
    return c_ * pow(r2 * r2 + a() * z[2] * z[2], -0.5);
  }
  GroupKernel kernel() const;

  /// ⟨L0 K0, χ_r⟩ = ∫ K0 L0 χ_r for a smoothed shell cutoff at gauge radius r; equals 1 when normalized.
  double flux(double radius) const;
  /// |L0 K0(z)| and the largest |∂²K0(z)|.
  std::pair<double, double> l0_residual(const std::vector<double>& z) const;

  nlohmann::json to_json() const;

 private:
  FreeNilpotentAlgebra alg_{2, 2};
  Rational a_;
  double c_ = 1;
  double tol_ = 1e-11;
  double raw_flux(double radius) const;
};

/// ∫_{a<|u|<b} k(u) du on cube-polar shells; a singular-integral kernel must give ~0.
double shell_integral(const GroupKernel& k, double a, double b, const PolarRuleSpec& spec = {});

RationalPolynomial polynomial_determinant(const std::vector<std::vector<RationalPolynomial>>& m);

/// Polynomial with compact term storage for repeated numeric evaluation.
struct FlatPoly {
  std::vector<double> coef;
  std::vector<int> exps;  // nv entries per term
  int nv = 0;

  bool empty() const { return coef.empty(); }
  double eval(const double* pw, int stride) const {
    double s = 0;
    const int* e = exps.data();
    for (std::size_t t = 0; t < coef.size(); ++t, e += nv) {
      double v = coef[t];
      for (int i = 0; i < nv; ++i)
        if (e[i]) v *= pw[i * stride + e[i]];
      s += v;
    }
    return s;
  }
};

/// Polynomial data of a parametrix chart at a fixed parameter y.
struct ParametrixModel {
  int P = 0;
  int d = 0;
  std::vector<RealPolynomial> flow;  // Φ^i in (x, u)
  RealPolynomial flow_det;           // det D_uΦ in (x, u)
  RealPolynomial frame_det;          // det of the frame matrix in x
  std::vector<std::vector<RealPolynomial>> field_coeffs;  // [j][i], X_j = Σ_i a_ij ∂_i, in x
  int max_u_degree = 0;

  explicit ParametrixModel(const ThetaChart& chart);
};

/// Coefficients c_k(u) of ε^{α_k} in p(x0 + ε, u).
template <int NV, int ORD>
std::vector<FlatPoly> expand_in_x(const RealPolynomial& p, const std::vector<double>& x0, int P) {
  using J = Jet<NV, ORD>;
  std::vector<std::map<std::vector<int>, double>> acc(J::size);
  for (const auto& [e, c] : p.terms()) {
    std::vector<int> ue(e.begin() + P, e.begin() + 2 * P);
    for (int k = 0; k < J::size; ++k) {
      const auto& al = J::exponent(k);
      double v = c;
      for (int i = 0; i < P && v != 0; ++i) {
        if (al[i] > e[i]) {
          v = 0;
          break;
        }
        double b = 1;
        for (int t = 0; t < al[i]; ++t) b = b * (e[i] - t) / (t + 1);
        v *= b * std::pow(x0[i], e[i] - al[i]);
      }
      if (v != 0) acc[k][ue] += v;
    }
  }
  std::vector<FlatPoly> out(J::size);
  for (int k = 0; k < J::size; ++k) {
    out[k].nv = P;
    for (const auto& [ue, c] : acc[k]) {
      if (c == 0) continue;
      out[k].coef.push_back(c);
      out[k].exps.insert(out[k].exps.end(), ue.begin(), ue.end());
    }
  }
  return out;
}

struct ParametrixConfig {
  BoxBump psi;
  BoxBump psi_prime;
  PolarRuleSpec core_rule{3, 2, 8, true, 0};  // around u = 0, scaled to the core radius
  int n = 8;                                   // Gauss points per panel away from u = 0
  double panel_phase = 4;                      // panel length times local angular frequency
  int support_samples = 5;                     // per axis, for the u-preimage of the source box
  double distance_ratio = 3;                   // leaf length over homogeneous distance from u = 0
};

/// Where an input lives and how fast it oscillates: angular frequency per x-coordinate.
struct SourceHint {
  BoxBump box;
  std::vector<double> frequency;
};

/// Frequency scale of a bump: a few radians across each transition.
inline std::vector<double> bump_frequency(const BoxBump& b) {
  std::vector<double> f;
  for (const auto& p : b.factors) f.push_back(p.power > 0 || p.inner <= 0 ? 4.0 / p.outer : 3.0 / (p.outer - p.inner));
  return f;
}

/// Hint for the product of an input with a cutoff: the boxes intersect, the frequencies add.
/// An input whose plateau covers the cutoff's support along an axis drops its own bump scale there.
inline SourceHint restrict_hint(const SourceHint& h, const BoxBump& cutoff) {
  SourceHint r = h;
  const auto cf = bump_frequency(cutoff);
  const auto hf = bump_frequency(h.box);
  for (std::size_t i = 0; i < r.box.factors.size() && i < cutoff.factors.size(); ++i) {
    const auto& a = h.box.factors[i];
    const auto& b = cutoff.factors[i];
    const double lo = std::max(a.center - a.outer, b.center - b.outer);
    const double hi = std::min(a.center + a.outer, b.center + b.outer);
    if (hi <= lo) {
      r.box.zero = true;
      return r;
    }
    r.box.factors[i] = {(lo + hi) / 2, 0.0, (hi - lo) / 2, 1};
    const bool covered = a.power == 0 && a.inner > 0 && a.center - a.inner <= b.center - b.outer &&
                         b.center + b.outer <= a.center + a.inner;
    if (covered) r.frequency[i] = std::max(0.0, r.frequency[i] - hf[i]);
    r.frequency[i] += cf[i];
  }
  return r;
}

/// Lower-order part of Δ = −Σ X_j² + Σ a_j X_j + b, polynomials in x.
struct LowerOrderTerms {
  std::vector<RealPolynomial> a;
  RealPolynomial b{0};
};

struct ResidualSample {
  double parametrix_value = 0;         // P̃ f(x) for the parametrix of Σ X_j²
  double residual = 0;                 // (ψ f − Δ P f)(x) with P = −P̃
  std::vector<double> field_residual;  // X_j applied to the residual
};

/// Quadrature nodes in u with the kernel folded into the weights.
struct LocalRule {
  std::vector<double> u;  // NV entries per node
  std::vector<double> kw;
  std::size_t size() const { return kw.size(); }
};

/// Parametrix ψ(x) K(Θ(x1, x)) ψ′(x1) on a chart of dimension NV.
/// Integrals are taken in the canonical coordinates u = Θ(x, x1), so x-derivatives never reach K.
/// Away from u = 0 the rule is a composite Gauss grid on the bounding box of Θ(x, supp f), with
/// panels sized by the local frequency; a cube-polar rule covers a small core around u = 0.
template <int NV>
class Parametrix {
 public:
  Parametrix(const ThetaChart& chart, GroupKernel K, ParametrixConfig cfg)
      : chart_(&chart), model_(chart), K_(std::move(K)), cfg_(std::move(cfg)) {
    if (chart.dim() != NV) throw PreconditionError("parametrix dimension does not match the chart");
    if (!cfg_.psi.is_zero() && !cfg_.psi_prime.is_one_on_support_of(cfg_.psi))
      throw PreconditionError("ψ′ must equal 1 on the support of ψ");
    weights_ = chart.algebra().weights();
    for (auto& n : cube_polar_rule(weights_, 1.0, cfg_.core_rule)) {
      std::vector<double> mu = n.u;
      for (auto& v : mu) v = -v;
      const double kw = K_(mu) * n.weight;
      if (kw == 0) continue;
      core_u_.insert(core_u_.end(), n.u.begin(), n.u.end());
      core_kw_.push_back(kw);
    }
    stride_ = model_.max_u_degree + 1;
    default_hint_ = {cfg_.psi_prime, std::vector<double>(NV, 0.0)};
  }

  const ThetaChart& chart() const { return *chart_; }
  const ParametrixModel& model() const { return model_; }
  const ParametrixConfig& config() const { return cfg_; }

  /// ψ(x) K(Θ(x1, x)) ψ′(x1), with Θ by Newton.
  double kernel(const std::vector<double>& x, const std::vector<double>& x1) const {
    const double a = cfg_.psi(x), b = cfg_.psi_prime(x1);
    if (a == 0 || b == 0) return 0;
    return a * K_(chart_->theta(x1, x)) * b;
  }

  /// Rule for inputs described by `hint`, at the point x.
  LocalRule local_rule(const std::vector<double>& x, const SourceHint& hint) const {
    LocalRule out;
    if (hint.box.is_zero()) return out;
    const auto flow = flow_at(x);
    auto phi = [&](const std::vector<double>& u) {
      std::vector<double> pw(NV * stride_);
      powers(u.data(), pw);
      std::vector<double> r(NV);
      for (int i = 0; i < NV; ++i) r[i] = flow[i].eval(pw.data(), stride_);
      return r;
    };
    // Bounding box of Θ(x, ·) over the source box.
    std::array<double, NV> lo, hi;
    lo.fill(1e300);
    hi.fill(-1e300);
    const int m = cfg_.support_samples;
    std::array<int, NV> idx{};
    while (true) {
      std::vector<double> x1(NV);
      for (int i = 0; i < NV; ++i) {
        const auto& f = hint.box.factors[i];
        x1[i] = f.center + f.outer * (2.0 * idx[i] / (m - 1) - 1);
      }
      auto u = chart_->theta(x, x1);
      for (int i = 0; i < NV; ++i) {
        lo[i] = std::min(lo[i], u[i]);
        hi[i] = std::max(hi[i], u[i]);
      }
      int k = 0;
      while (k < NV && ++idx[k] == m) idx[k++] = 0;
      if (k == NV) break;
    }
    for (int i = 0; i < NV; ++i) {
      const double pad = 0.05 * (hi[i] - lo[i]) + 1e-9;
      lo[i] -= pad;
      hi[i] += pad;
    }
    // Local angular frequency along each u-axis, from |∂Φ/∂u| sampled on the box.
    std::array<double, NV> freq{};
    {
      std::array<int, NV> s{};
      const double h = 1e-6;
      while (true) {
        std::vector<double> u(NV);
        for (int i = 0; i < NV; ++i) u[i] = lo[i] + (hi[i] - lo[i]) * s[i] / 2.0;
        const auto p0 = phi(u);
        for (int i = 0; i < NV; ++i) {
          auto v = u;
          v[i] += h;
          const auto p1 = phi(v);
          double w = 0;
          for (int k = 0; k < NV; ++k) w += hint.frequency[k] * std::abs(p1[k] - p0[k]) / h;
          freq[i] = std::max(freq[i], w);
        }
        int k = 0;
        while (k < NV && ++s[k] == 3) s[k++] = 0;
        if (k == NV) break;
      }
    }
    std::array<double, NV> panel;
    for (int i = 0; i < NV; ++i) panel[i] = cfg_.panel_phase / std::max(freq[i], 1e-12);
    // Core cube |u_i| <= ρ0^{w_i}, kept inside one panel in every direction.
    double rho0 = 1e300;
    for (int i = 0; i < NV; ++i) rho0 = std::min(rho0, std::pow(0.5 * panel[i], 1.0 / weights_[i]));
    std::array<double, NV> core;
    bool touches = true;
    for (int i = 0; i < NV; ++i) {
      core[i] = std::pow(rho0, weights_[i]);
      if (lo[i] > core[i] || hi[i] < -core[i]) touches = false;
    }
    if (touches) {
      double scale = 1;
      for (int w : weights_) scale *= std::pow(rho0, w);
      scale *= std::pow(rho0, K_.degree);
      for (std::size_t n = 0; n < core_kw_.size(); ++n) {
        for (int i = 0; i < NV; ++i) out.u.push_back(core_u_[n * NV + i] * core[i]);
        out.kw.push_back(core_kw_[n] * scale);
      }
      for (int i = 0; i < NV; ++i) {
        lo[i] = std::min(lo[i], -core[i]);
        hi[i] = std::max(hi[i], core[i]);
      }
    }
    // Box minus core, refined until every leaf is at most a panel long and at most
    // `distance_ratio` times its homogeneous distance from u = 0 along each axis.
    using Box = std::array<std::array<double, 2>, NV>;
    std::vector<double> mu(NV), u(NV);
    auto emit = [&](const Box& B, const std::array<int, NV>& parts) {
      std::array<QuadRule, NV> rules;
      for (int i = 0; i < NV; ++i) rules[i] = composite_gauss(B[i][0], B[i][1], parts[i], cfg_.n);
      std::array<int, NV> q{};
      while (true) {
        double w = 1;
        for (int i = 0; i < NV; ++i) {
          u[i] = rules[i].nodes[q[i]];
          w *= rules[i].weights[q[i]];
          mu[i] = -u[i];
        }
        if (hint.box.inside_support(phi(u))) {
          const double kw = K_(mu) * w;
          if (kw != 0) {
            out.u.insert(out.u.end(), u.begin(), u.end());
            out.kw.push_back(kw);
          }
        }
        int k = 0;
        while (k < NV && ++q[k] == static_cast<int>(rules[k].nodes.size())) q[k++] = 0;
        if (k == NV) break;
      }
    };
    auto refine = [&](auto&& self, const Box& B, int depth) -> void {
      double D = 0;
      for (int i = 0; i < NV; ++i) {
        const double d = B[i][0] > 0 ? B[i][0] : (B[i][1] < 0 ? -B[i][1] : 0);
        D = std::max(D, std::pow(d, 1.0 / weights_[i]));
      }
      std::array<int, NV> parts;
      std::array<bool, NV> halve{};
      bool bisect = false;
      for (int i = 0; i < NV; ++i) {
        const double len = B[i][1] - B[i][0];
        halve[i] = depth < 40 && len > cfg_.distance_ratio * std::pow(D, weights_[i]);
        bisect = bisect || halve[i];
        parts[i] = std::max(1, static_cast<int>(std::ceil(len / panel[i] - 1e-9)));
      }
      if (!bisect) {
        emit(B, parts);
        return;
      }
      std::array<int, NV> c{};
      while (true) {
        Box child = B;
        for (int i = 0; i < NV; ++i)
          if (halve[i]) child[i][c[i] == 0 ? 1 : 0] = 0.5 * (B[i][0] + B[i][1]);
        self(self, child, depth + 1);
        int k = 0;
        while (k < NV && (!halve[k] || ++c[k] == 2)) c[k++] = 0;
        if (k == NV) break;
      }
    };
    std::array<int, NV> piece{};
    while (true) {
      Box B;
      bool all_core = true;
      bool empty = false;
      for (int i = 0; i < NV; ++i) {
        if (!touches) {
          B[i] = {lo[i], hi[i]};
          all_core = false;
          continue;
        }
        const double cuts[4] = {lo[i], -core[i], core[i], hi[i]};
        B[i] = {cuts[piece[i]], cuts[piece[i] + 1]};
        if (piece[i] != 1) all_core = false;
        if (B[i][1] - B[i][0] <= 0) empty = true;
      }
      if (!all_core && !empty) refine(refine, B, 0);
      if (!touches) break;
      int k = 0;
      while (k < NV && ++piece[k] == 3) piece[k++] = 0;
      if (k == NV) break;
    }
    return out;
  }

  /// Taylor jet at x of I(x) = ∫ K(Θ(x1, x)) ψ′(x1) f(x1) dv(x1).
  template <int ORD, class F>
  Jet<NV, ORD> integral_jet(const F& f, const std::vector<double>& x) const {
    return integral_jet<ORD>(f, x, local_rule(x, restrict_hint(hint_of(f), cfg_.psi_prime)));
  }

  template <int ORD, class F>
  Jet<NV, ORD> integral_jet(const F& f, const std::vector<double>& x, const LocalRule& rule) const {
    using J = Jet<NV, ORD>;
    std::vector<std::vector<FlatPoly>> flow;
    for (const auto& p : model_.flow) flow.push_back(expand_in_x<NV, ORD>(p, x, NV));
    const bool det_const = model_.flow_det.is_constant();
    std::vector<FlatPoly> det;
    if (!det_const) det = expand_in_x<NV, ORD>(model_.flow_det, x, NV);
    const double det0 = det_const ? constant_of(model_.flow_det) : 0;
    const bool frame_const = model_.frame_det.is_constant();
    const double frame0 = frame_const ? constant_of(model_.frame_det) : 0;

    std::vector<double> pw(NV * stride_);
    std::vector<J> phi(NV);
    std::vector<double> phi0(NV);
    J acc;
    for (std::size_t n = 0; n < rule.size(); ++n) {
      powers(&rule.u[n * NV], pw);
      for (int i = 0; i < NV; ++i) phi0[i] = flow[i][0].eval(pw.data(), stride_);
      if (!cfg_.psi_prime.inside_support(phi0)) continue;
      for (int i = 0; i < NV; ++i) {
        phi[i] = J(phi0[i]);
        for (int k = 1; k < J::size; ++k)
          if (!flow[i][k].empty()) phi[i][k] = flow[i][k].eval(pw.data(), stride_);
      }
      J g = f(phi);
      if (g.value() == 0 && is_flat(g)) continue;
      g = g * cfg_.psi_prime(phi);
      if (det_const) {
        g *= std::abs(det0);
      } else {
        J jac;
        for (int k = 0; k < J::size; ++k)
          if (!det[k].empty()) jac[k] = det[k].eval(pw.data(), stride_);
        if (jac.value() < 0) jac = -jac;
        g = g * jac;
      }
      if (frame_const) {
        g = g * (1.0 / std::abs(frame0));
      } else {
        J fd = model_.frame_det.evaluate<J>(phi);
        if (fd.value() < 0) fd = -fd;
        g = g / fd;
      }
      acc += g * rule.kw[n];
    }
    return acc;
  }

  /// P̃ f(x) = ψ(x) I(x).
  template <class F>
  double apply(const F& f, const std::vector<double>& x) const {
    if (cfg_.psi.is_zero()) return 0;
    const double p = cfg_.psi(x);
    if (p == 0) return 0;
    return p * integral_jet<0>(f, x).value();
  }

  /// Residual ψ f − Δ P f with P = −P̃ and its derivatives along the fields, at x.
  template <class F>
  ResidualSample residual(const F& f, const std::vector<double>& x, const LowerOrderTerms& lot = {}) const {
    using J = Jet<NV, 3>;
    ResidualSample s;
    s.field_residual.assign(model_.d, 0.0);
    std::vector<J> xj(NV);
    for (int i = 0; i < NV; ++i) xj[i] = J::variable(i, x[i]);
    J psi = cfg_.psi(xj);
    if (cfg_.psi.is_zero() || (psi.value() == 0 && is_flat(psi))) return s;
    J I = integral_jet<3>(f, x);
    J Pf = psi * I;
    std::vector<std::vector<J>> a(model_.d, std::vector<J>(NV));
    for (int j = 0; j < model_.d; ++j)
      for (int i = 0; i < NV; ++i) a[j][i] = model_.field_coeffs[j][i].evaluate<J>(xj);
    auto X = [&](int j, const J& g) {
      J r;
      for (int i = 0; i < NV; ++i)
        if (a[j][i].value() != 0 || !is_flat(a[j][i])) r += a[j][i] * g.derivative(i);
      return r;
    };
    J R = psi * f(xj);
    for (int j = 0; j < model_.d; ++j) R -= X(j, X(j, Pf));
    for (std::size_t j = 0; j < lot.a.size(); ++j)
      if (!lot.a[j].is_zero()) R += lot.a[j].evaluate<J>(xj) * X(static_cast<int>(j), Pf);
    if (!lot.b.is_zero()) R += lot.b.evaluate<J>(xj) * Pf;
    s.parametrix_value = Pf.value();
    s.residual = R.value();
    for (int j = 0; j < model_.d; ++j) s.field_residual[j] = X(j, R).value();
    return s;
  }

  /// The hint an input provides, or the ψ′ box with no frequency of its own.
  template <class F>
  SourceHint hint_of(const F& f) const {
    if constexpr (requires { f.hint(); }) {
      return f.hint();
    } else {
      return default_hint_;
    }
  }

 private:
  const ThetaChart* chart_;
  ParametrixModel model_;
  GroupKernel K_;
  ParametrixConfig cfg_;
  std::vector<int> weights_;
  int stride_ = 1;
  std::vector<double> core_u_;
  std::vector<double> core_kw_;
  SourceHint default_hint_;

  void powers(const double* u, std::vector<double>& pw) const {
    for (int i = 0; i < NV; ++i) {
      pw[i * stride_] = 1;
      for (int e = 1; e < stride_; ++e) pw[i * stride_ + e] = pw[i * stride_ + e - 1] * u[i];
    }
  }
  std::vector<FlatPoly> flow_at(const std::vector<double>& x) const {
    std::vector<FlatPoly> r;
    for (const auto& p : model_.flow) r.push_back(expand_in_x<NV, 0>(p, x, NV)[0]);
    return r;
  }
  template <class J>
  static bool is_flat(const J& g) {
    for (int k = 0; k < J::size; ++k)
      if (g[k] != 0) return false;
    return true;
  }
  static double constant_of(const RealPolynomial& p) {
    return p.terms().empty() ? 0.0 : p.terms().begin()->second;
  }
};

/// f(x) = bump(x)·(cos(ω x_dir) − c0 − c1 x_dir); the c's are zero unless moment-free.
struct OscillatoryTest {
  BoxBump bump;
  double omega = 1;
  int direction = 0;
  double c0 = 0, c1 = 0;

  /// One-dimensional variant with ∫ f = ∫ x f = 0 (bump must be one-dimensional).
  static OscillatoryTest moment_free(const BoxBump& bump, double omega);

  template <class S>
  S operator()(const std::vector<S>& x) const {
    using std::cos;
    S b = bump(x);
    if (value_of(b) == 0) return b;
    return b * (cos(x[direction] * omega) - S(c0) - x[direction] * c1);
  }
  SourceHint hint() const {
    auto f = bump_frequency(bump);
    f[direction] += std::abs(omega);
    return {bump, f};
  }
};

/// Tensor Gauss–Legendre grid over a bump's support box.
struct GridPoint {
  std::vector<double> x;
  double weight;
};
std::vector<GridPoint> tensor_grid(const BoxBump& box, const std::vector<int>& nodes_per_axis);

struct ResidualCheckConfig {
  std::vector<double> frequencies{2, 4, 8, 16};
  std::vector<int> residual_grid;  // Gauss points per axis on supp ψ
  std::vector<int> norm_grid;      // Gauss points per axis on supp f; empty sizes it by frequency
  double max_residual_growth = 1.2;
  double min_gradient_growth = 1.8;
  double flat_tol = -1;  // >= 0: pass means every r_ω <= flat_tol instead of the growth test
};

struct ResidualReport {
  std::string system_id;
  std::vector<double> y;
  std::vector<double> frequencies;
  std::vector<double> ratios;           // r_ω = ‖X(ψ f − Δ P f)‖ / ‖f‖
  std::vector<double> gradient_ratios;  // ‖X f‖ / ‖f‖
  std::vector<double> residual_growth;  // r_{2ω} / r_ω
  std::vector<double> gradient_growth;
  bool pass = false;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

void finish_residual_report(ResidualReport& rep, const ResidualCheckConfig& cfg);

/// Horizontal L² norms ‖f‖ and (Σ_j ‖X_j f‖²)^{1/2} on a grid.
template <int NV, class F>
std::pair<double, double> horizontal_norms(const ParametrixModel& model, const F& f,
                                           const std::vector<GridPoint>& grid) {
  using J = Jet<NV, 1>;
  double n0 = 0, n1 = 0;
  std::vector<J> xj(NV);
  for (const auto& g : grid) {
    for (int i = 0; i < NV; ++i) xj[i] = J::variable(i, g.x[i]);
    J v = f(xj);
    n0 += g.weight * v.value() * v.value();
    for (int j = 0; j < model.d; ++j) {
      double s = 0;
      for (int i = 0; i < NV; ++i) s += model.field_coeffs[j][i].evaluate(g.x) * v[1 + i];
      n1 += g.weight * s * s;
    }
  }
  return {std::sqrt(n0), std::sqrt(n1)};
}

/// r_ω for f_ω = make_f(ω): the computable shadow of "smoothing of order 1".
template <int NV, class MakeF>
ResidualReport residual_smoothing_check(const Parametrix<NV>& P, const MakeF& make_f, const ResidualCheckConfig& cfg,
                                        const std::string& system_id, const LowerOrderTerms& lot = {}) {
  ResidualReport rep;
  rep.system_id = system_id;
  rep.y = P.chart().y();
  rep.frequencies = cfg.frequencies;
  auto rgrid = tensor_grid(P.config().psi, cfg.residual_grid.empty() ? std::vector<int>(NV, 8) : cfg.residual_grid);
  for (double w : cfg.frequencies) {
    auto f = make_f(w);
    std::vector<int> nn = cfg.norm_grid;
    if (nn.empty()) {  // about two points per radian, at least 32 per axis
      const auto h = P.hint_of(f);
      for (int i = 0; i < NV; ++i)
        nn.push_back(std::max(32, static_cast<int>(std::ceil(4 * h.frequency[i] * f.bump.factors[i].outer))));
    }
    auto ngrid = tensor_grid(f.bump, nn);
    auto [nf, ng] = horizontal_norms<NV>(P.model(), f, ngrid);
    double acc = 0;
    for (const auto& g : rgrid) {
      auto s = P.residual(f, g.x, lot);
      for (double v : s.field_residual) acc += g.weight * v * v;
    }
    rep.ratios.push_back(nf > 0 ? std::sqrt(acc) / nf : 0);
    rep.gradient_ratios.push_back(nf > 0 ? ng / nf : 0);
  }
  finish_residual_report(rep, cfg);
  return rep;
}

/// Explicit one-dimensional parametrix for d²/dx² with kernel ψ(x)|x − s|/2 ψ′(s), and its
/// improvement P_{l+1} = P_l + P_b R_l, where P_b uses a wider cutoff that is 1 on supp ψ.
class LineParametrix {
 public:
  LineParametrix(Plateau psi, Plateau psi_prime, int panels = 24, int n = 16);

  /// I(x) = ∫ |x − s|/2 h(s) ds and I′(x), for h given at quadrature nodes of the support.
  std::pair<double, double> potential(const std::function<double(double)>& h, double x) const;
  /// P f(x) = ψ(x) I(x), h = ψ′ f.
  double apply(const std::function<double(double)>& f, double x) const;
  /// R f = ψ f − (P f)″ = −ψ″ I − 2 ψ′ I′.
  double residual(const std::function<double(double)>& f, double x) const;

  const Plateau& psi() const { return psi_; }
  const Plateau& psi_prime() const { return psi1_; }

 private:
  Plateau psi_, psi1_;
  int panels_, n_;
};

/// R_l f for the l-times improved line parametrix; levels[k] is the cutoff pair of stage k.
double improved_line_residual(const std::vector<LineParametrix>& levels, const std::function<double(double)>& f,
                              double x);

/// E f(x, x′) = f(x).
template <class F>
auto extend_E(F f, int p) {
  return [f, p](const std::vector<double>& xt) { return f(std::vector<double>(xt.begin(), xt.begin() + p)); };
}

/// R′ f(x) = ∫ λ(x, x′) f(x, x′) dx′ over a box in x′; R is the case λ = ζ(x′) with ∫ ζ = 1.
class Restriction {
 public:
  /// ζ scaled to unit mass.
  static Restriction normalized(const BoxBump& zeta, int nodes_per_axis = 48);
  /// ζ as given; throws if its mass differs from 1 by more than 1e-12.
  Restriction(const BoxBump& zeta, double scale, int nodes_per_axis = 48);

  double scale() const { return scale_; }
  const BoxBump& zeta() const { return zeta_; }
  const std::vector<GridPoint>& grid() const { return grid_; }

  double operator()(const std::function<double(const std::vector<double>&)>& F, const std::vector<double>& x) const;

 private:
  Restriction() = default;
  BoxBump zeta_;
  double scale_ = 1;
  std::vector<GridPoint> grid_;
};

/// Both sides of X_j R′ f = R′ X̃_j f + R′_j f at x, with R′_j f = ∫ (X_j λ + Σ_ℓ ∂_ℓ(u_jℓ λ)) f dx′.
struct CommutatorCheck {
  double lhs = 0;        // X_j R′ f
  double r_prime_xj = 0; // R′ X̃_j f
  double defect = 0;     // R′_j f
  double residual() const { return std::abs(lhs - r_prime_xj - defect); }
};

/// NT = p + k; lifted field j has x-components a_ij and x′-components u_jl.
template <int NT, class Lambda, class F>
CommutatorCheck commutator_defect(const std::vector<PolyVectorField>& lifted, int p, int j, const Lambda& lambda,
                                  const F& f, const std::vector<double>& x, const std::vector<GridPoint>& xprime_grid) {
  using J = Jet<NT, 1>;
  const int k = NT - p;
  CommutatorCheck out;
  std::vector<RealPolynomial> comp;
  for (int i = 0; i < NT; ++i) comp.push_back(lifted[j].component(i).cast<double>());
  for (const auto& g : xprime_grid) {
    std::vector<double> pt = x;
    pt.insert(pt.end(), g.x.begin(), g.x.end());
    std::vector<J> v(NT);
    for (int i = 0; i < NT; ++i) v[i] = J::variable(i, pt[i]);
    J lam = lambda(v), fv = f(v);
    J lf = lam * fv;
    double xpart_lf = 0, xpart_f = 0, xpart_l = 0, xprime_f = 0, div = 0;
    for (int i = 0; i < p; ++i) {
      const double a = comp[i].evaluate(pt);
      xpart_lf += a * lf[1 + i];
      xpart_f += a * fv[1 + i];
      xpart_l += a * lam[1 + i];
    }
    for (int l = 0; l < k; ++l) {
      J ul = comp[p + l].evaluate<J>(v);
      xprime_f += ul.value() * fv[1 + p + l];
      J ulam = ul * lam;
      div += ulam[1 + p + l];
    }
    out.lhs += g.weight * xpart_lf;
    out.r_prime_xj += g.weight * lam.value() * (xpart_f + xprime_f);
    out.defect += g.weight * (xpart_l + div) * fv.value();
  }
  return out;
}

/// Kernel of R P̃ E on U × U: ∫∫ ζ(x′) K̃((x, x′), (x1, x1′)) ρ_v(x1, x1′) dx′ dx1′.
template <int NV>
double pushforward_kernel(const Parametrix<NV>& P, const Restriction& R, int p, const std::vector<double>& x,
                          const std::vector<double>& x1, const std::vector<GridPoint>& x1prime_grid) {
  double s = 0;
  for (const auto& g : R.grid()) {
    std::vector<double> xt = x;
    xt.insert(xt.end(), g.x.begin(), g.x.end());
    const double z = R.scale() * R.zeta()(g.x);
    if (z == 0) continue;
    for (const auto& h : x1prime_grid) {
      std::vector<double> x1t = x1;
      x1t.insert(x1t.end(), h.x.begin(), h.x.end());
      const double kv = P.kernel(xt, x1t);
      if (kv == 0) continue;
      s += g.weight * h.weight * z * kv * P.chart().volume_density(x1t);
    }
  }
  (void)p;
  return s;
}

/// Coefficients a_ij of X_j = Σ_i a_ij ∂_i at a fixed parameter value.
std::vector<std::vector<RealPolynomial>> field_coefficients(const std::vector<PolyVectorField>& fields,
                                                            const std::vector<double>& y);

/// Σ_{|I| <= k} ‖X_I f‖ on a grid, and the classical Σ_{|α| <= k} ‖∂^α f‖² (square root).
template <int NV, int ORD, class F>
std::pair<double, double> sobolev_norms(const std::vector<std::vector<RealPolynomial>>& coeffs, const F& f,
                                        const std::vector<GridPoint>& grid, int k_fields, int k_classical) {
  using J = Jet<NV, ORD>;
  struct {
    int d;
    const std::vector<std::vector<RealPolynomial>>& field_coeffs;
  } model{static_cast<int>(coeffs.size()), coeffs};
  std::vector<int> words_per_len;
  std::vector<std::vector<int>> words{{}};
  for (int len = 1; len <= k_fields; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& w : words)
      if (static_cast<int>(w.size()) == len - 1)
        for (int j = 0; j < model.d; ++j) {
          auto v = w;
          v.push_back(j);
          next.push_back(v);
        }
    words.insert(words.end(), next.begin(), next.end());
  }
  std::vector<double> field_sq(words.size(), 0.0);
  std::vector<double> classical_sq(J::size, 0.0);
  std::vector<J> xj(NV);
  for (const auto& g : grid) {
    for (int i = 0; i < NV; ++i) xj[i] = J::variable(i, g.x[i]);
    J v = f(xj);
    std::vector<std::vector<J>> a(model.d, std::vector<J>(NV));
    for (int j = 0; j < model.d; ++j)
      for (int i = 0; i < NV; ++i) a[j][i] = model.field_coeffs[j][i].template evaluate<J>(xj);
    for (std::size_t w = 0; w < words.size(); ++w) {
      J cur = v;
      for (auto it = words[w].rbegin(); it != words[w].rend(); ++it) {
        J r;
        for (int i = 0; i < NV; ++i) r += a[*it][i] * cur.derivative(i);
        cur = r;
      }
      field_sq[w] += g.weight * cur.value() * cur.value();
    }
    for (int kk = 0; kk < J::size; ++kk)
      if (J::degree(kk) <= k_classical) {
        const double dv = v.derivative_value(J::exponent(kk));
        classical_sq[kk] += g.weight * dv * dv;
      }
  }
  double fields = 0, classical = 0;
  for (double s : field_sq) fields += std::sqrt(s);
  for (double s : classical_sq) classical += s;
  return {fields, std::sqrt(classical)};
}

}  // namespace hypo
