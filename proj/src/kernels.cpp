#include "hypo/kernels.hpp"

#include <numbers>
#include <sstream>

namespace hypo {

int GroupKernel::homogeneous_dimension() const {
  int q = 0;
  for (int w : weights) q += w;
  return q;
}

GroupKernel line_green_kernel() {
  return {"line_green", {1}, 1.0, [](const std::vector<double>& u) { return std::abs(u[0]) / 2; }};
}

namespace {

RationalPolynomial apply_field(const std::vector<RationalPolynomial>& field, const RationalPolynomial& f) {
  RationalPolynomial r(f.nvars());
  for (std::size_t i = 0; i < field.size(); ++i)
    if (!field[i].is_zero()) r += field[i] * f.derivative(static_cast<int>(i));
  return r;
}

/// Rational roots of c0 + c1 a + c2 a² (not all zero).
std::vector<Rational> rational_roots(const std::map<int, Rational>& coeffs) {
  auto get = [&](int k) {
    auto it = coeffs.find(k);
    return it == coeffs.end() ? Rational(0) : it->second;
  };
  const Rational c0 = get(0), c1 = get(1), c2 = get(2);
  for (const auto& [k, v] : coeffs)
    if (k > 2 && v != 0) throw Error("annihilation condition has degree > 2 in a");
  if (c2 == 0) {
    if (c1 == 0) return {};
    Rational r = -c0 / c1;
    r.canonicalize();
    return {r};
  }
  Rational disc = c1 * c1 - 4 * c2 * c0;
  disc.canonicalize();
  if (disc < 0) return {};
  mpz_class num = disc.get_num(), den = disc.get_den();
  mpz_class sn = sqrt(num), sd = sqrt(den);
  if (sn * sn != num || sd * sd != den) return {};
  Rational s(sn, sd);
  s.canonicalize();
  std::vector<Rational> out;
  for (int sign : {-1, 1}) {
    Rational r = (-c1 + sign * s) / (2 * c2);
    r.canonicalize();
    out.push_back(r);
  }
  return out;
}

}  // namespace

FundamentalSolution FundamentalSolution::build(double flux_tol) {
  FundamentalSolution fs;
  fs.tol_ = flux_tol;
  const auto& Y = fs.alg_.left_invariant_fields();
  // Work in (z1, z2, z3, a) and require the numerator of L0 N^{-1/2} to vanish identically.
  std::vector<int> to4{0, 1, 2};
  std::vector<std::vector<RationalPolynomial>> Y4(2);
  for (int j = 0; j < 2; ++j)
    for (int r = 0; r < 3; ++r) Y4[j].push_back(Y[j][r].remap(to4, 4));
  auto z = [](int i) { return RationalPolynomial::variable(4, i); };
  RationalPolynomial r2 = z(0) * z(0) + z(1) * z(1);
  RationalPolynomial N = r2 * r2 + z(3) * z(2) * z(2);
  RationalPolynomial L0N(4), grad_sq(4);
  for (int j = 0; j < 2; ++j) {
    RationalPolynomial yn = apply_field(Y4[j], N);
    L0N += apply_field(Y4[j], yn);
    grad_sq += yn * yn;
  }
  // L0 N^{-1/2} = N^{-5/2} (−N L0N / 2 + 3 |Y N|² / 4).
  RationalPolynomial num = N * L0N * Rational(-1, 2) + grad_sq * Rational(3, 4);
  std::map<Exponents, std::map<int, Rational>> by_monomial;
  for (const auto& [e, c] : num.terms()) {
    Exponents ez{e[0], e[1], e[2]};
    by_monomial[ez][e[3]] += c;
  }
  std::vector<Rational> candidates;
  for (const auto& [ez, poly] : by_monomial) {
    bool depends = false;
    for (const auto& [k, v] : poly)
      if (k > 0 && v != 0) depends = true;
    if (depends) {
      candidates = rational_roots(poly);
      break;
    }
  }
  bool found = false;
  for (const auto& a : candidates) {
    if (a <= 0) continue;
    bool ok = true;
    for (const auto& [ez, poly] : by_monomial) {
      Rational s = 0, pw = 1;
      for (int k = 0; k <= 2; ++k) {
        auto it = poly.find(k);
        if (it != poly.end()) s += it->second * pw;
        pw *= a;
      }
      if (s != 0) ok = false;
    }
    if (ok) {
      fs.a_ = a;
      found = true;
      break;
    }
  }
  if (!found) throw Error("symbolic annihilation fails: no a > 0 makes L0 K0 vanish (bracket convention mismatch)");
  fs.c_ = 1.0;
  fs.c_ = 1.0 / fs.raw_flux(1.0);
  return fs;
}

GroupKernel FundamentalSolution::kernel() const {
  const double a = this->a(), c = c_;
  return {"K0", {1, 1, 2}, -2.0, [a, c](const std::vector<double>& z) {
            const double r2 = z[0] * z[0] + z[1] * z[1];
            return c / std::sqrt(r2 * r2 + a * z[2] * z[2]);
          }};
}

double FundamentalSolution::raw_flux(double radius) const {
  using J = Jet<3, 2>;
  const auto& Y = alg_.left_invariant_fields();
  std::vector<std::vector<RealPolynomial>> Yd(2);
  for (int j = 0; j < 2; ++j)
    for (int r = 0; r < 3; ++r) Yd[j].push_back(Y[j][r].cast<double>());
  const double a = this->a();
  const Plateau chi{0.0, 0.5 * radius, radius};
  // u = (ρ s cos θ, ρ s sin θ, ρ² sin φ / √a), s = √cos φ, du = ρ³/√a dρ dθ dφ on the gauge sphere N = ρ⁴;
  // φ = (π/2) sin(πτ/2) keeps s smooth at the poles.
  auto angular = [&](double rho, int nth, int ntau) {
    const auto& g = gauss_legendre(ntau);
    double sum = 0;
    for (int it = 0; it < nth; ++it) {
      const double th = 2 * std::numbers::pi * it / nth;
      for (int k = 0; k < ntau; ++k) {
        const double tau = g.nodes[k];
        const double phi = std::numbers::pi / 2 * std::sin(std::numbers::pi * tau / 2);
        const double dphi = std::numbers::pi * std::numbers::pi / 4 * std::cos(std::numbers::pi * tau / 2);
        const double s = std::sqrt(std::max(0.0, std::cos(phi)));
        std::vector<double> u{rho * s * std::cos(th), rho * s * std::sin(th), rho * rho * std::sin(phi) / std::sqrt(a)};
        std::vector<J> uj(3);
        for (int i = 0; i < 3; ++i) uj[i] = J::variable(i, u[i]);
        J r2 = uj[0] * uj[0] + uj[1] * uj[1];
        J N = r2 * r2 + a * uj[2] * uj[2];
        J chij = chi(pow(N, 0.25));
        double L0chi = 0;
        for (int j = 0; j < 2; ++j) {
          std::vector<J> coef(3);
          for (int r = 0; r < 3; ++r) coef[r] = Yd[j][r].evaluate<J>(uj);
          J first;
          for (int r = 0; r < 3; ++r) first += coef[r] * chij.derivative(r);
          for (int r = 0; r < 3; ++r) L0chi += coef[r].value() * first.derivative(r).value();
        }
        const double K = 1 / (rho * rho);  // N^{-1/2} on the gauge sphere of radius ρ
        sum += g.weights[k] * dphi * (2 * std::numbers::pi / nth) * K * L0chi * rho * rho * rho / std::sqrt(a);
      }
    }
    return sum;
  };
  // Angular resolution fixed by doubling until stable at a probe radius.
  int nth = 8, ntau = 16;
  const double probe = 0.75 * radius;
  double prev = angular(probe, nth, ntau);
  for (int it = 0; it < 6; ++it) {
    const double next = angular(probe, 2 * nth, 2 * ntau);
    const bool done = std::abs(next - prev) <= 1e-13 * std::max(1.0, std::abs(next));
    nth *= 2;
    ntau *= 2;
    prev = next;
    if (done) break;
  }
  return c_ * adaptive_integrate([&](double rho) { return angular(rho, nth, ntau); }, 0.5 * radius, radius, tol_,
                                 1e-15);
}

double FundamentalSolution::flux(double radius) const { return raw_flux(radius); }

std::pair<double, double> FundamentalSolution::l0_residual(const std::vector<double>& z) const {
  using J = Jet<3, 2>;
  const auto& Y = alg_.left_invariant_fields();
  std::vector<J> zj(3);
  for (int i = 0; i < 3; ++i) zj[i] = J::variable(i, z[i]);
  J K = (*this)(zj);
  double L = 0;
  for (int j = 0; j < 2; ++j) {
    std::vector<J> coef(3);
    for (int r = 0; r < 3; ++r) coef[r] = Y[j][r].cast<double>().evaluate<J>(zj);
    J first;
    for (int r = 0; r < 3; ++r) first += coef[r] * K.derivative(r);
    for (int r = 0; r < 3; ++r) L += coef[r].value() * first.derivative(r).value();
  }
  double scale = 0;
  for (int k = 0; k < J::size; ++k)
    if (J::degree(k) == 2) scale = std::max(scale, std::abs(K.derivative_value(J::exponent(k))));
  return {std::abs(L), scale};
}

nlohmann::json FundamentalSolution::to_json() const {
  return {{"a", to_string(a_)}, {"c", c_}, {"Q", alg_.Q()}, {"degree", 2 - alg_.Q()}};
}

double shell_integral(const GroupKernel& k, double a, double b, const PolarRuleSpec& spec) {
  PolarRuleSpec s = spec;
  s.rho_min = a;
  double sum = 0;
  for (const auto& n : cube_polar_rule(k.weights, b, s)) sum += n.weight * k(n.u);
  return sum;
}

RationalPolynomial polynomial_determinant(const std::vector<std::vector<RationalPolynomial>>& m) {
  const std::size_t n = m.size();
  if (n == 0) throw PreconditionError("determinant of an empty matrix");
  const int nv = m[0][0].nvars();
  if (n == 1) return m[0][0];
  RationalPolynomial det(nv);
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    std::vector<std::vector<RationalPolynomial>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<RationalPolynomial> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(std::move(row));
    }
    RationalPolynomial t = m[0][c] * polynomial_determinant(minor);
    if (c % 2)
      det -= t;
    else
      det += t;
  }
  return det;
}

ParametrixModel::ParametrixModel(const ThetaChart& chart) {
  if (!chart.flow().is_exact())
    throw PreconditionError("parametrix quadrature needs a polynomial (triangular) flow");
  P = chart.dim();
  d = static_cast<int>(chart.fields().size());
  const auto& y = chart.y();
  const int q = static_cast<int>(y.size());
  auto fix_y = [&](RealPolynomial p, int offset, int keep_vars) {
    for (int j = 0; j < q; ++j) p = p.substitute(offset + j, y[j]);
    std::vector<int> map(p.nvars(), -1);
    for (int i = 0; i < keep_vars; ++i) map[i] = i;
    return p.remap(map, keep_vars);
  };
  const auto& polys = chart.flow().polynomials();
  std::vector<std::vector<RationalPolynomial>> jac(P);
  for (int i = 0; i < P; ++i) {
    flow.push_back(fix_y(polys[i].cast<double>(), 2 * P, 2 * P));
    for (int r = 0; r < P; ++r) jac[i].push_back(polys[i].derivative(P + r));
  }
  flow_det = fix_y(polynomial_determinant(jac).cast<double>(), 2 * P, 2 * P);
  std::vector<std::vector<RationalPolynomial>> fm(P);
  const auto& frame = chart.frame();
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < P; ++k) fm[i].push_back(frame[k].component(i));
  frame_det = fix_y(polynomial_determinant(fm).cast<double>(), P, P);
  for (int j = 0; j < d; ++j) {
    field_coeffs.emplace_back();
    for (int i = 0; i < P; ++i) field_coeffs[j].push_back(fix_y(chart.fields()[j].component(i).cast<double>(), P, P));
  }
  auto scan = [&](const RealPolynomial& p) {
    for (const auto& [e, c] : p.terms())
      for (int k = 0; k < P; ++k) max_u_degree = std::max(max_u_degree, e[P + k]);
  };
  for (const auto& p : flow) scan(p);
  scan(flow_det);
}

std::vector<std::vector<RealPolynomial>> field_coefficients(const std::vector<PolyVectorField>& fields,
                                                            const std::vector<double>& y) {
  std::vector<std::vector<RealPolynomial>> out;
  for (const auto& f : fields) {
    const int p = f.p();
    std::vector<int> map(p + f.q(), -1);
    for (int i = 0; i < p; ++i) map[i] = i;
    out.emplace_back();
    for (int i = 0; i < p; ++i) {
      RealPolynomial c = f.component(i).cast<double>();
      for (int j = 0; j < f.q(); ++j) c = c.substitute(p + j, y.at(j));
      out.back().push_back(c.remap(map, p));
    }
  }
  return out;
}

OscillatoryTest OscillatoryTest::moment_free(const BoxBump& bump, double omega) {
  if (bump.dim() != 1) throw PreconditionError("moment-free test functions are one-dimensional");
  const auto& pl = bump.factors[0];
  const double lo = pl.center - pl.outer, hi = pl.center + pl.outer;
  // The support ends are panel ends, so a fixed composite rule sees a smooth integrand.
  const QuadRule rule = composite_gauss(lo, hi, 64, 20);
  auto integ = [&](auto g) {
    double s = 0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * g(rule.nodes[k]);
    return s;
  };
  const double m0 = integ([&](double x) { return pl(x); });
  const double m1 = integ([&](double x) { return x * pl(x); });
  const double m2 = integ([&](double x) { return x * x * pl(x); });
  const double C0 = integ([&](double x) { return pl(x) * std::cos(omega * x); });
  const double C1 = integ([&](double x) { return x * pl(x) * std::cos(omega * x); });
  const double det = m0 * m2 - m1 * m1;
  OscillatoryTest t{bump, omega, 0, 0, 0};
  t.c0 = (C0 * m2 - C1 * m1) / det;
  t.c1 = (m0 * C1 - m1 * C0) / det;
  return t;
}

std::vector<GridPoint> tensor_grid(const BoxBump& box, const std::vector<int>& nodes_per_axis) {
  std::vector<GridPoint> pts{{{}, 1.0}};
  for (std::size_t i = 0; i < box.factors.size(); ++i) {
    const auto& f = box.factors[i];
    const int n = nodes_per_axis.at(i);
    // Panels break at the plateau edges, where a polynomial profile is only finitely smooth.
    std::vector<double> cuts{f.center - f.outer};
    if (f.power == 0 && f.inner > 0 && n >= 48) {
      cuts.push_back(f.center - f.inner);
      cuts.push_back(f.center + f.inner);
    }
    cuts.push_back(f.center + f.outer);
    QuadRule r;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double len = cuts[s + 1] - cuts[s];
      const int pts = cuts.size() == 2 ? n : std::max(8, static_cast<int>(std::lround(n * len / (2 * f.outer))));
      const int panels = (pts + 15) / 16;
      const QuadRule seg = composite_gauss(cuts[s], cuts[s + 1], panels, (pts + panels - 1) / panels);
      r.nodes.insert(r.nodes.end(), seg.nodes.begin(), seg.nodes.end());
      r.weights.insert(r.weights.end(), seg.weights.begin(), seg.weights.end());
    }
    std::vector<GridPoint> next;
    next.reserve(pts.size() * r.nodes.size());
    for (const auto& p : pts)
      for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        GridPoint q = p;
        q.x.push_back(r.nodes[k]);
        q.weight *= r.weights[k];
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

void finish_residual_report(ResidualReport& rep, const ResidualCheckConfig& cfg) {
  rep.residual_growth.clear();
  rep.gradient_growth.clear();
  for (std::size_t i = 1; i < rep.ratios.size(); ++i) {
    rep.residual_growth.push_back(rep.ratios[i - 1] > 0 ? rep.ratios[i] / rep.ratios[i - 1] : 0);
    rep.gradient_growth.push_back(rep.gradient_ratios[i - 1] > 0 ? rep.gradient_ratios[i] / rep.gradient_ratios[i - 1]
                                                                 : 0);
  }
  bool pass = true;
  if (cfg.flat_tol >= 0) {
    for (double r : rep.ratios) pass = pass && r <= cfg.flat_tol;
  } else {
    for (double g : rep.residual_growth) pass = pass && g <= cfg.max_residual_growth;
    for (double g : rep.gradient_growth) pass = pass && g >= cfg.min_gradient_growth;
  }
  rep.pass = pass;
}

nlohmann::json ResidualReport::to_json() const {
  return {{"system_id", system_id},
          {"y", y},
          {"frequencies", frequencies},
          {"ratios", ratios},
          {"gradient_ratios", gradient_ratios},
          {"residual_growth", residual_growth},
          {"gradient_growth", gradient_growth},
          {"pass", pass}};
}

std::string ResidualReport::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "omega,residual_ratio,gradient_ratio\n";
  for (std::size_t i = 0; i < frequencies.size(); ++i)
    os << frequencies[i] << ',' << ratios[i] << ',' << gradient_ratios[i] << '\n';
  return os.str();
}

LineParametrix::LineParametrix(Plateau psi, Plateau psi_prime, int panels, int n)
    : psi_(psi), psi1_(psi_prime), panels_(panels), n_(n) {
  BoxBump a{{psi}}, b{{psi_prime}};
  if (!b.is_one_on_support_of(a)) throw PreconditionError("ψ′ must equal 1 on the support of ψ");
}

std::pair<double, double> LineParametrix::potential(const std::function<double(double)>& h, double x) const {
  const double lo = psi1_.center - psi1_.outer, hi = psi1_.center + psi1_.outer;
  auto integrate = [&](double a, double b, bool weighted) {
    if (b <= a) return 0.0;
    const QuadRule r = composite_gauss(a, b, panels_, n_);
    double s = 0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      const double v = h(r.nodes[k]);
      s += r.weights[k] * (weighted ? std::abs(x - r.nodes[k]) / 2 * v : v);
    }
    return s;
  };
  const double xc = std::clamp(x, lo, hi);
  const double I = integrate(lo, xc, true) + integrate(xc, hi, true);
  const double left = integrate(lo, xc, false), right = integrate(xc, hi, false);
  return {I, (left - right) / 2};
}

double LineParametrix::apply(const std::function<double(double)>& f, double x) const {
  const double p = psi_(x);
  if (p == 0) return 0;
  return p * potential([&](double s) { return psi1_(s) * f(s); }, x).first;
}

double LineParametrix::residual(const std::function<double(double)>& f, double x) const {
  using J = Jet<1, 2>;
  J p = psi_(J::variable(0, x));
  if (p[1] == 0 && p[2] == 0) return 0;
  auto [I, dI] = potential([&](double s) { return psi1_(s) * f(s); }, x);
  return -2 * p[2] * I - 2 * p[1] * dI;  // ψ″ = 2·(coefficient of ε²)
}

double improved_line_residual(const std::vector<LineParametrix>& levels, const std::function<double(double)>& f,
                              double x) {
  if (levels.empty()) throw PreconditionError("improved parametrix needs at least one level");
  for (std::size_t l = 1; l < levels.size(); ++l) {
    BoxBump outer{{levels[l].psi()}}, inner{{levels[l - 1].psi()}};
    if (!outer.is_one_on_support_of(inner))
      throw PreconditionError("each improvement cutoff must equal 1 on the previous support");
  }
  // R_{l+1} = R^{(l)} R_l with R_1 = R^{(0)}.
  std::vector<std::function<double(double)>> stages;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    auto prev = stages.empty() ? f : stages.back();
    const LineParametrix* lp = &levels[l];
    stages.push_back([lp, prev](double s) { return lp->residual(prev, s); });
  }
  return stages.back()(x);
}

Restriction Restriction::normalized(const BoxBump& zeta, int nodes_per_axis) {
  Restriction r;
  r.zeta_ = zeta;
  r.grid_ = tensor_grid(zeta, std::vector<int>(zeta.dim(), nodes_per_axis));
  double mass = 0;
  for (const auto& g : r.grid_) mass += g.weight * zeta(g.x);
  r.scale_ = 1 / mass;
  return r;
}

Restriction::Restriction(const BoxBump& zeta, double scale, int nodes_per_axis)
    : zeta_(zeta), scale_(scale), grid_(tensor_grid(zeta, std::vector<int>(zeta.dim(), nodes_per_axis))) {
  double mass = 0;
  for (const auto& g : grid_) mass += g.weight * zeta(g.x);
  if (std::abs(mass * scale - 1) > 1e-12)
    throw PreconditionError("ζ normalization off: mass " + std::to_string(mass * scale));
}

double Restriction::operator()(const std::function<double(const std::vector<double>&)>& F,
                               const std::vector<double>& x) const {
  double s = 0;
  for (const auto& g : grid_) {
    const double z = zeta_(g.x);
    if (z == 0) continue;
    std::vector<double> xt = x;
    xt.insert(xt.end(), g.x.begin(), g.x.end());
    s += g.weight * z * F(xt);
  }
  return s * scale_;
}

}  // namespace hypo
