#include "hypo/groupoid_chart.hpp"

#include <numeric>

#include "hypo/expr_parser.hpp"

namespace hypo {

ChartBox ChartBox::cube(int p, int q, double half_width) {
  ChartBox b;
  b.p = p;
  b.q = q;
  b.lo.assign(p + q, -half_width);
  b.hi.assign(p + q, half_width);
  return b;
}

bool ChartBox::contains(const Point& x, const Point& y) const {
  for (int i = 0; i < p; ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  for (int t = 0; t < q; ++t)
    if (y[t] < lo[p + t] || y[t] > hi[p + t]) return false;
  return true;
}

PolyExpDensity::PolyExpDensity(RationalPolynomial prefactor, RationalPolynomial exponent)
    : pre_q_(std::move(prefactor)), ex_q_(std::move(exponent)) {
  if (pre_q_.nvars() != ex_q_.nvars()) throw PreconditionError("density prefactor and exponent differ in variables");
  pre_ = pre_q_.cast<double>();
  ex_ = ex_q_.cast<double>();
}

PolyExpDensity PolyExpDensity::constant(int nvars, const Rational& c) {
  return {RationalPolynomial::constant(nvars, c), RationalPolynomial(nvars)};
}

PolyExpDensity PolyExpDensity::parse(const std::string& text, const std::vector<std::string>& variables) {
  const int n = static_cast<int>(variables.size());
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  const auto at = s.find("exp(");
  if (at == std::string::npos) return {parse_polynomial(s, variables), RationalPolynomial(n)};
  if (s.back() != ')') throw ParseError("density: exp(...) must close the expression", 1, static_cast<int>(s.size()));
  RationalPolynomial pre = RationalPolynomial::constant(n, Rational(1));
  if (at > 0) {
    if (s[at - 1] != '*') throw ParseError("density: expected P*exp(E)", 1, static_cast<int>(at));
    pre = parse_polynomial(s.substr(0, at - 1), variables);
  }
  const std::string inner = s.substr(at + 4, s.size() - at - 5);
  return {pre, parse_polynomial(inner, variables)};
}

void DensityPair::check_positive(const ChartBox& box, int samples_per_axis) const {
  const int n = p + q;
  std::vector<int> idx(n, 0);
  Point z(n);
  while (true) {
    for (int i = 0; i < n; ++i)
      z[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * idx[i] / std::max(1, samples_per_axis - 1);
    if (!(mu.prefactor().cast<double>().evaluate(z) > 0) || !(alpha.prefactor().cast<double>().evaluate(z) > 0))
      throw PreconditionError("density is not positive on the chart");
    int i = 0;
    while (i < n && ++idx[i] == samples_per_axis) idx[i++] = 0;
    if (i == n) break;
  }
}

double DensityPair::rep_weight(const Point& x, const Point& xp, const Point& y) const {
  const auto z = join(x, y), zp = join(xp, y);
  return std::exp(0.5 * (mu.log_of(zp) - mu.log_of(z) + alpha.log_of(z) + alpha.log_of(zp)));
}

double ModularFunction::operator()(const Point& x, const Point& xp, const Point& y) const {
  const auto z = join(x, y), zp = join(xp, y);
  return std::exp(d_.mu.log_of(z) + d_.alpha.log_of(zp) - d_.mu.log_of(zp) - d_.alpha.log_of(z));
}

bool ModularFunction::cocycle_exact() const {
  // Variables (x, x′, x″, y) in 3p + q slots.
  const int p = d_.p, q = d_.q, n = 3 * p + q;
  auto slot = [&](const RationalPolynomial& f, int copy) {
    std::vector<int> map(p + q);
    for (int i = 0; i < p; ++i) map[i] = copy * p + i;
    for (int t = 0; t < q; ++t) map[p + t] = 3 * p + t;
    return f.remap(map, n);
  };
  const auto& Pm = d_.mu.prefactor();
  const auto& Pa = d_.alpha.prefactor();
  const auto& Em = d_.mu.exponent();
  const auto& Ea = d_.alpha.exponent();
  // δ(0,1) δ(1,2) and δ(0,2) as (numerator, denominator, exponent).
  auto num = [&](int a, int b) { return slot(Pm, a) * slot(Pa, b); };
  auto den = [&](int a, int b) { return slot(Pm, b) * slot(Pa, a); };
  auto ex = [&](int a, int b) { return slot(Em, a) + slot(Ea, b) - slot(Em, b) - slot(Ea, a); };
  const bool prefactors = num(0, 1) * num(1, 2) * den(0, 2) == num(0, 2) * den(0, 1) * den(1, 2);
  return prefactors && ex(0, 1) + ex(1, 2) == ex(0, 2);
}

ModularFunction modular_delta(const DensityPair& d, const ChartBox& box) {
  d.check_positive(box);
  return ModularFunction(d);
}

QuasiInvariance quasi_invariance(const ModularFunction& delta, const ChartBox& box, const KernelFn& f,
                                 int nodes_per_axis) {
  const auto& d = delta.densities();
  std::vector<double> xlo(box.lo.begin(), box.lo.begin() + d.p), xhi(box.hi.begin(), box.hi.begin() + d.p);
  std::vector<double> ylo(box.lo.begin() + d.p, box.lo.end()), yhi(box.hi.begin() + d.p, box.hi.end());
  const LeafRule X = LeafRule::gauss(xlo, xhi, 1, nodes_per_axis);
  const LeafRule Y = d.q > 0 ? LeafRule::gauss(ylo, yhi, 1, nodes_per_axis) : LeafRule{{Point{}}, {1.0}};
  QuasiInvariance out;
  for (std::size_t c = 0; c < Y.size(); ++c)
    for (std::size_t a = 0; a < X.size(); ++a) {
      const Point &x = X.x[a], &y = Y.x[c];
      const double wx = Y.w[c] * X.w[a] * d.mu(join(x, y));
      for (std::size_t b = 0; b < X.size(); ++b) {
        const Point& xp = X.x[b];
        const double w = wx * X.w[b] * d.alpha(join(xp, y));
        const double dl = delta(x, xp, y);
        const double swapped = f(xp, x, y);
        out.with_delta += w * dl * swapped;
        out.with_inverse += w * swapped / dl;
        out.reference += w * f(x, xp, y);
      }
    }
  return out;
}

LeafRule LeafRule::gauss(const std::vector<double>& lo, const std::vector<double>& hi, int panels, int n) {
  LeafRule r{{Point{}}, {1.0}};
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const QuadRule g = composite_gauss(lo[i], hi[i], panels, n);
    LeafRule next;
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < g.nodes.size(); ++b) {
        Point x = r.x[a];
        x.push_back(g.nodes[b]);
        next.x.push_back(std::move(x));
        next.w.push_back(r.w[a] * g.weights[b]);
      }
    r = std::move(next);
  }
  return r;
}

LeafRule LeafRule::on_support(const BoxBump& b, int panels, int n) {
  std::vector<double> lo, hi;
  for (const auto& f : b.factors) {
    lo.push_back(f.center - f.outer);
    hi.push_back(f.center + f.outer);
  }
  return gauss(lo, hi, panels, n);
}

LeafRule LeafRule::periodic(int p, int N) {
  LeafRule r{{Point{}}, {1.0}};
  const double h = 2 * M_PI / N;
  for (int i = 0; i < p; ++i) {
    LeafRule next;
    for (std::size_t a = 0; a < r.size(); ++a)
      for (int b = 0; b < N; ++b) {
        Point x = r.x[a];
        x.push_back(b * h);
        next.x.push_back(std::move(x));
        next.w.push_back(r.w[a] * h);
      }
    r = std::move(next);
  }
  return r;
}

void check_in_chart(const ChartKernel& k, const ChartBox& box) {
  for (const BoxBump* b : {&k.bump_x, &k.bump_xp}) {
    if (b->dim() != box.p) throw PreconditionError("kernel dimension does not match the chart");
    for (int i = 0; i < box.p; ++i) {
      const auto& f = b->factors[i];
      if (f.center - f.outer < box.lo[i] || f.center + f.outer > box.hi[i])
        throw PreconditionError("kernel support escapes the chart");
    }
  }
}

Eigen::MatrixXd grid_adjoint(const Eigen::MatrixXd& M, const DensityPair& d, const LeafRule& rule, const Point& y) {
  Eigen::VectorXd D(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index a = 0; a < D.size(); ++a) D(a) = rule.w[a] * d.mu(join(rule.x[a], y));
  return D.cwiseInverse().asDiagonal() * M.transpose() * D.asDiagonal();
}

KernelFn involution(KernelFn k) {
  return [k = std::move(k)](const Point& x, const Point& xp, const Point& y) { return k(xp, x, y); };
}

KernelFn convolve(KernelFn k1, KernelFn k2, const DensityPair& d, LeafRule rule) {
  return [k1 = std::move(k1), k2 = std::move(k2), d, rule = std::move(rule)](const Point& x, const Point& xp,
                                                                              const Point& y) {
    double s = 0;
    for (std::size_t n = 0; n < rule.size(); ++n) {
      const Point& z = rule.x[n];
      const double a = k1(x, z, y);
      if (a == 0) continue;
      s += rule.w[n] * a * k2(z, xp, y) * d.alpha(join(z, y));
    }
    return s;
  };
}

nlohmann::json IdentityReport::to_json() const {
  std::vector<double> slopes;
  for (double r : reductions) slopes.push_back(std::log2(r));
  return {{"identity", identity},
          {"residual", residuals.empty() ? 0.0 : residuals.back()},
          {"residuals", residuals},
          {"refinement_slopes", slopes},
          {"pass", pass}};
}

void finish_identity_report(IdentityReport& r, double tol, double min_reduction) {
  r.reductions.clear();
  for (std::size_t l = 0; l + 1 < r.residuals.size(); ++l)
    r.reductions.push_back(r.residuals[l + 1] > 0 ? r.residuals[l] / r.residuals[l + 1]
                                                  : std::numeric_limits<double>::infinity());
  r.pass = !r.residuals.empty() && r.residuals.back() <= tol;
  for (double f : r.reductions) r.pass = r.pass && f >= min_reduction;
}

ChartIdentityConfig ChartIdentityConfig::standard() {
  const std::vector<std::string> vars{"x1", "x2", "y"};
  ChartIdentityConfig c;
  c.box = ChartBox::cube(2, 1, 1.0);
  c.densities.p = 2;
  c.densities.q = 1;
  c.densities.mu = PolyExpDensity::parse("(2 + x1*x2 + y^2)*exp(x1 - y*x2/2)", vars);
  c.densities.alpha = PolyExpDensity::parse("(3 + x2^2)*exp(x2/3)", vars);
  c.frame.emplace_back(2, 1, std::vector{parse_polynomial("1 + x2^2/4", vars), parse_polynomial("y/2", vars)});
  c.frame.emplace_back(2, 1, std::vector{parse_polynomial("0", vars), parse_polynomial("1 + y*x1", vars)});
  c.phi = BoxBump::polynomial_box({0, 0}, {0.75, 0.75}, {0.85, 0.85}, 5);
  c.psi = BoxBump::polynomial_box({0, 0}, {0.85, 0.85}, {0.95, 0.95}, 5);
  return c;
}

ChartKernel random_chart_kernel(std::mt19937& rng, int p, int q) {
  std::uniform_real_distribution<double> U(-1, 1);
  const int n = 2 * p + q;
  ChartKernel k;
  k.poly = RealPolynomial(n);
  // Degree ≤ 2 in all variables.
  k.poly.add_term(std::vector<int>(n, 0), U(rng));
  for (int a = 0; a < n; ++a) {
    std::vector<int> e(n, 0);
    ++e[a];
    k.poly.add_term(e, U(rng));
    for (int b = a; b < n; ++b) {
      auto f = e;
      ++f[b];
      k.poly.add_term(f, U(rng));
    }
  }
  for (BoxBump* b : {&k.bump_x, &k.bump_xp})
    for (int i = 0; i < p; ++i) b->factors.push_back({0.15 * U(rng), 0.0, 0.525 + 0.075 * U(rng), 8});
  return k;
}

}  // namespace hypo
