#include "jobs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hypo/groupoid_chart.hpp"
#include "hypo/kernels.hpp"
#include "hypo/liealg.hpp"
#include "hypo/nilapprox.hpp"

namespace hypo::jobs {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

Rational parse_rational(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError("empty coordinate", 1, 1);
  const auto dot = t.find('.');
  try {
    if (dot == std::string::npos) {
      Rational r(t);
      if (r.get_den() == 0) throw ParseError("zero denominator in '" + t + "'", 1, 1);
      r.canonicalize();
      return r;
    }
    // Exact decimal: digits after the point scale the denominator.
    std::string digits = t.substr(0, dot) + t.substr(dot + 1);
    if (digits.empty() || digits == "-" || digits == "+") throw std::invalid_argument("");
    if (digits[0] == '+') digits.erase(0, 1);
    Rational r(mpz_class(digits), mpz_class(1));
    for (std::size_t i = dot + 1; i < t.size(); ++i) r /= 10;
    r.canonicalize();
    return r;
  } catch (const std::invalid_argument&) {
    throw ParseError("not a number: '" + t + "'", 1, 1);
  }
}

std::string word_string(const Word& w) {
  std::string s;
  for (int c : w) s += std::to_string(c + 1);
  return s;
}

nlohmann::json rationals(const std::vector<Rational>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : v) j.push_back(r.get_str());
  return j;
}

std::vector<Rational> zeros(int n) { return std::vector<Rational>(n, Rational(0)); }

}  // namespace

std::vector<Rational> parse_point(const std::string& text, int n) {
  const std::string t = trim(text);
  if (t.empty() || t == "origin") return zeros(n);
  std::vector<Rational> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_rational(item));
  if (static_cast<int>(out.size()) != n)
    throw PreconditionError("point has " + std::to_string(out.size()) + " coordinates, expected " +
                            std::to_string(n));
  return out;
}

std::vector<double> to_double(const std::vector<Rational>& v) {
  std::vector<double> d;
  for (const auto& r : v) d.push_back(r.get_d());
  return d;
}

Result lie_dims(int d, int m) {
  Result r;
  const auto dims = witt_dimensions(d, m);
  FreeNilpotentAlgebra g(d, m);
  const int n = g.dim();
  auto e = [n](int i) {
    std::vector<Rational> v(n, Rational(0));
    v[i] = 1;
    return v;
  };
  long triples = 0, failures = 0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      auto pq = g.bracket(e(p), e(q)), qp = g.bracket(e(q), e(p));
      for (int i = 0; i < n; ++i)
        if (pq[i] != -qp[i]) ++failures;
      for (int s = 0; s < n; ++s) {
        ++triples;
        auto a = g.bracket(e(p), g.bracket(e(q), e(s)));
        auto b = g.bracket(e(q), g.bracket(e(s), e(p)));
        auto c = g.bracket(e(s), g.bracket(e(p), e(q)));
        for (int i = 0; i < n; ++i)
          if (a[i] + b[i] + c[i] != 0) {
            ++failures;
            break;
          }
      }
    }
  r.pass = failures == 0;
  r.report = {{"d", d}, {"m", m}, {"dims", dims}, {"dim", n}, {"Q", g.Q()}, {"jacobi_triples", triples},
              {"jacobi_failures", failures}};
  return r;
}

Result flag(const FieldSystem& sys, int m, const std::vector<Rational>& at) {
  Result r;
  const Flag f = flag_at(sys.fields, at, m);
  nlohmann::json words = nlohmann::json::array();
  for (const auto& layer : f.spanning_words) {
    nlohmann::json l = nlohmann::json::array();
    for (const auto& w : layer) l.push_back(word_string(w));
    words.push_back(l);
  }
  r.report = {{"system", sys.name}, {"m", m}, {"point", rationals(at)}, {"dims", f.dims}, {"spanning_words", words}};
  return r;
}

Result hormander(const FieldSystem& sys, int m, const std::vector<Rational>& at) {
  Result r;
  const auto step = hormander_step(sys.fields, at, m);
  r.pass = step.has_value();
  r.report = {{"system", sys.name}, {"m", m}, {"point", rationals(at)}};
  if (step)
    r.report["step"] = *step;
  else
    r.report["error"] = "not bracket generating up to m";
  return r;
}

Result free(const FieldSystem& sys, int m, const std::vector<Rational>& at) {
  Result r;
  CommutatorCache cache(sys.fields);
  const auto rep = freeness_report(cache, at, m);
  r.pass = rep.free;
  r.report = {{"system", sys.name}, {"m", m},         {"point", rationals(at)},
              {"free", rep.free},   {"rank", rep.rank}, {"target", rep.target},
              {"relations_universal", rep.relations_universal}};
  return r;
}

Result lift_system(const FieldSystem& sys, int m, const std::vector<Rational>& at, const LiftOptions& opts) {
  Result r;
  const LiftedSystem L = lift(sys.fields, m, at, opts);
  const int n = static_cast<int>(L.center.size());
  std::vector<bool> vary(n, true);
  for (int t = 0; t < L.q; ++t) vary[n - 1 - t] = false;
  const auto grid = rational_grid(L.center, Rational(1, 4), Rational(1, 2), vary);
  const auto v = verify_lift(L, grid);
  bool increments = true;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rd : L.rounds) {
    for (std::size_t i = 0; i < rd.dims_before.size(); ++i)
      if (rd.dims_after[i] - rd.dims_before[i] != (static_cast<int>(i) + 1 >= rd.defect_order ? 1 : 0))
        increments = false;
    rounds.push_back({{"defect_order", rd.defect_order},
                      {"dims_before", rd.dims_before},
                      {"dims_after", rd.dims_after},
                      {"source", rd.source}});
  }
  r.pass = v.projection_ok && v.all_free() && increments;
  r.report = {{"system", sys.name},
              {"m", m},
              {"k", L.k},
              {"rounds", rounds},
              {"final_flag", flag_at(L.lifted, L.center, m).dims},
              {"projection_ok", v.projection_ok},
              {"grid_points", grid.size()},
              {"all_free", v.all_free()},
              {"all_full", v.all_full()},
              {"round_increments_ok", increments}};
  r.text = format_field_system(L.to_field_system(sys.name + "_lifted"));
  return r;
}

Result theta_check(const FieldSystem& sys, const ThetaCheckOptions& o) {
  Result r;
  std::vector<PolyVectorField> fields = sys.fields;
  int k = 0;
  std::vector<Rational> center(sys.p + sys.q, Rational(0));
  for (int i = 0; i < sys.p && i < static_cast<int>(o.base.size()); ++i) center[i] = Rational(o.base[i]);
  for (int t = 0; t < sys.q && t < static_cast<int>(o.y.size()); ++t) center[sys.p + t] = Rational(o.y[t]);
  CommutatorCache cache(fields);
  if (!frame_is_free(cache, center, o.m)) {
    const auto L = lift(fields, o.m, center, o.lift);
    fields = L.lifted;
    k = L.k;
  }
  const int P = sys.p + k;
  std::vector<double> base(P, 0.0), y(sys.q, 0.0);
  for (int i = 0; i < P && i < static_cast<int>(o.base.size()); ++i) base[i] = o.base[i];
  for (int t = 0; t < sys.q && t < static_cast<int>(o.y.size()); ++t) y[t] = o.y[t];
  ThetaChart chart(fields, o.m, y, base);
  std::mt19937 rng(o.seed);
  std::uniform_real_distribution<double> U(-o.radius, o.radius);
  double zero = 0, swap = 0, trip = 0;
  for (int s = 0; s < o.pairs; ++s) {
    auto x = base, x1 = base;
    for (int i = 0; i < P; ++i) {
      x[i] += U(rng);
      x1[i] += U(rng);
    }
    const auto t = chart.theta(x, x1), back = chart.theta(x1, x);
    for (int i = 0; i < P; ++i) swap = std::max(swap, std::abs(t[i] + back[i]));
    for (double v : chart.theta(x, x)) zero = std::max(zero, std::abs(v));
    const auto hit = chart.flow_from(x, t);
    for (int i = 0; i < P; ++i) trip = std::max(trip, std::abs(hit[i] - x1[i]));
  }
  const int weight = std::min(o.max_weight, o.m + 2);
  double violation = 0, remainder = 0;
  nlohmann::json per_field = nlohmann::json::array();
  for (int j = 0; j < static_cast<int>(fields.size()); ++j) {
    const auto rep = pushforward_expansion(chart, j, weight);
    violation = std::max(violation, rep.max_violation);
    remainder = std::max(remainder, rep.max_remainder);
    per_field.push_back({{"j", j}, {"max_violation", rep.max_violation}, {"max_remainder", rep.max_remainder}});
  }
  r.pass = zero <= o.tol && swap <= o.tol && violation <= o.tol;
  r.report = {{"system", sys.name},
              {"m", o.m},
              {"lifted_variables", k},
              {"pairs", o.pairs},
              {"theta_diagonal", zero},
              {"antisymmetry", swap},
              {"round_trip", trip},
              {"max_weight", weight},
              {"max_violation", violation},
              {"max_remainder", remainder},
              {"fields", per_field},
              {"tol", o.tol}};
  return r;
}

Result k0_calibrate(int points, unsigned seed, double tol) {
  Result r;
  const auto K = FundamentalSolution::build();
  std::mt19937 rng(seed);
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> R(0.5, 2);
  double worst = 0;
  for (int i = 0; i < points; ++i) {
    std::vector<double> z{N(rng), N(rng), N(rng)};
    const double a = K.a();
    const double gauge = std::pow(std::pow(z[0] * z[0] + z[1] * z[1], 2) + a * z[2] * z[2], 0.25);
    const double s = R(rng) / gauge;
    z = {s * z[0], s * z[1], s * s * z[2]};
    const auto [res, scale] = K.l0_residual(z);
    worst = std::max(worst, res / scale);
  }
  std::vector<double> flux;
  double flux_spread = 0;
  for (double rad : {0.5, 0.7, 1.0, 1.6, 2.0}) {
    flux.push_back(K.flux(rad));
    flux_spread = std::max(flux_spread, std::abs(flux.back() - 1.0));
  }
  // (z1² + z2²)² + a z3² is weighted-homogeneous of degree 4 for weights (1, 1, 2), so K0 has degree −2.
  const auto z1 = RationalPolynomial::variable(3, 0), z2 = RationalPolynomial::variable(3, 1);
  const auto z3 = RationalPolynomial::variable(3, 2);
  const RationalPolynomial form = (z1 * z1 + z2 * z2).pow(2) + z3 * z3 * K.a_exact();
  bool homogeneous = true;
  for (const auto& [e, c] : form.terms())
    if (weighted_degree_of(e, std::vector<int>{1, 1, 2}) != 4) homogeneous = false;
  const int degree = homogeneous ? -2 : 0;
  r.pass = worst <= tol && flux_spread <= 1e-6 && homogeneous && degree == K.kernel().degree;
  r.report = K.to_json();
  r.report["l0_relative_residual"] = worst;
  r.report["points"] = points;
  r.report["flux_radii"] = {0.5, 0.7, 1.0, 1.6, 2.0};
  r.report["flux"] = flux;
  r.report["flux_deviation"] = flux_spread;
  r.report["homogeneity_degree"] = degree;
  r.report["tol"] = tol;
  return r;
}

Result parametrix_residual(const FieldSystem& sys, const std::vector<double>& frequencies) {
  Result r;
  ResidualReport rep;
  if (sys.d == 1 && sys.p == 1 && sys.q == 0) {
    ThetaChart chart(sys.fields, 1, {}, {0});
    ParametrixConfig cfg;
    cfg.psi = BoxBump::polynomial_box({0}, {2}, {3}, 5);
    cfg.psi_prime = BoxBump::polynomial_box({0}, {3.5}, {5}, 5);
    cfg.panel_phase = 1;
    cfg.n = 16;
    cfg.core_rule = {4, 1, 16, true, 0};
    Parametrix<1> P(chart, line_green_kernel(), cfg);
    ResidualCheckConfig rc;
    rc.frequencies = frequencies;
    rc.residual_grid = {64};
    rc.flat_tol = 1e-6;
    rep = residual_smoothing_check<1>(
        P, [](double w) { return OscillatoryTest::moment_free(BoxBump::polynomial({0}, 2, 8), w); }, rc, sys.name);
    r.report = rep.to_json();
    r.report["mode"] = "flat";
  } else {
    if (sys.d != 2 || sys.q != 0) throw PreconditionError("parametrix residual needs two generators and no parameters");
    const auto L = lift(sys.fields, 2, zeros(sys.p));
    if (L.p + L.k != 3) throw PreconditionError("lift is not three-dimensional; K0 applies to G_{2,2} only");
    const auto K = FundamentalSolution::build();
    ThetaChart chart(L.lifted, 2, {}, {0, 0, 0});
    ParametrixConfig cfg;
    cfg.psi = BoxBump::polynomial_box({0, 0, 0}, {0.3, 0.3, 0.3}, {0.6, 0.6, 0.6}, 5);
    cfg.psi_prime = BoxBump::polynomial_box({0, 0, 0}, {0.7, 0.7, 0.7}, {1.2, 1.2, 1.2}, 5);
    cfg.panel_phase = 6;
    cfg.n = 8;
    cfg.core_rule = {2, 2, 6, true, 0};
    Parametrix<3> P(chart, K.kernel(), cfg);
    ResidualCheckConfig rc;
    rc.frequencies = frequencies;
    rc.residual_grid = {3, 3, 3};
    const BoxBump plateau = BoxBump::polynomial_box({0, 0, 0}, {3, 9, 3}, {4.5, 13.5, 4.5}, 5);
    rep = residual_smoothing_check<3>(P, [&](double w) { return OscillatoryTest{plateau, w, 0}; }, rc, sys.name);
    r.report = rep.to_json();
    r.report["mode"] = "growth";
    r.report["lifted_variables"] = L.k;
  }
  r.pass = rep.pass;
  r.csv = rep.to_csv();
  return r;
}

Result chart_identities(int pairs, unsigned seed, double tol) {
  Result r;
  auto cfg = ChartIdentityConfig::standard();
  cfg.pairs = pairs;
  cfg.seed = seed;
  cfg.tol = tol;
  const auto reps = verify_chart_identities<2>(cfg);
  r.report = {{"pairs", pairs}, {"seed", seed}, {"tol", tol}, {"identities", nlohmann::json::array()}};
  std::ostringstream csv;
  csv.precision(17);
  csv << "identity,level,residual\n";
  for (const auto& rep : reps) {
    r.report["identities"].push_back(rep.to_json());
    r.pass = r.pass && rep.pass;
    for (std::size_t l = 0; l < rep.residuals.size(); ++l)
      csv << '"' << rep.identity << "\"," << l << "," << rep.residuals[l] << "\n";
  }
  r.csv = csv.str();
  return r;
}

Result spectrum(const Slope& alpha, int N, const std::optional<CosineDensity>& mu) {
  Result r;
  if (!mu) {
    const TorusModel model{alpha, N};
    const auto s = fourier_spectrum(model);
    double min_positive = INFINITY;
    for (const auto& e : s.modes)
      if (e.value > 0) min_positive = std::min(min_positive, e.value);
    r.report = {{"alpha", alpha.to_string()}, {"N", N}, {"modes", s.modes.size()},
                {"min_positive", min_positive}, {"leafwise", s.leafwise.to_json()}};
    r.csv = s.to_csv();
    return r;
  }
  const auto g = variable_coefficient_spectrum(alpha, *mu, N);
  std::vector<double> lowest(g.eigenvalues.begin(), g.eigenvalues.begin() + std::min<std::size_t>(20, g.eigenvalues.size()));
  r.pass = g.exactly_symmetric() && g.min_eigenvalue() >= -1e-12;
  r.report = {{"alpha", alpha.to_string()}, {"N", N},          {"blocks", g.blocks.size()},
              {"symmetric", g.exactly_symmetric()}, {"min_eigenvalue", g.min_eigenvalue()},
              {"lowest", lowest}};
  std::ostringstream csv;
  csv.precision(17);
  csv << "index,eigenvalue\n";
  for (std::size_t i = 0; i < g.eigenvalues.size(); ++i) csv << i << "," << g.eigenvalues[i] << "\n";
  r.csv = csv.str();
  return r;
}

Result gap_report(const Slope& alpha, int N, double Lambda, double grid_step, double epsilon_bound) {
  Result r;
  const TorusModel model{alpha, N};
  const auto g = spectral_gap_report(fourier_spectrum(model), leafwise_spectrum(model), Lambda, grid_step, epsilon_bound);
  r.pass = g.pass;
  r.report = g.to_json();
  return r;
}

}  // namespace hypo::jobs
