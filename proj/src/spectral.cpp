#include "hypo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hypo/errors.hpp"

namespace hypo {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

long long parse_integer(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParseError("expected an integer: '" + s + "'", 1, 1);
  return v;
}

}  // namespace

Slope Slope::rational(long long p, long long q) {
  if (q == 0) throw PreconditionError("slope denominator is zero");
  if (q < 0) p = -p, q = -q;
  const long long g = std::gcd(p, q);
  Slope s;
  s.p = p / g;
  s.q = q / g;
  return s;
}

Slope Slope::golden() {
  Slope s;
  s.kind = Kind::Golden;
  return s;
}

Slope Slope::sqrt2() {
  Slope s;
  s.kind = Kind::Sqrt2;
  return s;
}

Slope Slope::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t == "golden") return golden();
  if (t == "sqrt2") return sqrt2();
  const auto slash = t.find('/');
  if (slash == std::string::npos) return rational(parse_integer(t), 1);
  return rational(parse_integer(trim(t.substr(0, slash))), parse_integer(trim(t.substr(slash + 1))));
}

long double Slope::value() const {
  switch (kind) {
    case Kind::Golden:
      return (1.0L + std::sqrt(5.0L)) / 2.0L;
    case Kind::Sqrt2:
      return std::sqrt(2.0L);
    default:
      return static_cast<long double>(p) / static_cast<long double>(q);
  }
}

std::string Slope::to_string() const {
  switch (kind) {
    case Kind::Golden:
      return "golden";
    case Kind::Sqrt2:
      return "sqrt2";
    default:
      return q == 1 ? std::to_string(p) : std::to_string(p) + "/" + std::to_string(q);
  }
}

double LeafwiseDescriptor::lattice_value(long long k, long long q) {
  const long double t = static_cast<long double>(k) / static_cast<long double>(q);
  return static_cast<double>(4 * kPiL * kPiL * t * t);
}

std::vector<long long> LeafwiseDescriptor::lattice_below(double Lambda) const {
  std::vector<long long> out;
  for (long long k = 0; lattice_value(k, q) <= Lambda; ++k) out.push_back(k);
  return out;
}

bool LeafwiseDescriptor::contains(double lambda, double tol) const {
  if (half_line) return lambda >= -tol;
  if (lambda < -tol) return false;
  const long double k = std::round(std::sqrt(std::max(0.0L, static_cast<long double>(lambda))) * q / (2 * kPiL));
  return std::abs(lattice_value(static_cast<long long>(k), q) - lambda) <= tol;
}

nlohmann::json LeafwiseDescriptor::to_json() const {
  if (half_line) return {{"kind", "half-line"}};
  return {{"kind", "lattice"}, {"q", q}, {"formula", "4 pi^2 k^2 / q^2"}};
}

std::vector<double> SpectrumResult::values() const {
  std::vector<double> v;
  v.reserve(modes.size());
  for (const auto& e : modes) v.push_back(e.value);
  return v;
}

std::string SpectrumResult::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "m,n,eigenvalue\n";
  for (const auto& e : modes) os << e.m << "," << e.n << "," << e.value << "\n";
  return os.str();
}

SpectrumResult fourier_spectrum(const TorusModel& model) {
  if (model.N < 1) throw PreconditionError("truncation N must be at least 1");
  SpectrumResult r;
  r.model = model;
  r.leafwise = leafwise_spectrum(model);
  const long double a = model.alpha.value();
  const auto& s = model.alpha;
  for (int m = -model.N; m <= model.N; ++m)
    for (int n = -model.N; n <= model.N; ++n) {
      ModeEigenvalue e{m, n, 0.0, 0};
      const long double t = m + a * n;
      e.value = static_cast<double>(4 * kPiL * kPiL * t * t);
      if (s.is_rational()) e.j = s.q * m + s.p * n;
      r.modes.push_back(e);
    }
  std::sort(r.modes.begin(), r.modes.end(), [](const ModeEigenvalue& x, const ModeEigenvalue& y) {
    if (x.value != y.value) return x.value < y.value;
    return std::pair(x.m, x.n) < std::pair(y.m, y.n);
  });
  return r;
}

LeafwiseDescriptor leafwise_spectrum(const TorusModel& model) {
  LeafwiseDescriptor d;
  d.half_line = !model.alpha.is_rational();
  d.q = model.alpha.is_rational() ? model.alpha.q : 1;
  return d;
}

nlohmann::json GapReport::to_json() const {
  nlohmann::json j{{"alpha", alpha}, {"N", N}, {"Lambda", Lambda}, {"epsilon", epsilon}, {"pass", pass}};
  j["containment"] = containment;
  if (rational) {
    j["missing"] = missing;
    j["extra"] = extra;
  } else {
    j["grid_step"] = grid_step;
  }
  return j;
}

GapReport spectral_gap_report(const SpectrumResult& spectrum, const LeafwiseDescriptor& leafwise, double Lambda,
                              double grid_step, double epsilon_bound) {
  if (!(Lambda > 0)) throw PreconditionError("Lambda must be positive");
  GapReport g;
  g.alpha = spectrum.model.alpha.to_string();
  g.N = spectrum.model.N;
  g.Lambda = Lambda;
  g.rational = !leafwise.half_line;
  for (const auto& e : spectrum.modes) {
    double dist;
    if (leafwise.half_line) {
      dist = std::max(0.0, -e.value);
    } else {
      const long long k = std::llabs(e.j);
      dist = std::abs(e.value - LeafwiseDescriptor::lattice_value(k, leafwise.q)) / std::max(1.0, e.value);
    }
    g.containment = std::max(g.containment, dist);
  }
  if (g.rational) {
    std::set<long long> truncated;
    for (const auto& e : spectrum.modes) {
      const long long k = std::llabs(e.j);
      if (LeafwiseDescriptor::lattice_value(k, leafwise.q) <= Lambda) truncated.insert(k);
    }
    const auto lattice = leafwise.lattice_below(Lambda);
    const std::set<long long> target(lattice.begin(), lattice.end());
    std::set_difference(target.begin(), target.end(), truncated.begin(), truncated.end(),
                        std::back_inserter(g.missing));
    std::set_difference(truncated.begin(), truncated.end(), target.begin(), target.end(),
                        std::back_inserter(g.extra));
    g.pass = g.missing.empty() && g.extra.empty() && g.containment <= 8 * std::numeric_limits<double>::epsilon();
  } else {
    if (!(grid_step > 0)) throw PreconditionError("grid step must be positive");
    g.grid_step = grid_step;
    const auto v = spectrum.values();  // sorted
    const auto steps = static_cast<long long>(std::floor(Lambda / grid_step + 1e-9));
    for (long long i = 0; i <= steps; ++i) {
      const double x = i * grid_step;
      auto it = std::lower_bound(v.begin(), v.end(), x);
      double d = std::numeric_limits<double>::infinity();
      if (it != v.end()) d = *it - x;
      if (it != v.begin()) d = std::min(d, x - *std::prev(it));
      g.epsilon = std::max(g.epsilon, d);
    }
    g.pass = g.epsilon <= epsilon_bound && g.containment == 0;
  }
  return g;
}

double CosineDensity::operator()(double x, double y) const {
  double s = c0;
  for (const auto& t : terms) s += t.c * std::cos(2 * M_PI * (t.a * x + t.b * y));
  return s;
}

double CosineDensity::coefficient(int a, int b) const {
  double s = (a == 0 && b == 0) ? c0 : 0.0;
  for (const auto& t : terms) {
    if (t.a == 0 && t.b == 0) {
      if (a == 0 && b == 0) s += t.c;
      continue;
    }
    if ((t.a == a && t.b == b) || (t.a == -a && t.b == -b)) s += 0.5 * t.c;
  }
  return s;
}

CosineDensity CosineDensity::parse(const std::string& text) {
  CosineDensity d;
  d.terms.clear();
  std::stringstream ss(text);
  std::string item;
  bool first = true;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (first) {
      try {
        std::size_t used = 0;
        d.c0 = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError("density: expected a constant term, got '" + item + "'", 1, 1);
      }
      first = false;
      continue;
    }
    const auto a = item.find(':'), b = item.rfind(':');
    if (a == std::string::npos || a == b) throw ParseError("density: expected c:a:b, got '" + item + "'", 1, 1);
    Term t{};
    try {
      t.c = std::stod(item.substr(0, a));
    } catch (const std::exception&) {
      throw ParseError("density: bad coefficient in '" + item + "'", 1, 1);
    }
    t.a = static_cast<int>(parse_integer(trim(item.substr(a + 1, b - a - 1))));
    t.b = static_cast<int>(parse_integer(trim(item.substr(b + 1))));
    d.terms.push_back(t);
  }
  if (first) throw ParseError("density: empty", 1, 1);
  return d;
}

void CosineDensity::check_positive() const {
  int f = 0;
  for (const auto& t : terms) f = std::max({f, std::abs(t.a), std::abs(t.b)});
  const int n = 8 * f + 16;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (!((*this)(static_cast<double>(i) / n, static_cast<double>(k) / n) > 0))
        throw PreconditionError("density mu is not strictly positive");
}

bool GalerkinResult::exactly_symmetric() const {
  for (const auto& b : blocks)
    if (b.stiffness != b.stiffness.transpose() || b.mass != b.mass.transpose()) return false;
  return true;
}

double GalerkinResult::min_eigenvalue() const {
  return eigenvalues.empty() ? 0.0 : eigenvalues.front();
}

GalerkinResult variable_coefficient_spectrum(const Slope& alpha, const CosineDensity& mu, int N) {
  if (N < 1) throw PreconditionError("truncation N must be at least 1");
  mu.check_positive();
  const int side = 2 * N + 1;
  auto index = [&](int m, int n) { return (m + N) * side + (n + N); };
  // Modes coupled through a nonzero μ̂(k − l) share a block.
  std::vector<int> parent(side * side);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int m = -N; m <= N; ++m)
    for (int n = -N; n <= N; ++n)
      for (const auto& t : mu.terms) {
        const int m2 = m + t.a, n2 = n + t.b;
        if (std::abs(m2) > N || std::abs(n2) > N) continue;
        parent[find(index(m, n))] = find(index(m2, n2));
      }
  std::map<int, std::vector<std::pair<int, int>>> groups;
  for (int m = -N; m <= N; ++m)
    for (int n = -N; n <= N; ++n) groups[find(index(m, n))].push_back({m, n});

  const long double a = alpha.value();
  auto t_of = [&](int m, int n) -> double {
    if (alpha.is_rational())
      return static_cast<double>(static_cast<long double>(alpha.q * m + alpha.p * n) / alpha.q);
    return static_cast<double>(m + a * n);
  };
  const double four_pi2 = static_cast<double>(4 * kPiL * kPiL);

  GalerkinResult r;
  for (auto& [root, modes] : groups) {
    GalerkinBlock b;
    b.modes = std::move(modes);
    const auto n = static_cast<Eigen::Index>(b.modes.size());
    b.stiffness.resize(n, n);
    b.mass.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = i; k < n; ++k) {
        const auto [mi, ni] = b.modes[i];
        const auto [mk, nk] = b.modes[k];
        const double c = mu.coefficient(mi - mk, ni - nk);
        b.mass(i, k) = b.mass(k, i) = c;
        b.stiffness(i, k) = b.stiffness(k, i) = four_pi2 * t_of(mi, ni) * t_of(mk, nk) * c;
      }
    // Modes with t = 0 span the kernel of A exactly. The other eigenvalues solve
    // A_PP v = λ S v with S the Schur complement of M_ZZ in M.
    std::vector<Eigen::Index> Z, P;
    for (Eigen::Index i = 0; i < n; ++i) (t_of(b.modes[i].first, b.modes[i].second) == 0 ? Z : P).push_back(i);
    b.eigenvalues = Eigen::VectorXd::Zero(n);
    if (!P.empty()) {
      const Eigen::MatrixXd App = b.stiffness(P, P);
      Eigen::MatrixXd S = b.mass(P, P);
      if (!Z.empty()) {
        const Eigen::LLT<Eigen::MatrixXd> llt(b.mass(Z, Z));
        if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
        S -= b.mass(P, Z) * llt.solve(b.mass(Z, P));
      }
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(App, S, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolver failed");
      b.eigenvalues.tail(static_cast<Eigen::Index>(P.size())) = es.eigenvalues();
    }
    for (Eigen::Index i = 0; i < n; ++i) r.eigenvalues.push_back(b.eigenvalues(i));
    r.blocks.push_back(std::move(b));
  }
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
  return r;
}

void check_semidefinite(const GalerkinResult& r, double tol) {
  if (r.min_eigenvalue() < -tol) throw NumericalError("indefinite Galerkin matrix: eigenvalue below -tol");
}

}  // namespace hypo
