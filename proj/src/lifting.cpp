#include "hypo/lifting.hpp"

#include <algorithm>
#include <map>

#include "hypo/expr_parser.hpp"

namespace hypo {

namespace {

std::vector<std::string> lifted_names(int p, int k, int q) {
  std::vector<std::string> names;
  for (int i = 1; i <= p; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= k; ++i) names.push_back("t" + std::to_string(i));
  for (int i = 1; i <= q; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

// Inserts a new base variable at position `at` (before the parameters).
RationalPolynomial widen(const RationalPolynomial& f, int at) {
  std::vector<int> map(f.nvars());
  for (int v = 0; v < f.nvars(); ++v) map[v] = v < at ? v : v + 1;
  return f.remap(map, f.nvars() + 1);
}

std::vector<PolyVectorField> add_variable(const std::vector<PolyVectorField>& fields,
                                          const std::vector<RationalPolynomial>& u) {
  const int p = fields[0].p(), q = fields[0].q();
  std::vector<PolyVectorField> out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::vector<RationalPolynomial> comps;
    for (const auto& c : fields[i].components()) comps.push_back(widen(c, p));
    comps.push_back(u[i]);
    out.emplace_back(p + 1, q, std::move(comps));
  }
  return out;
}

std::vector<int> free_dims(int d, int m) {
  std::vector<int> dims;
  int acc = 0;
  for (int x : witt_dimensions(d, m)) dims.push_back(acc += x);
  return dims;
}

int defect_order(const std::vector<int>& dims, const std::vector<int>& target) {
  for (std::size_t r = 0; r < dims.size(); ++r)
    if (dims[r] < target[r]) return static_cast<int>(r) + 1;
  return 0;
}

// Exponent vectors of total degree exactly deg in n variables, first variable favoured.
void monomials_of_degree(int n, int deg, Exponents& cur, int var, std::vector<Exponents>& out) {
  if (var == n - 1) {
    cur[var] = deg;
    out.push_back(cur);
    cur[var] = 0;
    return;
  }
  for (int e = deg; e >= 0; --e) {
    cur[var] = e;
    monomials_of_degree(n, deg - e, cur, var + 1, out);
  }
  cur[var] = 0;
}

struct Candidate {
  std::vector<std::pair<int, Exponents>> terms;  // (field index, monomial)
};

struct CuratedLift {
  std::string fingerprint;
  std::vector<std::vector<std::pair<int, std::string>>> rounds;  // (field index, u expression)
};

const std::vector<CuratedLift>& curated_table() {
  // Expressions use the lifted names x1..xp, t1..tk, y1..yq of the round's output.
  static const std::vector<CuratedLift> table = {
      {"p=2;q=0;X1=1,0;X2=0,x1", {{{1, "1"}}}},
      {"p=3;q=0;X1=1,0,0;X2=0,1,(1/2)*x1^2", {{{1, "x1"}}, {{1, "t1"}}}},
  };
  return table;
}

bool accept_round(const std::vector<int>& before, const std::vector<int>& after, int s) {
  for (std::size_t r = 0; r < before.size(); ++r) {
    const int want = static_cast<int>(r) + 1 < s ? before[r] : before[r] + 1;
    if (after[r] != want) return false;
  }
  return true;
}

}  // namespace

std::string field_fingerprint(const std::vector<PolyVectorField>& fields) {
  const int p = fields[0].p(), q = fields[0].q();
  const auto names = default_variable_names(p, q);
  std::string s = "p=" + std::to_string(p) + ";q=" + std::to_string(q);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string comps = fields[i].to_string(names);
    comps.erase(std::remove(comps.begin(), comps.end(), ' '), comps.end());
    s += ";X" + std::to_string(i + 1) + "=" + comps;
  }
  return s;
}

bool frame_is_free(CommutatorCache& cache, const std::vector<Rational>& point, int m) {
  const int d = static_cast<int>(cache.fields().size());
  RationalMatrix rows;
  for (const Word& w : lyndon_words(d, m)) rows.push_back(cache.lyndon(w).evaluate(point));
  return exact_rank(rows) == static_cast<int>(rows.size());
}

LiftedSystem lift(const std::vector<PolyVectorField>& fields, int m, const std::vector<Rational>& center,
                  const LiftOptions& opts) {
  if (fields.empty()) throw PreconditionError("lift needs at least one field");
  const int d = static_cast<int>(fields.size());
  const int p = fields[0].p(), q = fields[0].q();
  FreeNilpotentAlgebra alg(d, m);  // enforces the dimension cap
  if (static_cast<int>(center.size()) != p + q) throw PreconditionError("center has the wrong number of coordinates");
  auto step = hormander_step(fields, center, m);
  if (!step) throw PreconditionError("not bracket generating up to m = " + std::to_string(m) + " at the center");

  const std::vector<int> target = free_dims(d, m);
  LiftedSystem out;
  out.base = fields;
  out.p = p;
  out.q = q;
  out.m = m;

  std::vector<PolyVectorField> cur = fields;
  std::vector<Rational> pt = center;
  const std::string fp = field_fingerprint(fields);
  const CuratedLift* curated = nullptr;
  if (opts.use_table)
    for (const auto& entry : curated_table())
      if (entry.fingerprint == fp) curated = &entry;

  for (int round = 0;; ++round) {
    CommutatorCache cache(cur);
    std::vector<int> before = flag_at(cache, pt, m).dims;
    const int s = defect_order(before, target);
    if (s == 0) break;
    if (round >= alg.dim()) throw Error("lift: too many rounds");

    const int np = cur[0].p() + 1;
    const int nv = np + q;
    std::vector<Rational> next_pt = pt;
    next_pt.insert(next_pt.begin() + cur[0].p(), Rational(0));

    LiftRound result;
    result.defect_order = s;
    result.dims_before = before;
    auto try_u = [&](const std::vector<RationalPolynomial>& u, const std::string& source) {
      auto candidate = add_variable(cur, u);
      CommutatorCache cc(candidate);
      auto after = flag_at(cc, next_pt, m).dims;
      if (!accept_round(before, after, s)) return false;
      result.u = u;
      result.dims_after = after;
      result.source = source;
      cur = std::move(candidate);
      return true;
    };

    bool done = false;
    if (curated && round < static_cast<int>(curated->rounds.size())) {
      std::vector<RationalPolynomial> u(d, RationalPolynomial(nv));
      const auto names = lifted_names(p, np - p, q);
      for (const auto& [j, expr] : curated->rounds[round]) u[j] = parse_polynomial(expr, names);
      done = try_u(u, "table");
    }
    if (!done) {
      std::vector<Candidate> singles;
      for (int deg = 0; deg <= opts.degree_cap; ++deg) {
        std::vector<Exponents> monos;
        Exponents e(nv, 0);
        monomials_of_degree(nv, deg, e, 0, monos);
        for (int j = 0; j < d; ++j)
          for (const auto& mono : monos) singles.push_back({{{j, mono}}});
      }
      auto realize = [&](const Candidate& c) {
        std::vector<RationalPolynomial> u(d, RationalPolynomial(nv));
        for (const auto& [j, mono] : c.terms) u[j] += RationalPolynomial::monomial(mono, Rational(1));
        return u;
      };
      for (const auto& c : singles)
        if ((done = try_u(realize(c), "search"))) break;
      long tried = 0;
      for (std::size_t a = 0; a < singles.size() && !done; ++a)
        for (std::size_t b = a + 1; b < singles.size() && !done; ++b) {
          if (++tried > opts.max_pair_candidates) break;
          Candidate c{{singles[a].terms[0], singles[b].terms[0]}};
          done = try_u(realize(c), "search");
        }
    }
    if (!done) {
      std::string dims;
      for (int x : before) dims += (dims.empty() ? "" : ",") + std::to_string(x);
      throw Error("lift: search exhausted at round " + std::to_string(round + 1) + " (flag [" + dims +
                  "], need dim H^r + 1 for r >= " + std::to_string(s) + " with degree_cap " +
                  std::to_string(opts.degree_cap) + ")");
    }
    pt = next_pt;
    out.rounds.push_back(std::move(result));
  }

  out.k = cur[0].p() - p;
  out.lifted = cur;
  out.center = pt;
  out.variables = lifted_names(p, out.k, q);
  out.u_coeffs.assign(d, {});
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < out.k; ++j) out.u_coeffs[i].push_back(cur[i].component(p + j));

  // Later rounds widen earlier u's; store each round's u in the final variable space.
  for (std::size_t r = 0; r < out.rounds.size(); ++r)
    for (auto& u : out.rounds[r].u)
      for (int extra = static_cast<int>(r) + 1; extra < out.k; ++extra) u = widen(u, p + extra);

  if (opts.check_neighborhood) {
    std::vector<bool> vary(p + out.k + q, true);
    for (int j = 0; j < q; ++j) vary[p + out.k + j] = false;
    CommutatorCache cache(out.lifted);
    for (const auto& g : rational_grid(out.center, Rational(1, 8), Rational(1, 2), vary))
      if (!frame_is_free(cache, g, m)) throw Error("lift: lifted system is not free on the neighbourhood grid");
  }
  return out;
}

std::vector<std::vector<Rational>> rational_grid(const std::vector<Rational>& center, const Rational& step,
                                                 const Rational& radius, const std::vector<bool>& vary) {
  const int n = static_cast<int>(center.size());
  Rational ratio = radius / step;
  const int half = static_cast<int>(mpz_class(ratio.get_num() / ratio.get_den()).get_si());
  std::vector<int> idx(n, -half);
  for (int i = 0; i < n; ++i)
    if (!vary[i]) idx[i] = 0;
  std::vector<std::vector<Rational>> out;
  while (true) {
    std::vector<Rational> pt(n);
    for (int i = 0; i < n; ++i) pt[i] = center[i] + step * idx[i];
    out.push_back(std::move(pt));
    int i = n - 1;
    while (i >= 0 && (!vary[i] || idx[i] == half)) {
      if (vary[i]) idx[i] = -half;
      --i;
    }
    if (i < 0) break;
    ++idx[i];
  }
  return out;
}

bool LiftVerification::all_free() const {
  return std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.free; });
}

bool LiftVerification::all_full() const {
  return std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.full_flag; });
}

LiftVerification verify_lift(const LiftedSystem& sys, const std::vector<std::vector<Rational>>& samples) {
  LiftVerification rep;
  rep.projection_ok = sys.lifted.size() == sys.base.size();
  const int nv = sys.p + sys.k + sys.q;
  std::vector<int> embed(sys.p + sys.q);
  for (int i = 0; i < sys.p; ++i) embed[i] = i;
  for (int j = 0; j < sys.q; ++j) embed[sys.p + j] = sys.p + sys.k + j;
  for (std::size_t i = 0; i < sys.base.size() && rep.projection_ok; ++i)
    for (int c = 0; c < sys.p; ++c)
      if (sys.lifted[i].component(c) != sys.base[i].component(c).remap(embed, nv)) rep.projection_ok = false;
  CommutatorCache cache(sys.lifted);
  for (const auto& pt : samples) {
    LiftSampleReport s;
    s.point = pt;
    s.free = freeness_report(cache, pt, sys.m).free;
    s.full_flag = flag_at(cache, pt, sys.m).dims.back() == sys.p + sys.k;
    rep.samples.push_back(std::move(s));
  }
  return rep;
}

FieldSystem LiftedSystem::to_field_system(const std::string& name) const {
  FieldSystem fs;
  fs.name = name;
  fs.d = static_cast<int>(lifted.size());
  fs.p = p + k;
  fs.q = q;
  fs.variables = variables;
  fs.fields = lifted;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    std::string line = std::to_string(r + 1) + ": defect order " + std::to_string(rounds[r].defect_order) + ", " +
                       rounds[r].source + ";";
    for (std::size_t j = 0; j < rounds[r].u.size(); ++j)
      if (!rounds[r].u[j].is_zero())
        line += " X" + std::to_string(j + 1) + " += (" + rounds[r].u[j].to_string(variables) + ") d/d" +
                variables[p + r];
    fs.provenance.push_back(line);
  }
  return fs;
}

}  // namespace hypo
