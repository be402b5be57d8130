#include "hypo/liealg.hpp"

#include <algorithm>
#include <functional>
#include <random>

namespace hypo {

namespace {

using AssocPoly = std::map<Word, Rational>;

AssocPoly commutator(const AssocPoly& a, const AssocPoly& b) {
  AssocPoly out;
  auto accumulate = [&out](const AssocPoly& x, const AssocPoly& y, int sign) {
    for (const auto& [wx, cx] : x)
      for (const auto& [wy, cy] : y) {
        Word w = wx;
        w.insert(w.end(), wy.begin(), wy.end());
        Rational& slot = out[w];
        slot += sign * cx * cy;
      }
  };
  accumulate(a, b, 1);
  accumulate(b, a, -1);
  std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
  return out;
}

std::string bracketing_of(const Word& w) {
  if (w.size() == 1) return std::to_string(w[0] + 1);
  auto [u, v] = standard_factorization(w);
  return "[" + bracketing_of(u) + "," + bracketing_of(v) + "]";
}

int mobius(int n) {
  int result = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  if (n > 1) result = -result;
  return result;
}

Rational factorial(int n) {
  Integer f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return Rational(f);
}

}  // namespace

bool is_lyndon(const Word& w) {
  if (w.empty()) return false;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!std::lexicographical_compare(w.begin(), w.end(), w.begin() + i, w.end())) return false;
  return true;
}

std::vector<Word> lyndon_words(int d, int max_len) {
  std::vector<Word> out;
  if (d < 1 || max_len < 1) return out;
  // Duval's generation of all Lyndon words up to max_len in lex order.
  Word w{-1};
  while (!w.empty()) {
    ++w.back();
    out.push_back(w);
    const std::size_t n = w.size();
    while (static_cast<int>(w.size()) < max_len) {
      const int c = w[w.size() - n];
      w.push_back(c);
    }
    while (!w.empty() && w.back() == d - 1) w.pop_back();
  }
  std::stable_sort(out.begin(), out.end(), [](const Word& a, const Word& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

std::pair<Word, Word> standard_factorization(const Word& w) {
  if (w.size() < 2) throw PreconditionError("standard factorization needs a word of length >= 2");
  for (std::size_t i = 1; i < w.size(); ++i) {
    Word v(w.begin() + i, w.end());
    if (is_lyndon(v)) return {Word(w.begin(), w.begin() + i), v};
  }
  throw Error("word has no proper Lyndon suffix");
}

std::vector<int> witt_dimensions(int d, int m) {
  if (d < 1 || m < 1) throw PreconditionError("witt_dimensions needs d >= 1 and m >= 1");
  std::vector<int> dims;
  for (int k = 1; k <= m; ++k) {
    Integer sum = 0;
    for (int e = 1; e <= k; ++e) {
      if (k % e) continue;
      Integer pw;
      mpz_ui_pow_ui(pw.get_mpz_t(), d, k / e);
      sum += mobius(e) * pw;
    }
    dims.push_back(static_cast<int>(Integer(sum / k).get_si()));
  }
  return dims;
}

FreeNilpotentAlgebra::FreeNilpotentAlgebra(int d, int m, int dim_cap) : d_(d), m_(m) {
  if (d < 1 || m < 1) throw PreconditionError("free nilpotent algebra needs d >= 1 and m >= 1");
  layer_dims_ = witt_dimensions(d, m);
  long total = 0;
  for (int x : layer_dims_) total += x;
  if (total > dim_cap)
    throw ResourceError("dim g_{" + std::to_string(d) + "," + std::to_string(m) + "} = " + std::to_string(total) +
                        " exceeds the cap " + std::to_string(dim_cap));

  for (const Word& w : lyndon_words(d, m)) {
    BasisElement b;
    b.word = w;
    b.degree = b.k = static_cast<int>(w.size());
    b.bracketing = bracketing_of(w);
    index_[w] = static_cast<int>(basis_.size());
    basis_.push_back(std::move(b));
  }
  std::vector<int> counter(m + 1, 0);
  for (auto& b : basis_) {
    b.j = ++counter[b.k];
    weights_.push_back(b.k);
    Q_ += b.k;
  }

  lie_polys_.resize(basis_.size());
  for (std::size_t p = 0; p < basis_.size(); ++p) {
    const Word& w = basis_[p].word;
    if (w.size() == 1) {
      lie_polys_[p][w] = 1;
    } else {
      auto [u, v] = standard_factorization(w);
      lie_polys_[p] = commutator(lie_polys_[index_.at(u)], lie_polys_[index_.at(v)]);
    }
  }

  const int n = dim();
  table_.assign(std::size_t(n) * n, {});
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      if (weights_[p] + weights_[q] > m_) continue;
      std::vector<Rational> c = decompose(commutator(lie_polys_[p], lie_polys_[q]));
      for (int r = 0; r < n; ++r) {
        if (c[r] == 0) continue;
        table_[p * n + q].push_back({r, c[r], c[r].get_d()});
        table_[q * n + p].push_back({r, Rational(-c[r]), -c[r].get_d()});
      }
    }
  build_dynkin();
}

int FreeNilpotentAlgebra::index_of(const Word& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

Rational FreeNilpotentAlgebra::structure_constant(int p, int q, int r) const {
  for (const auto& t : structure(p, q))
    if (t.r == r) return t.c;
  return 0;
}

std::vector<Rational> FreeNilpotentAlgebra::decompose(const std::map<Word, Rational>& poly) const {
  std::vector<Rational> coeffs(dim(), Rational(0));
  AssocPoly rest = poly;
  std::erase_if(rest, [](const auto& kv) { return kv.second == 0; });
  while (!rest.empty()) {
    // Lex-smallest word of the shortest length present; the leading word of a Lie element is Lyndon.
    auto lead = std::min_element(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
      return a.first.size() != b.first.size() ? a.first.size() < b.first.size() : a.first < b.first;
    });
    const int idx = index_of(lead->first);
    if (idx < 0) throw PreconditionError("polynomial is not a Lie element of g_{d,m}");
    const Rational c = lead->second;
    coeffs[idx] += c;
    for (const auto& [w, a] : lie_polys_[idx]) {
      Rational& slot = rest[w];
      slot -= c * a;
      if (slot == 0) rest.erase(w);
    }
  }
  return coeffs;
}

void FreeNilpotentAlgebra::build_dynkin() {
  dynkin_.assign(m_ + 1, {});
  for (int len = 1; len <= m_; ++len) {
    dynkin_[len].assign(std::size_t(1) << len, {Rational(0), 0.0});
    for (std::uint32_t w = 0; w < (1u << len); ++w) {
      // Letters from the most significant bit: 0 = X, 1 = Y.
      std::vector<int> letters(len);
      for (int i = 0; i < len; ++i) letters[i] = (w >> (len - 1 - i)) & 1u;
      if (len >= 2 && letters[len - 1] == letters[len - 2]) continue;
      Rational total = 0;
      // Split into blocks X^r Y^s with r + s > 0.
      std::function<void(int, int, Rational)> rec = [&](int pos, int blocks, Rational denom) {
        if (pos == len) {
          Rational term = Rational(blocks % 2 == 1 ? 1 : -1) / (Rational(blocks) * Rational(len) * denom);
          total += term;
          return;
        }
        int r_max = 0;
        while (pos + r_max < len && letters[pos + r_max] == 0) ++r_max;
        for (int r = 0; r <= r_max; ++r) {
          int s_max = 0;
          while (pos + r + s_max < len && letters[pos + r + s_max] == 1) ++s_max;
          for (int s = (r == 0 ? 1 : 0); s <= s_max; ++s) {
            // Stopping inside the run of X's means the block has no Y's.
            if (r < r_max && s > 0) continue;
            rec(pos + r + s, blocks + 1, denom * factorial(r) * factorial(s));
          }
        }
      };
      rec(0, 0, Rational(1));
      dynkin_[len][w] = {total, total.get_d()};
    }
  }
}

double FreeNilpotentAlgebra::homogeneous_norm(const std::vector<double>& u) const {
  check_size(u.size());
  double s = 0;
  for (int i = 0; i < dim(); ++i) s = std::max(s, std::pow(std::abs(u[i]), 1.0 / weights_[i]));
  if (s == 0) return 0;
  int mfact = 1;
  for (int i = 2; i <= m_; ++i) mfact *= i;
  const double big = 2.0 * mfact;
  double acc = 0;
  for (int i = 0; i < dim(); ++i) {
    const double scaled = std::abs(u[i]) / std::pow(s, weights_[i]);
    acc += std::pow(scaled, big / weights_[i]);
  }
  return s * std::pow(acc, 1.0 / big);
}

const std::vector<std::vector<RationalPolynomial>>& FreeNilpotentAlgebra::left_invariant_fields() const {
  if (!left_fields_.empty()) return left_fields_;
  const int n = dim();
  // Coefficients B_k^+ / k! of z/(1 - e^{-z}).
  std::vector<Rational> bern = {Rational(1), Rational(1, 2), Rational(1, 6), Rational(0), Rational(-1, 30),
                                Rational(0), Rational(1, 42), Rational(0), Rational(-1, 30)};
  if (m_ > static_cast<int>(bern.size())) throw ResourceError("left-invariant fields limited to step 9");
  const RationalPolynomial zero(n);
  std::vector<std::vector<RationalPolynomial>> fields(n);
  for (int i = 0; i < n; ++i) {
    std::vector<RationalPolynomial> cur(n, zero);
    cur[i] = RationalPolynomial::constant(n, Rational(1));
    std::vector<RationalPolynomial> acc = cur;
    for (int k = 1; k < m_; ++k) {
      std::vector<RationalPolynomial> next(n, zero);
      for (int p = 0; p < n; ++p) {
        const RationalPolynomial up = RationalPolynomial::variable(n, p);
        for (int q = 0; q < n; ++q) {
          if (cur[q].is_zero()) continue;
          const RationalPolynomial prod = up * cur[q];
          for (const auto& t : structure(p, q)) next[t.r] += prod * t.c;
        }
      }
      cur = std::move(next);
      const Rational c = bern[k] / factorial(k);
      if (c != 0)
        for (int r = 0; r < n; ++r) acc[r] += cur[r] * c;
    }
    fields[i] = std::move(acc);
  }
  left_fields_ = std::move(fields);
  return left_fields_;
}

nlohmann::json FreeNilpotentAlgebra::to_json() const {
  nlohmann::json j;
  j["d"] = d_;
  j["m"] = m_;
  j["layer_dims"] = layer_dims_;
  j["weights"] = weights_;
  j["Q"] = Q_;
  nlohmann::json basis = nlohmann::json::array();
  for (const auto& b : basis_) basis.push_back({{"j", b.j}, {"k", b.k}, {"bracketing", b.bracketing}});
  j["basis"] = basis;
  nlohmann::json sc = nlohmann::json::array();
  for (int p = 0; p < dim(); ++p)
    for (int q = 0; q < dim(); ++q)
      for (const auto& t : structure(p, q)) sc.push_back({p, q, t.r, to_string(t.c)});
  j["structure_constants"] = sc;
  return j;
}

double haar_scaling_check(const FreeNilpotentAlgebra& alg, double t, int n_samples, std::uint64_t seed) {
  if (!(t > 0) || t == 1) throw PreconditionError("haar_scaling_check needs t > 0 and t != 1");
  if (n_samples < 1) throw PreconditionError("haar_scaling_check needs at least one sample");
  const int n = alg.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> u(n);
  // Ball B = {|u| <= 1} sampled in [-1,1]^N; δ_t(B) sampled in the box Π[-t^k, t^k].
  auto fraction = [&](double scale) {
    long hits = 0;
    for (int s = 0; s < n_samples; ++s) {
      for (int i = 0; i < n; ++i) u[i] = unit(rng) * std::pow(scale, alg.weights()[i]);
      if (alg.homogeneous_norm(u) <= scale) ++hits;
    }
    return static_cast<double>(hits) / n_samples;
  };
  const double f1 = fraction(1.0);
  const double f2 = fraction(t);
  if (f1 == 0 || f2 == 0) throw NumericalError("no Monte Carlo samples landed in the ball");
  // vol(box_t) / vol(box_1) = t^Q exactly.
  double log_box = 0;
  for (int w : alg.weights()) log_box += w * std::log(t);
  return (log_box + std::log(f2 / f1)) / std::log(t);
}

}  // namespace hypo
