#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hypo/errors.hpp"
#include "hypo/rational.hpp"

namespace hypo {

using Exponents = std::vector<int>;

inline int degree_of(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0); }

inline int weighted_degree_of(const Exponents& e, std::span<const int> weights) {
  int w = 0;
  for (std::size_t i = 0; i < e.size(); ++i) w += e[i] * weights[i];
  return w;
}

/// Sparse multivariate polynomial over a coefficient ring T (Rational or double).
template <class T>
class Polynomial {
 public:
  using Terms = std::map<Exponents, T>;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, const T& c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  static Polynomial variable(int nvars, int index) {
    assert(index >= 0 && index < nvars);
    Polynomial p(nvars);
    Exponents e(nvars, 0);
    e[index] = 1;
    p.add_term(e, T(1));
    return p;
  }

  static Polynomial monomial(const Exponents& e, const T& c) {
    Polynomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
  }

  int nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int total_degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, degree_of(e));
    return d;
  }

  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && degree_of(terms_.begin()->first) == 0);
  }

  T constant_term() const {
    auto it = terms_.find(Exponents(nvars_, 0));
    return it == terms_.end() ? T(0) : it->second;
  }

  T coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? T(0) : it->second;
  }

  /// True if the variable with the given index occurs in some term.
  bool depends_on(int var) const {
    for (const auto& [e, c] : terms_)
      if (e[var] != 0) return true;
    return false;
  }

  void add_term(const Exponents& e, const T& c) {
    assert(static_cast<int>(e.size()) == nvars_);
    if (c == T(0)) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == T(0)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, T(-c));
    return *this;
  }
  Polynomial& operator*=(const T& s) {
    if (s == T(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const T& s) { return a *= s; }
  friend Polynomial operator*(const T& s, Polynomial a) { return a *= s; }
  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& [e, c] : r.terms_) c = -c;
    return r;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_compatible(b);
    Polynomial r(a.nvars_);
    Exponents e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        for (int i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

  Polynomial pow(int n) const {
    Polynomial r = constant(nvars_, T(1));
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
  }

  Polynomial derivative(int var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponents f = e;
      f[var] -= 1;
      r.add_term(f, c * T(e[var]));
    }
    return r;
  }

  /// Antiderivative in one variable, vanishing at 0.
  Polynomial integral(int var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
      Exponents f = e;
      f[var] += 1;
      r.add_term(f, c / T(f[var]));
    }
    return r;
  }

  /// Drops terms of weighted degree above max_weight.
  Polynomial truncated(std::span<const int> weights, int max_weight) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_)
      if (weighted_degree_of(e, weights) <= max_weight) r.terms_.emplace(e, c);
    return r;
  }

  /// Evaluates at a point whose coordinates live in a (possibly different) ring S.
  template <class S>
  S evaluate(std::span<const S> point) const {
    assert(static_cast<int>(point.size()) == nvars_);
    S acc = scalar_cast<S>(T(0));
    if (terms_.empty()) return acc;
    int maxdeg = 0;
    for (const auto& [e, c] : terms_)
      for (int x : e) maxdeg = std::max(maxdeg, x);
    std::vector<std::vector<S>> powers(nvars_);
    for (int i = 0; i < nvars_; ++i) {
      powers[i].reserve(maxdeg + 1);
      powers[i].push_back(scalar_cast<S>(T(1)));
      for (int k = 1; k <= maxdeg; ++k) powers[i].push_back(powers[i].back() * point[i]);
    }
    for (const auto& [e, c] : terms_) {
      S term = scalar_cast<S>(c);
      for (int i = 0; i < nvars_; ++i)
        if (e[i] != 0) term = term * powers[i][e[i]];
      acc = acc + term;
    }
    return acc;
  }

  template <class S>
  S evaluate(const std::vector<S>& point) const {
    return evaluate(std::span<const S>(point));
  }

  /// Substitutes images[i] for variable i; all images share one variable count.
  Polynomial compose(const std::vector<Polynomial>& images) const {
    assert(static_cast<int>(images.size()) == nvars_);
    const int out_vars = images.empty() ? 0 : images.front().nvars();
    Polynomial r(out_vars);
    std::vector<std::vector<Polynomial>> powers(nvars_);
    for (const auto& [e, c] : terms_) {
      Polynomial term = constant(out_vars, c);
      for (int i = 0; i < nvars_; ++i) {
        if (e[i] == 0) continue;
        auto& pw = powers[i];
        if (pw.empty()) pw.push_back(constant(out_vars, T(1)));
        while (static_cast<int>(pw.size()) <= e[i]) pw.push_back(pw.back() * images[i]);
        term = term * pw[e[i]];
      }
      r += term;
    }
    return r;
  }

  /// Fixes variable `var` to a value, keeping the variable count.
  Polynomial substitute(int var, const T& value) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
      T v = c;
      for (int k = 0; k < e[var]; ++k) v *= value;
      Exponents f = e;
      f[var] = 0;
      r.add_term(f, v);
    }
    return r;
  }

  /// Re-indexes variables: variable i moves to position map[i] in a space of new_nvars.
  Polynomial remap(const std::vector<int>& map, int new_nvars) const {
    Polynomial r(new_nvars);
    for (const auto& [e, c] : terms_) {
      Exponents f(new_nvars, 0);
      for (int i = 0; i < nvars_; ++i) {
        if (e[i] == 0) continue;
        if (map[i] < 0) throw Error("remap drops a variable that occurs in the polynomial");
        f[map[i]] += e[i];
      }
      r.add_term(f, c);
    }
    return r;
  }

  template <class U>
  Polynomial<U> cast() const {
    Polynomial<U> r(nvars_);
    for (const auto& [e, c] : terms_) r.add_term(e, scalar_cast<U>(c));
    return r;
  }

  std::string to_string(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      std::ostringstream cs;
      cs << c;
      std::string coef = cs.str();
      bool negative = !coef.empty() && coef[0] == '-';
      if (negative) coef = coef.substr(1);
      if (first) {
        if (negative) os << "-";
      } else {
        os << (negative ? " - " : " + ");
      }
      first = false;
      bool has_var = degree_of(e) > 0;
      bool need_coef = !has_var || coef != "1";
      if (need_coef) os << (coef.find('/') != std::string::npos && has_var ? "(" + coef + ")" : coef);
      bool first_factor = !need_coef;
      for (int i = 0; i < nvars_; ++i) {
        if (e[i] == 0) continue;
        if (!first_factor) os << "*";
        os << names[i];
        if (e[i] > 1) os << "^" << e[i];
        first_factor = false;
      }
    }
    return os.str();
  }

 private:
  void check_compatible(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw Error("polynomial variable counts differ");
  }

  int nvars_ = 0;
  Terms terms_;
};

using RationalPolynomial = Polynomial<Rational>;
using RealPolynomial = Polynomial<double>;

/// Default variable names x1..xp, y1..yq.
std::vector<std::string> default_variable_names(int p, int q);

}  // namespace hypo
