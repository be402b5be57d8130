#pragma once

#include <array>
#include <cmath>

namespace hypo {

namespace jet_detail {

constexpr int binom(int n, int k) {
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <int NV, int ORD>
struct Tables {
  static constexpr int size = binom(NV + ORD, ORD);
  struct Triple {
    int a, b, c;
  };
  std::array<std::array<int, NV>, size> index{};
  std::array<int, size> degree{};
  std::array<std::array<int, NV>, size> shift_up{};  // index of α + e_i, -1 if beyond ORD

  constexpr int find(const std::array<int, NV>& e) const {
    for (int k = 0; k < size; ++k)
      if (index[k] == e) return k;
    return -1;
  }

  constexpr Tables() {
    int n = 0;
    for (int deg = 0; deg <= ORD; ++deg) {
      // All exponent vectors of total degree deg in lexicographically decreasing order.
      std::array<int, NV> e{};
      e[0] = deg;
      while (true) {
        index[n] = e;
        degree[n] = deg;
        ++n;
        // Next composition of deg in lexicographically decreasing order.
        int j = NV - 2;
        while (j >= 0 && e[j] == 0) --j;
        if (j < 0) break;
        --e[j];
        int rest = 0;
        for (int i = j + 1; i < NV; ++i) rest += e[i], e[i] = 0;
        e[j + 1] = rest + 1;
      }
    }
    for (int a = 0; a < size; ++a)
      for (int i = 0; i < NV; ++i) {
        auto s = index[a];
        ++s[i];
        shift_up[a][i] = degree[a] < ORD ? find(s) : -1;
      }
  }

  static const Tables& get() {
    static constexpr Tables t;
    return t;
  }
};

template <int NV, int ORD>
struct Products {
  using Triple = typename Tables<NV, ORD>::Triple;
  static constexpr int count() {
    Tables<NV, ORD> t;
    int c = 0;
    for (int a = 0; a < t.size; ++a)
      for (int b = 0; b < t.size; ++b)
        if (t.degree[a] + t.degree[b] <= ORD) ++c;
    return c;
  }
  static constexpr std::array<Triple, count()> make() {
    Tables<NV, ORD> t;
    std::array<Triple, count()> p{};
    int c = 0;
    for (int a = 0; a < t.size; ++a)
      for (int b = 0; b < t.size; ++b) {
        if (t.degree[a] + t.degree[b] > ORD) continue;
        std::array<int, NV> s{};
        for (int i = 0; i < NV; ++i) s[i] = t.index[a][i] + t.index[b][i];
        p[c++] = {a, b, t.find(s)};
      }
    return p;
  }
  static constexpr std::array<Triple, count()> table = make();
};

}  // namespace jet_detail

/// Truncated Taylor expansion in NV variables up to total order ORD.
/// Coefficient k multiplies ε^α / α! is not used: c[k] is the plain monomial coefficient.
template <int NV, int ORD>
class Jet {
 public:
  using T = jet_detail::Tables<NV, ORD>;
  static constexpr int size = T::size;
  static constexpr int nvars = NV;
  static constexpr int order = ORD;

  Jet() { c_.fill(0.0); }
  Jet(double v) {  // NOLINT: implicit from scalar
    c_.fill(0.0);
    c_[0] = v;
  }
  static Jet variable(int i, double value) {
    Jet j(value);
    if (ORD > 0) j.c_[1 + i] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }
  double& operator[](int k) { return c_[k]; }
  double operator[](int k) const { return c_[k]; }
  static const std::array<int, NV>& exponent(int k) { return T::get().index[k]; }
  static int degree(int k) { return T::get().degree[k]; }

  /// Coefficient of ε^α with the given exponent; 0 if beyond the order.
  double coeff(const std::array<int, NV>& e) const {
    int k = T::get().find(e);
    return k < 0 ? 0.0 : c_[k];
  }
  /// ∂^α at the expansion point: α! times the coefficient.
  double derivative_value(const std::array<int, NV>& e) const {
    double f = 1;
    for (int i = 0; i < NV; ++i)
      for (int k = 2; k <= e[i]; ++k) f *= k;
    return f * coeff(e);
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < size; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < size; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    constexpr auto& table = jet_detail::Products<NV, ORD>::table;
    for (std::size_t k = 0; k < table.size(); ++k) r.c_[table[k].c] += a.c_[table[k].a] * b.c_[table[k].b];
    return r;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

  /// f(this) given f^(k)(value) for k = 0..ORD.
  Jet compose(const std::array<double, ORD + 1>& derivs) const {
    Jet nil = *this;
    nil.c_[0] = 0;
    Jet r(derivs[0]);
    if constexpr (ORD == 0) return r;
    Jet power = nil;
    r += nil * derivs[1];
    double fact = 1;
    for (int k = 2; k <= ORD; ++k) {
      power = power * nil;
      fact *= k;
      r += power * (derivs[k] / fact);
    }
    return r;
  }

  Jet reciprocal() const {
    std::array<double, ORD + 1> d;
    const double a = c_[0];
    double v = 1 / a;
    for (int k = 0; k <= ORD; ++k) {
      d[k] = v;
      v *= -(k + 1) / a;
    }
    return compose(d);
  }

  /// Partial derivative; the top-order coefficients become zero (invalid).
  Jet derivative(int i) const {
    const auto& t = T::get();
    Jet r;
    for (int k = 0; k < size; ++k) {
      int up = t.shift_up[k][i];
      if (up >= 0) r.c_[k] = (t.index[k][i] + 1) * c_[up];
    }
    return r;
  }

 private:
  std::array<double, size> c_;
};

template <int NV, int ORD>
Jet<NV, ORD> exp(const Jet<NV, ORD>& x) {
  std::array<double, ORD + 1> d;
  d.fill(std::exp(x.value()));
  return x.compose(d);
}

template <int NV, int ORD>
Jet<NV, ORD> cos(const Jet<NV, ORD>& x) {
  std::array<double, ORD + 1> d;
  const double c = std::cos(x.value()), s = std::sin(x.value());
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= ORD; ++k) d[k] = cyc[k % 4];
  return x.compose(d);
}

template <int NV, int ORD>
Jet<NV, ORD> sin(const Jet<NV, ORD>& x) {
  std::array<double, ORD + 1> d;
  const double c = std::cos(x.value()), s = std::sin(x.value());
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= ORD; ++k) d[k] = cyc[k % 4];
  return x.compose(d);
}

template <int NV, int ORD>
Jet<NV, ORD> pow(const Jet<NV, ORD>& x, double p) {
  std::array<double, ORD + 1> d;
  const double a = x.value();
  double coef = 1;
  for (int k = 0; k <= ORD; ++k) {
    d[k] = coef * std::pow(a, p - k);
    coef *= p - k;
  }
  return x.compose(d);
}

template <int NV, int ORD>
Jet<NV, ORD> log(const Jet<NV, ORD>& x) {
  std::array<double, ORD + 1> d;
  const double a = x.value();
  d[0] = std::log(a);
  double coef = 1;  // (−1)^{k−1} (k−1)!
  for (int k = 1; k <= ORD; ++k) {
    d[k] = coef / std::pow(a, k);
    coef *= -k;
  }
  return x.compose(d);
}

template <int NV, int ORD>
Jet<NV, ORD> abs(const Jet<NV, ORD>& x) {
  return x.value() < 0 ? -x : x;
}

inline double value_of(double x) { return x; }
template <int NV, int ORD>
double value_of(const Jet<NV, ORD>& x) {
  return x.value();
}

}  // namespace hypo
