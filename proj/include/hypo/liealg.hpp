#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "hypo/errors.hpp"
#include "hypo/polynomial.hpp"
#include "hypo/rational.hpp"

namespace hypo {

using Word = std::vector<int>;  // 0-based generator indices

/// Lyndon words of length 1..max_len over {0..d-1}, sorted by (length, lex).
std::vector<Word> lyndon_words(int d, int max_len);
bool is_lyndon(const Word& w);
/// Standard factorization w = uv with v the longest proper Lyndon suffix.
std::pair<Word, Word> standard_factorization(const Word& w);

/// dim V^k for k = 1..m (necklace polynomial).
std::vector<int> witt_dimensions(int d, int m);

struct BasisElement {
  Word word;
  int degree = 0;
  std::string bracketing;  // e.g. "[1,[1,2]]", 1-based letters
  int j = 0;               // position within its layer, 1-based
  int k = 0;               // layer (== degree)
};

/// Free nilpotent Lie algebra g_{d,m} on the Lyndon basis.
class FreeNilpotentAlgebra {
 public:
  struct Term {
    int r;
    Rational c;
    double cd;
  };

  static constexpr int kDefaultDimCap = 200;

  FreeNilpotentAlgebra(int d, int m, int dim_cap = kDefaultDimCap);

  int d() const { return d_; }
  int m() const { return m_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int Q() const { return Q_; }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  const std::vector<int>& weights() const { return weights_; }
  const std::vector<BasisElement>& basis() const { return basis_; }

  /// Index of the basis element with the given Lyndon word, or -1.
  int index_of(const Word& w) const;

  /// [e_p, e_q] as a sparse combination of basis elements.
  const std::vector<Term>& structure(int p, int q) const { return table_[p * dim() + q]; }
  Rational structure_constant(int p, int q, int r) const;

  /// Lie polynomial of basis element p in the free associative algebra, as word -> coefficient.
  const std::map<Word, Rational>& lie_polynomial(int p) const { return lie_polys_[p]; }

  /// Expresses a homogeneous Lie polynomial in the basis; throws if it is not a Lie element.
  std::vector<Rational> decompose(const std::map<Word, Rational>& poly) const;

  template <class T>
  std::vector<T> bracket(const std::vector<T>& a, const std::vector<T>& b) const {
    check_size(a.size());
    check_size(b.size());
    std::vector<T> out(dim(), T(0));
    for (int p = 0; p < dim(); ++p) {
      if (a[p] == T(0)) continue;
      for (int q = 0; q < dim(); ++q) {
        if (b[q] == T(0) || p == q) continue;
        const T ab = a[p] * b[q];
        for (const auto& t : structure(p, q)) out[t.r] += ab * coef<T>(t);
      }
    }
    return out;
  }

  /// Group law in first-kind coordinates (Dynkin series truncated at degree m).
  template <class T>
  std::vector<T> bch(const std::vector<T>& u, const std::vector<T>& v) const {
    check_size(u.size());
    check_size(v.size());
    std::vector<T> z(dim(), T(0));
    // Right-nested brackets of suffixes, keyed by the bit pattern of the word (bit = 1 for Y).
    std::vector<std::vector<std::vector<T>>> nested(m_ + 1);
    nested[1] = {u, v};
    for (int len = 2; len <= m_; ++len) {
      nested[len].resize(std::size_t(1) << len);
      for (std::uint32_t w = 0; w < (1u << len); ++w) {
        const std::uint32_t first = (w >> (len - 1)) & 1u;
        const std::uint32_t rest = w & ((1u << (len - 1)) - 1u);
        nested[len][w] = bracket(nested[1][first], nested[len - 1][rest]);
      }
    }
    for (int len = 1; len <= m_; ++len)
      for (std::uint32_t w = 0; w < (1u << len); ++w) {
        const auto& c = dynkin_[len][w];
        if (c.first == 0) continue;
        const T cw = coef<T>(c);
        for (int i = 0; i < dim(); ++i) z[i] += cw * nested[len][w][i];
      }
    return z;
  }

  template <class T>
  std::vector<T> inverse(const std::vector<T>& u) const {
    std::vector<T> r = u;
    for (auto& x : r) x = -x;
    return r;
  }

  template <class T>
  std::vector<T> dilate(const T& t, const std::vector<T>& u) const {
    if (!(t > T(0))) throw PreconditionError("dilation factor must be positive");
    check_size(u.size());
    std::vector<T> r = u;
    for (int i = 0; i < dim(); ++i)
      for (int k = 0; k < weights_[i]; ++k) r[i] *= t;
    return r;
  }

  /// (Σ |u_i|^{2m!/w_i})^{1/(2m!)}, evaluated with max-scaling.
  double homogeneous_norm(const std::vector<double>& u) const;

  /// Left-invariant fields Y_i as polynomial vector fields on R^N: entry [i][r] is the
  /// r-th component of Y_i.
  const std::vector<std::vector<RationalPolynomial>>& left_invariant_fields() const;

  nlohmann::json to_json() const;

 private:
  template <class T>
  static T coef(const Term& t) {
    if constexpr (std::is_same_v<T, double>) {
      return t.cd;
    } else if constexpr (std::is_same_v<T, Rational>) {
      return t.c;
    } else {
      return T(t.c);
    }
  }
  template <class T>
  static T coef(const std::pair<Rational, double>& c) {
    if constexpr (std::is_same_v<T, double>) {
      return c.second;
    } else {
      return T(c.first);
    }
  }

  void check_size(std::size_t n) const {
    if (static_cast<int>(n) != dim()) throw PreconditionError("element size does not match algebra dimension");
  }

  void build_dynkin();

  int d_;
  int m_;
  int Q_ = 0;
  std::vector<int> layer_dims_;
  std::vector<int> weights_;
  std::vector<BasisElement> basis_;
  std::vector<std::map<Word, Rational>> lie_polys_;
  std::map<Word, int> index_;
  std::vector<std::vector<Term>> table_;
  std::vector<std::vector<std::pair<Rational, double>>> dynkin_;
  mutable std::vector<std::vector<RationalPolynomial>> left_fields_;
};

/// Monte Carlo estimate of the volume scaling exponent of δ_t on the unit norm ball.
double haar_scaling_check(const FreeNilpotentAlgebra& alg, double t, int n_samples, std::uint64_t seed = 42);

}  // namespace hypo
