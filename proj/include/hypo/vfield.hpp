#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypo/exact_linalg.hpp"
#include "hypo/liealg.hpp"
#include "hypo/polynomial.hpp"

namespace hypo {

/// Vector field Σ X^j(x, y) ∂/∂x_j on a chart with base variables x_1..x_p and
/// transverse parameters y_1..y_q. Components only point along the base.
class PolyVectorField {
 public:
  PolyVectorField() = default;
  PolyVectorField(int p, int q);
  PolyVectorField(int p, int q, std::vector<RationalPolynomial> components);

  int p() const { return p_; }
  int q() const { return q_; }
  int nvars() const { return p_ + q_; }
  const std::vector<RationalPolynomial>& components() const { return comps_; }
  const RationalPolynomial& component(int i) const { return comps_[i]; }
  bool is_zero() const;

  /// X f = Σ_j X^j ∂f/∂x_j.
  RationalPolynomial apply(const RationalPolynomial& f) const;

  template <class S>
  std::vector<S> evaluate(const std::vector<S>& point) const {
    std::vector<S> v;
    v.reserve(comps_.size());
    for (const auto& c : comps_) v.push_back(c.evaluate(point));
    return v;
  }

  PolyVectorField& operator+=(const PolyVectorField& o);
  PolyVectorField& operator-=(const PolyVectorField& o);
  friend PolyVectorField operator+(PolyVectorField a, const PolyVectorField& b) { return a += b; }
  friend PolyVectorField operator-(PolyVectorField a, const PolyVectorField& b) { return a -= b; }
  friend PolyVectorField operator*(const Rational& s, PolyVectorField a);
  friend bool operator==(const PolyVectorField& a, const PolyVectorField& b) {
    return a.p_ == b.p_ && a.q_ == b.q_ && a.comps_ == b.comps_;
  }

  std::string to_string(const std::vector<std::string>& names) const;

 private:
  int p_ = 0;
  int q_ = 0;
  std::vector<RationalPolynomial> comps_;
};

PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y);

/// Right-nested brackets X_[I] = [X_{i1}, [X_{i2}, ... X_{ik}]] with suffix memoization.
class CommutatorCache {
 public:
  explicit CommutatorCache(std::vector<PolyVectorField> fields);
  const PolyVectorField& get(const Word& I);
  /// Bracketing of a Lyndon word through its standard factorization.
  const PolyVectorField& lyndon(const Word& w);
  const std::vector<PolyVectorField>& fields() const { return fields_; }

 private:
  std::vector<PolyVectorField> fields_;
  std::map<Word, PolyVectorField> nested_;
  std::map<Word, PolyVectorField> lyndon_;
};

PolyVectorField basic_commutator(const std::vector<PolyVectorField>& fields, const Word& I);

/// Coefficient A_IJ of the word J in the associative expansion of the right-nested bracket of I.
Rational structural_coefficient(const Word& I, const Word& J);

/// All words of the given length over d letters, lex order.
std::vector<Word> words_of_length(int d, int len);

struct Flag {
  std::vector<Rational> point;
  std::vector<int> dims;                      // dims[k-1] = dim H^k
  std::vector<std::vector<Word>> spanning_words;  // words of length k that extended the span
};

Flag flag_at(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point, int m);
Flag flag_at(CommutatorCache& cache, const std::vector<Rational>& point, int m);

/// Least m <= max_m with dim H^m = p, or nullopt.
std::optional<int> hormander_step(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point,
                                  int max_m);

struct FreenessReport {
  bool free = false;
  int rank = 0;
  int target = 0;        // dim g_{d,m}
  bool relations_universal = false;  // every null vector a has Σ a_I A_IJ = 0
};

FreenessReport freeness_report(CommutatorCache& cache, const std::vector<Rational>& point, int m);
bool is_free(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point, int m);

/// Fields X_{[w]} for the Lyndon words w of length <= m, in basis order of g_{d,m}.
std::vector<PolyVectorField> lyndon_frame(const std::vector<PolyVectorField>& fields, int m);

/// Time-one flow of Σ u_k F_k as polynomials in (x0_1..x0_p, u_1..u_N, y_1..y_q), or nullopt when
/// the combined field is not triangular (some component depends, possibly through others, on itself).
std::optional<std::vector<RationalPolynomial>> triangular_flow(const std::vector<PolyVectorField>& frame);

struct FlowOptions {
  double tol = 1e-12;
  double chart_radius = 1e6;
  int max_halvings = 16;
};

/// Time-one flows of a fixed frame. The symbolic Picard solution is built once when the
/// combined field is triangular; otherwise evaluation falls back to adaptive RK4.
class FrameFlow {
 public:
  explicit FrameFlow(std::vector<PolyVectorField> frame, FlowOptions opts = {});

  bool is_exact() const { return exact_.has_value(); }
  const std::vector<PolyVectorField>& frame() const { return frame_; }
  /// Polynomials in (x0, u, y); only available when is_exact().
  const std::vector<RationalPolynomial>& polynomials() const;

  std::vector<double> operator()(const std::vector<double>& u, const std::vector<double>& start,
                                 const std::vector<double>& y) const;
  std::vector<Rational> exact(const std::vector<Rational>& u, const std::vector<Rational>& start,
                              const std::vector<Rational>& y) const;

 private:
  std::vector<PolyVectorField> frame_;
  FlowOptions opts_;
  std::optional<std::vector<RationalPolynomial>> exact_;
  std::vector<RealPolynomial> real_;
};

/// exp(Σ u_k F_k)(start) at parameter y.
std::vector<double> exp_flow(const std::vector<PolyVectorField>& frame, const std::vector<double>& u,
                             const std::vector<double>& start, const std::vector<double>& y,
                             const FlowOptions& opts = {});
/// RK4 path regardless of structure; throws NumericalError if the flow leaves the chart.
std::vector<double> exp_flow_rk4(const std::vector<PolyVectorField>& frame, const std::vector<double>& u,
                                 const std::vector<double>& start, const std::vector<double>& y,
                                 const FlowOptions& opts = {});
std::vector<Rational> exp_flow_exact(const std::vector<PolyVectorField>& frame, const std::vector<Rational>& u,
                                     const std::vector<Rational>& start, const std::vector<Rational>& y);

/// A named list of fields as read from a corpus file.
struct FieldSystem {
  std::string name;
  int d = 0;
  int p = 0;
  int q = 0;
  std::vector<std::string> variables;
  std::vector<PolyVectorField> fields;
  std::vector<std::vector<Rational>> rank_jumps;  // points where the flag is known to drop
  std::vector<std::string> provenance;            // free-form "round" lines written by the lifter
};

FieldSystem parse_field_system(const std::string& text);
FieldSystem load_field_system(const std::string& path);
std::string format_field_system(const FieldSystem& sys);

}  // namespace hypo
