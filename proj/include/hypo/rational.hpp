#pragma once

#include <gmpxx.h>

#include <string>
#include <type_traits>

namespace hypo {

using Rational = mpq_class;
using Integer = mpz_class;

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double v) { return v; }

/// Canonical "a/b" (or "a") text form.
inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Parses "a", "-a" or "a/b"; the result is canonicalized.
Rational parse_rational(const std::string& text);

/// Exact rational value of a finite double.
inline Rational exact_rational(double v) { return Rational(v); }

/// Conversion used by generic code to move coefficients into another scalar type.
template <class To, class From>
To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<From, Rational> && !std::is_same_v<To, Rational>) {
    return To(v.get_d());
  } else {
    return To(v);
  }
}

}  // namespace hypo
