#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hypo/polynomial.hpp"

namespace hypo {

/// Parses a polynomial expression over the named variables.
///
/// Grammar: sums and differences of products, `^` with a non-negative integer
/// exponent, parentheses, unary minus, integer literals, and division by a
/// constant subexpression (so `3/4*x1^2` is accepted). Errors carry the
/// position relative to `line`/`column_offset` so callers can report file
/// coordinates.
RationalPolynomial parse_polynomial(std::string_view text, const std::vector<std::string>& variables,
                                    int line = 1, int column_offset = 0);

}  // namespace hypo
