#pragma once

#include <vector>

#include "hypo/rational.hpp"

namespace hypo {

using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<RationalVector>;  // row-major

/// Rank by fraction-free (Bareiss) elimination; rows are cleared of denominators first.
int exact_rank(const RationalMatrix& rows);

/// Grows a row space one vector at a time using fraction-free integer reduction.
class IncrementalSpan {
 public:
  explicit IncrementalSpan(int dim) : dim_(dim) {}

  /// Adds v; returns true if the span grew.
  bool add(const RationalVector& v);
  bool contains(const RationalVector& v) const;
  int rank() const { return static_cast<int>(rows_.size()); }
  int dim() const { return dim_; }

 private:
  std::vector<Integer> reduce(const RationalVector& v) const;

  int dim_;
  std::vector<std::vector<Integer>> rows_;  // echelon rows, pivot entry positive
  std::vector<int> pivots_;
};

/// Basis of {a : A a = 0} for A given as rows (rows x cols).
RationalMatrix exact_nullspace(const RationalMatrix& A, int cols);

}  // namespace hypo
