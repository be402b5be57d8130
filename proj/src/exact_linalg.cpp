#include "hypo/exact_linalg.hpp"

#include "hypo/errors.hpp"

namespace hypo {

namespace {

std::vector<Integer> clear_denominators(const RationalVector& v) {
  Integer l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  std::vector<Integer> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].get_num() * (l / v[i].get_den());
  return out;
}

void remove_content(std::vector<Integer>& v) {
  Integer g = 0;
  for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  if (g > 1)
    for (auto& x : v) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
}

}  // namespace

int exact_rank(const RationalMatrix& rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows.front().size();
  std::vector<std::vector<Integer>> m;
  m.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error("ragged matrix in exact_rank");
    m.push_back(clear_denominators(r));
  }
  const std::size_t nrows = m.size();
  Integer prev = 1;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < nrows; ++col) {
    std::size_t piv = rank;
    while (piv < nrows && m[piv][col] == 0) ++piv;
    if (piv == nrows) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t i = rank + 1; i < nrows; ++i) {
      for (std::size_t j = col + 1; j < cols; ++j) {
        Integer t = m[rank][col] * m[i][j] - m[i][col] * m[rank][j];
        mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      m[i][col] = 0;
    }
    prev = m[rank][col];
    ++rank;
  }
  return static_cast<int>(rank);
}

std::vector<Integer> IncrementalSpan::reduce(const RationalVector& v) const {
  if (static_cast<int>(v.size()) != dim_) throw Error("dimension mismatch in IncrementalSpan");
  std::vector<Integer> w = clear_denominators(v);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const int p = pivots_[k];
    if (w[p] == 0) continue;
    const Integer a = rows_[k][p];
    const Integer b = w[p];
    for (int j = 0; j < dim_; ++j) w[j] = a * w[j] - b * rows_[k][j];
    remove_content(w);
  }
  return w;
}

bool IncrementalSpan::add(const RationalVector& v) {
  std::vector<Integer> w = reduce(v);
  int p = -1;
  for (int j = 0; j < dim_; ++j)
    if (w[j] != 0) {
      p = j;
      break;
    }
  if (p < 0) return false;
  if (w[p] < 0)
    for (auto& x : w) x = -x;
  remove_content(w);
  rows_.push_back(std::move(w));
  pivots_.push_back(p);
  return true;
}

bool IncrementalSpan::contains(const RationalVector& v) const {
  for (const auto& x : reduce(v))
    if (x != 0) return false;
  return true;
}

RationalMatrix exact_nullspace(const RationalMatrix& A, int cols) {
  RationalMatrix m = A;
  for (const auto& r : m)
    if (static_cast<int>(r.size()) != cols) throw Error("ragged matrix in exact_nullspace");
  const int nrows = static_cast<int>(m.size());
  std::vector<int> pivot_cols;
  int row = 0;
  for (int col = 0; col < cols && row < nrows; ++col) {
    int piv = row;
    while (piv < nrows && m[piv][col] == 0) ++piv;
    if (piv == nrows) continue;
    std::swap(m[piv], m[row]);
    Rational inv = 1 / m[row][col];
    for (int j = col; j < cols; ++j) m[row][j] *= inv;
    for (int i = 0; i < nrows; ++i) {
      if (i == row || m[i][col] == 0) continue;
      Rational f = m[i][col];
      for (int j = col; j < cols; ++j) m[i][j] -= f * m[row][j];
    }
    pivot_cols.push_back(col);
    ++row;
  }
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_cols) is_pivot[c] = true;
  RationalMatrix basis;
  for (int free_col = 0; free_col < cols; ++free_col) {
    if (is_pivot[free_col]) continue;
    RationalVector v(cols, Rational(0));
    v[free_col] = 1;
    for (std::size_t k = 0; k < pivot_cols.size(); ++k) v[pivot_cols[k]] = -m[k][free_col];
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace hypo
