#pragma once

#include <string>
#include <vector>

#include "hypo/vfield.hpp"

namespace hypo {

struct LiftRound {
  int defect_order = 0;                  // least r with dim H^r below the free dimension
  std::vector<RationalPolynomial> u;     // u_j for each field, in the variables after the round
  std::vector<int> dims_before;
  std::vector<int> dims_after;
  std::string source;                    // "table" or "search"
};

/// Base fields on U x T lifted to U x U' x T. Lifted variables are ordered (x, x', y).
struct LiftedSystem {
  std::vector<PolyVectorField> base;
  int p = 0;
  int q = 0;
  int k = 0;  // number of extra variables x'
  int m = 0;
  std::vector<PolyVectorField> lifted;
  std::vector<std::vector<RationalPolynomial>> u_coeffs;  // u_coeffs[i][j] multiplies ∂/∂x'_j in field i
  std::vector<LiftRound> rounds;
  std::vector<Rational> center;  // in lifted coordinates (x'-part zero)
  std::vector<std::string> variables;

  FieldSystem to_field_system(const std::string& name) const;
};

struct LiftOptions {
  int degree_cap = 3;
  long max_pair_candidates = 20000;
  bool use_table = true;
  bool check_neighborhood = true;  // freeness on the grid of step 1/8, radius 1/2 around the center
};

/// Adds one variable per round until the system is free of order m at the center.
LiftedSystem lift(const std::vector<PolyVectorField>& fields, int m, const std::vector<Rational>& center,
                  const LiftOptions& opts = {});

/// Rank of the Lyndon-bracket frame at a point equals dim g_{d,m} (fast freeness test).
bool frame_is_free(CommutatorCache& cache, const std::vector<Rational>& point, int m);

struct LiftSampleReport {
  std::vector<Rational> point;
  bool free = false;
  bool full_flag = false;
};

struct LiftVerification {
  bool projection_ok = false;
  std::vector<LiftSampleReport> samples;
  bool all_free() const;
  bool all_full() const;
};

LiftVerification verify_lift(const LiftedSystem& sys, const std::vector<std::vector<Rational>>& samples);

/// Grid of points center + j/8 in every lifted coordinate with |j/8| <= radius.
std::vector<std::vector<Rational>> rational_grid(const std::vector<Rational>& center, const Rational& step,
                                                 const Rational& radius, const std::vector<bool>& vary);

/// Canonical text of a field list used to key the curated lift table.
std::string field_fingerprint(const std::vector<PolyVectorField>& fields);

}  // namespace hypo
