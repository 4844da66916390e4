#pragma once

#include <cstdint>

#include "chi2r/dist.hpp"

namespace chi2r {

// Exact finite-n values of the quantities the limit theorems are built
// from.  Sums over k = 1..n use closed-form falling-factorial identities,
// so n may be far beyond loop range.

/// E chi2 = m - 1.
double chi2_mean(std::uint64_t m);

/// Var chi2 = (Var p^-1(X) + 2 (n-1)(m-1)) / n.
double chi2_variance(const CellDistribution& d, std::uint64_t n);

/// E U_n = n (n-1).
double mean_u(std::uint64_t n);

/// E S_n = n m.
double mean_s(const CellDistribution& d, std::uint64_t n);

struct AMomentSums {
  double first = 0.0;   // sum_k E A_k
  double second = 0.0;  // sum_k E A_k^2
  double third = 0.0;   // sum_k E A_k^3
};

/// Moment sums of the sequential terms A_k.  Given X_k, m p(X_k) A_k is
/// Binom(k-1, p(X_k)), which yields
///   sum E A   = n(n-1) / (2m)
///   sum E A^2 = m^-2 sum_k [(k-1) m + (k-1)(k-2)]
///   sum E A^3 = m^-3 sum_k [(k-1) E p^-2(X) + 3 (k-1)(k-2) m + (k-1)(k-2)(k-3)]
AMomentSums a_moment_sums(const CellDistribution& d, std::uint64_t n);

struct BksConditionValues {
  double max_cond = 0.0;  // max_k E(A_k | F_{k-1}) = (n-1)/m
  double sum_cond = 0.0;  // sum_k E(A_k | F_{k-1}) = n(n-1)/(2m)
};

/// Conditional-mean quantities of the Poisson conditional limit theorem.
/// Both are deterministic for this array.
BksConditionValues bks_condition_values(std::uint64_t n, std::uint64_t m);

/// epsilon^-2 (sum E A^3 - 2 sum E A^2 + sum E A).  Bounds the truncated
/// first moment sum_k E A_k 1{|A_k - 1| > epsilon}; returned unclipped and
/// may be negative at small n.
double poisson_truncation_bound(const CellDistribution& d, std::uint64_t n, double epsilon);

struct LyapunovRateTerms {
  double first = 0.0;   // n^-delta m^-(1+delta/2) E p^-(1+delta)(X)
  double second = 0.0;  // n^-(delta/2) m^-(1+delta/2) E p^-(1+delta/2)(X)
};

/// Constant-free Lyapunov rate terms of the Gaussian regime.  Diagnostic
/// only: the multiplying constant is unknown.
LyapunovRateTerms lyapunov_rate_terms(const CellDistribution& d, std::uint64_t n, double delta);

struct TheoryReport {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  double chi2_mean = 0.0;
  double chi2_var = 0.0;
  double mean_u = 0.0;
  double mean_s = 0.0;
  double inv_prob_variance = 0.0;
  double a_sum_mean = 0.0;
  double a_sum_m2 = 0.0;
  double a_sum_m3 = 0.0;
  double bks_max_cond = 0.0;
  double bks_sum_cond = 0.0;
  double epsilon = 0.5;
  double truncation_bound = 0.0;
  bool truncation_bound_negative = false;
  double condition_c = 0.0;
  double delta = 1.0;
  double novnd = 0.0;
  LyapunovRateTerms lyapunov;
};

TheoryReport theory_report(const CellDistribution& d, std::uint64_t n, double delta = 1.0,
                           double epsilon = 0.5);

}  // namespace chi2r
