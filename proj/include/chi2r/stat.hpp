#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chi2r/dist.hpp"
#include "chi2r/rng.hpp"

namespace chi2r {

struct CellCount {
  std::uint64_t cell;   // 1-based
  std::uint64_t count;  // N_i > 0

  friend bool operator==(const CellCount&, const CellCount&) = default;
};

/// Occupancy numbers N_i of one sample, stored sparsely.
///
/// Only occupied cells are kept, in ascending cell order, so memory is
/// O(min(n, m)) and every sum over cells runs in a fixed order.
class SampleCounts {
 public:
  /// Validates and canonicalizes the entries: zero counts are dropped,
  /// entries are sorted, cells must be distinct and lie in 1..m, and the
  /// total must be positive.
  SampleCounts(std::uint64_t m, std::vector<CellCount> entries);

  std::uint64_t n() const noexcept { return n_; }
  std::uint64_t cells() const noexcept { return m_; }
  std::span<const CellCount> occupied() const noexcept { return entries_; }

  friend bool operator==(const SampleCounts&, const SampleCounts&) = default;

 private:
  std::uint64_t n_ = 0;
  std::uint64_t m_ = 1;
  std::vector<CellCount> entries_;
};

/// Ordered draws X_1..X_n; only needed for the sequential A_k terms.
class SampleSequence {
 public:
  SampleSequence(std::uint64_t m, std::vector<std::uint64_t> values);

  std::uint64_t n() const noexcept { return values_.size(); }
  std::uint64_t cells() const noexcept { return m_; }
  std::span<const std::uint64_t> values() const noexcept { return values_; }

 private:
  std::uint64_t m_ = 1;
  std::vector<std::uint64_t> values_;
};

SampleCounts to_counts(const SampleSequence& s);

/// chi2 = (U + S)/n - n, with U the coincident-pair term and S the
/// inverse-probability sum.
struct Chi2Breakdown {
  double chi2 = 0.0;
  double u_stat = 0.0;
  double s_stat = 0.0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
};

enum class Convention {
  theorem,    // (chi2 - m) / sqrt(2m)
  classical,  // (chi2 - (m-1)) / sqrt(2(m-1))
};

std::string to_string(Convention convention);
Convention parse_convention(const std::string& text);

SampleCounts draw_counts(const CellDistribution& d, std::uint64_t n, Stream& stream);
SampleSequence draw_sequence(const CellDistribution& d, std::uint64_t n, Stream& stream);

/// Pearson statistic n sum_i (N_i/n - p_i)^2 / p_i.  Analytic families are
/// evaluated over occupied cells plus a closed form for the empty ones;
/// custom families use a full pass.
double chi_square(const CellDistribution& d, const SampleCounts& c);

/// Reference evaluation touching every cell.  Throws ResourceError above
/// the dense cap.
double chi_square_dense(const CellDistribution& d, const SampleCounts& c);

/// U_n = sum_{k != l} 1{X_k = X_l} / p(X_k) = sum_i N_i (N_i - 1) / p_i.
double u_statistic(const CellDistribution& d, const SampleCounts& c);

/// S_n = sum_k 1/p(X_k) = sum_i N_i / p_i.
double s_statistic(const CellDistribution& d, const SampleCounts& c);

/// chi2 from the direct formula together with U_n and S_n.
Chi2Breakdown decompose(const CellDistribution& d, const SampleCounts& c);

double standardize(const Chi2Breakdown& b, Convention convention);
double standardize(double chi2, std::uint64_t m, Convention convention);

/// Number of unordered coincident pairs, sum_i N_i (N_i - 1) / 2.
std::uint64_t collision_pairs(const SampleCounts& c);

/// A_k = (m p(X_k))^{-1} #{j < k : X_j = X_k}, k = 1..n.  A_1 = 0.
std::vector<double> sequential_a(const CellDistribution& d, const SampleSequence& s);

}  // namespace chi2r
