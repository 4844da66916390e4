#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chi2r/rng.hpp"

namespace chi2r {

enum class Family { uniform, power_law, custom };

std::string to_string(Family family);

/// Largest number of cells for which a dense probability table is kept.
inline constexpr std::uint64_t kDenseCellCap = 10'000'000;

/// Null distribution p(1..m) of one row of the triangular array.
///
/// Cells are 1-based.  Uniform and power-law families are analytic: their
/// probabilities are evaluated on demand, so m may be far above the dense
/// cap (the degenerate regime uses m = 1e8).  Custom distributions keep an
/// explicit table and are limited to kDenseCellCap cells.
///
/// Immutable after construction; concurrent reads are safe.
class CellDistribution {
 public:
  Family family() const noexcept { return family_; }
  std::uint64_t cells() const noexcept { return m_; }
  /// Power-law exponent; 0 for the other families.
  double alpha() const noexcept { return alpha_; }
  /// Power-law normalizer sum_{i<=m} i^-alpha; m for uniform.
  double normalizer() const noexcept { return normalizer_; }

  /// True when every cell has probability 1/m (uniform, or power law with
  /// alpha = 0).
  bool is_uniform() const noexcept {
    return family_ == Family::uniform || (family_ == Family::power_law && alpha_ == 0.0);
  }

  /// p(i) for 1 <= i <= m.
  double prob(std::uint64_t cell) const noexcept;

  /// 1/p(i); exactly m for uniform cells.
  double inv_prob(std::uint64_t cell) const noexcept;

  /// Materializes p(1..m).  Throws ResourceError above the dense cap.
  std::vector<double> probs() const;

  /// One draw X in 1..m.
  std::uint64_t sample(Stream& stream) const noexcept;

  friend CellDistribution make_uniform(std::uint64_t m);
  friend CellDistribution make_power_law(double alpha, std::uint64_t m);
  friend CellDistribution make_custom(std::vector<double> probs);

 private:
  CellDistribution() = default;

  std::uint64_t sample_power_law(Stream& stream) const noexcept;

  Family family_ = Family::uniform;
  std::uint64_t m_ = 1;
  double alpha_ = 0.0;
  double normalizer_ = 1.0;
  std::vector<double> table_;  // custom only
  std::vector<double> cdf_;    // custom only

  // Rejection-inversion constants for power-law sampling.
  double h_integral_x1_ = 0.0;
  double h_integral_m_ = 0.0;
  double squeeze_ = 0.0;
};

/// p(i) = 1/m.
CellDistribution make_uniform(std::uint64_t m);

/// p(i) = i^-alpha / C with C summed exactly over i = 1..m.
CellDistribution make_power_law(double alpha, std::uint64_t m);

/// Explicit probabilities.  Entries must be finite and positive.  A total
/// within 1e-9 of one is renormalized; anything further off is rejected.
CellDistribution make_custom(std::vector<double> probs);

/// E p^{-r}(X) = sum_i p(i)^{1-r}, summed in ascending cell order.
double inv_prob_moment(const CellDistribution& d, double r);

/// Var p^{-1}(X) = E p^{-2}(X) - m^2.
double inv_prob_variance(const CellDistribution& d);

/// (m n)^{-1} Var p^{-1}(X).  Vanishing along a schedule is the condition
/// under which the inverse-probability sum S_n drops out of the limit.
double condition_c_ratio(const CellDistribution& d, std::uint64_t n);

/// m^{-(1+delta)} E p^{-(1+delta)}(X); bounded along a schedule for the
/// Gaussian regime.
double novnd_ratio(const CellDistribution& d, double delta);

}  // namespace chi2r
