#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "chi2r/rng.hpp"

namespace chi2r {

enum class LawKind { degenerate_zero, poisson_regime, std_normal };

std::string to_string(LawKind kind);

/// One of the three limits of the standardized statistic
/// (chi2 - m) / sqrt(2m) as n / sqrt(m) -> lambda:
///   lambda = 0        point mass at 0
///   0 < lambda < inf  (sqrt2/lambda) Z - lambda/sqrt2,  Z ~ Pois(lambda^2/2)
///   lambda = inf      N(0, 1)
class LimitLaw {
 public:
  static LimitLaw degenerate_zero() noexcept { return LimitLaw(LawKind::degenerate_zero, 0.0); }
  static LimitLaw poisson_regime(double lambda);
  static LimitLaw std_normal() noexcept { return LimitLaw(LawKind::std_normal, 0.0); }

  LawKind kind() const noexcept { return kind_; }
  /// Regime parameter; zero unless kind() == poisson_regime.
  double lambda() const noexcept { return lambda_; }
  /// Mean of the underlying Poisson variable, lambda^2 / 2.
  double poisson_mean() const noexcept { return 0.5 * lambda_ * lambda_; }
  /// Location of the k-th Poisson atom, (sqrt2/lambda) k - lambda/sqrt2.
  double atom(std::uint64_t k) const noexcept;

  friend bool operator==(const LimitLaw&, const LimitLaw&) = default;

 private:
  LimitLaw(LawKind kind, double lambda) noexcept : kind_(kind), lambda_(lambda) {}

  LawKind kind_;
  double lambda_;
};

struct RegimeThresholds {
  double lambda_lo = 0.1;
  double lambda_hi = 10.0;
};

struct RegimeClassification {
  double lambda_hat = 0.0;  // n / sqrt(m)
  LimitLaw regime = LimitLaw::std_normal();
  RegimeThresholds thresholds;
};

/// Picks the reference law from lambda_hat = n / sqrt(m):
/// degenerate below lambda_lo, Poisson(lambda_hat) up to lambda_hi, normal above.
RegimeClassification classify_regime(std::uint64_t n, std::uint64_t m,
                                     RegimeThresholds thresholds = {});

/// Right-continuous CDF.
double limit_cdf(const LimitLaw& law, double x);

/// Left limit F(x-).
double limit_cdf_left(const LimitLaw& law, double x);

/// Smallest x with limit_cdf(law, x) >= q, q in (0, 1).
double limit_quantile(const LimitLaw& law, double q);

/// (mean, variance): (0, 0) for the point mass, (0, 1) otherwise.
std::pair<double, double> limit_mean_var(const LimitLaw& law);

double sample_limit(const LimitLaw& law, Stream& stream);

/// P(L >= t), including an atom sitting exactly at t.
double p_value_upper(const LimitLaw& law, double t);

/// Upper tail of the chi-square distribution with df degrees of freedom,
/// Q(df/2, chi2/2).
double classical_chi2_p_value(double chi2, std::uint64_t df);

/// Poisson helpers shared with the Monte Carlo layer.
double poisson_pmf(std::uint64_t k, double mean);
/// P(Z <= k).
double poisson_cdf(std::uint64_t k, double mean);
/// P(Z >= k), summed directly in the upper tail.
double poisson_upper(std::uint64_t k, double mean);
/// Draw from Pois(mean) by inversion started at the mode.
std::uint64_t sample_poisson(double mean, Stream& stream);

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double q);

}  // namespace chi2r
