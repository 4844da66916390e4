#include "chi2r/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "chi2r/errors.hpp"

namespace chi2r {

namespace {

constexpr double kNegligible = 1e-17;
constexpr double kLogSpaceMean = 700.0;

// Position of x on the Poisson lattice, lambda x / sqrt2 + lambda^2 / 2.
// Atom k sits at lattice position k up to rounding.
double lattice_position(const LimitLaw& law, double x) {
  return law.lambda() * x / std::numbers::sqrt2 + law.poisson_mean();
}

// Tolerance for snapping a lattice position onto an integer.
double snap_tolerance(double v) { return 1e-9 * std::max(1.0, std::fabs(v)); }

void check_mean(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw InvalidParameter("Poisson mean must be positive and finite");
  }
}

}  // namespace

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::degenerate_zero:
      return "degenerate_zero";
    case LawKind::poisson_regime:
      return "poisson_regime";
    case LawKind::std_normal:
      return "std_normal";
  }
  return "unknown";
}

LimitLaw LimitLaw::poisson_regime(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("poisson_regime: lambda must be positive and finite");
  }
  return LimitLaw(LawKind::poisson_regime, lambda);
}

double LimitLaw::atom(std::uint64_t k) const noexcept {
  return std::numbers::sqrt2 / lambda_ * static_cast<double>(k) - lambda_ / std::numbers::sqrt2;
}

RegimeClassification classify_regime(std::uint64_t n, std::uint64_t m,
                                     RegimeThresholds thresholds) {
  if (!(thresholds.lambda_lo > 0.0 && thresholds.lambda_lo < thresholds.lambda_hi)) {
    throw InvalidParameter("classify_regime: need 0 < lambda_lo < lambda_hi");
  }
  if (n == 0 || m == 0) throw InvalidParameter("classify_regime: n and m must be positive");
  RegimeClassification out;
  out.thresholds = thresholds;
  out.lambda_hat = static_cast<double>(n) / std::sqrt(static_cast<double>(m));
  if (out.lambda_hat < thresholds.lambda_lo) {
    out.regime = LimitLaw::degenerate_zero();
  } else if (out.lambda_hat <= thresholds.lambda_hi) {
    out.regime = LimitLaw::poisson_regime(out.lambda_hat);
  } else {
    out.regime = LimitLaw::std_normal();
  }
  return out;
}

double poisson_pmf(std::uint64_t k, double mean) {
  check_mean(mean);
  const double kk = static_cast<double>(k);
  return std::exp(-mean + kk * std::log(mean) - std::lgamma(kk + 1.0));
}

double poisson_cdf(std::uint64_t k, double mean) {
  check_mean(mean);
  if (mean <= kLogSpaceMean) {
    double term = std::exp(-mean);
    double sum = term;
    for (std::uint64_t j = 1; j <= k; ++j) {
      term *= mean / static_cast<double>(j);
      sum += term;
      if (static_cast<double>(j) > mean && term < kNegligible * sum) break;
    }
    return std::min(sum, 1.0);
  }
  // e^-mean underflows: anchor at pmf(k) in log space and sum downwards.
  if (static_cast<double>(k) > mean) return 1.0 - poisson_upper(k + 1, mean);
  double term = poisson_pmf(k, mean);
  double sum = term;
  for (std::uint64_t j = k; j >= 1; --j) {
    term *= static_cast<double>(j) / mean;
    sum += term;
    if (term < kNegligible * sum) break;
  }
  return std::min(sum, 1.0);
}

double poisson_upper(std::uint64_t k, double mean) {
  check_mean(mean);
  if (k == 0) return 1.0;
  if (static_cast<double>(k) <= mean) return 1.0 - poisson_cdf(k - 1, mean);
  double term = poisson_pmf(k, mean);
  double sum = term;
  for (std::uint64_t j = k + 1; term > 0.0; ++j) {
    term *= mean / static_cast<double>(j);
    sum += term;
    if (term < kNegligible * sum) break;
  }
  return std::min(sum, 1.0);
}

std::uint64_t sample_poisson(double mean, Stream& stream) {
  check_mean(mean);
  const double u = stream.uniform();
  auto k = static_cast<std::uint64_t>(std::floor(mean));
  double cdf = poisson_cdf(k, mean);
  double pmf = poisson_pmf(k, mean);
  if (u <= cdf) {
    while (k > 0 && u <= cdf - pmf) {
      cdf -= pmf;
      pmf *= static_cast<double>(k) / mean;
      --k;
    }
    return k;
  }
  while (u > cdf) {
    ++k;
    pmf *= mean / static_cast<double>(k);
    if (pmf == 0.0) break;
    cdf += pmf;
  }
  return k;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("normal_quantile: q must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double limit_cdf(const LimitLaw& law, double x) {
  switch (law.kind()) {
    case LawKind::degenerate_zero:
      return x < 0.0 ? 0.0 : 1.0;
    case LawKind::std_normal:
      return normal_cdf(x);
    case LawKind::poisson_regime: {
      const double v = lattice_position(law, x);
      const double k = std::floor(v + snap_tolerance(v));
      if (k < 0.0) return 0.0;
      return poisson_cdf(static_cast<std::uint64_t>(k), law.poisson_mean());
    }
  }
  return 0.0;
}

double limit_cdf_left(const LimitLaw& law, double x) {
  switch (law.kind()) {
    case LawKind::degenerate_zero:
      return x <= 0.0 ? 0.0 : 1.0;
    case LawKind::std_normal:
      return normal_cdf(x);
    case LawKind::poisson_regime: {
      // Largest atom strictly below x.
      const double v = lattice_position(law, x);
      const double k = std::ceil(v - snap_tolerance(v)) - 1.0;
      if (k < 0.0) return 0.0;
      return poisson_cdf(static_cast<std::uint64_t>(k), law.poisson_mean());
    }
  }
  return 0.0;
}

double limit_quantile(const LimitLaw& law, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("limit_quantile: q must lie in (0, 1)");
  switch (law.kind()) {
    case LawKind::degenerate_zero:
      return 0.0;
    case LawKind::std_normal:
      return normal_quantile(q);
    case LawKind::poisson_regime: {
      const double mean = law.poisson_mean();
      const double guess = std::floor(mean + std::sqrt(mean) * normal_quantile(q));
      auto k = static_cast<std::uint64_t>(std::max(0.0, guess));
      while (k > 0 && poisson_cdf(k - 1, mean) >= q) --k;
      while (poisson_cdf(k, mean) < q) ++k;
      return law.atom(k);
    }
  }
  return 0.0;
}

std::pair<double, double> limit_mean_var(const LimitLaw& law) {
  if (law.kind() == LawKind::degenerate_zero) return {0.0, 0.0};
  return {0.0, 1.0};
}

double sample_limit(const LimitLaw& law, Stream& stream) {
  switch (law.kind()) {
    case LawKind::degenerate_zero:
      return 0.0;
    case LawKind::std_normal:
      return normal_quantile(stream.uniform_open());
    case LawKind::poisson_regime:
      return law.atom(sample_poisson(law.poisson_mean(), stream));
  }
  return 0.0;
}

double p_value_upper(const LimitLaw& law, double t) {
  switch (law.kind()) {
    case LawKind::degenerate_zero:
      return t <= 0.0 ? 1.0 : 0.0;
    case LawKind::std_normal:
      return 0.5 * std::erfc(t / std::numbers::sqrt2);
    case LawKind::poisson_regime: {
      // Smallest atom at or above t.
      const double v = lattice_position(law, t);
      const double k = std::ceil(v - snap_tolerance(v));
      if (k <= 0.0) return 1.0;
      return poisson_upper(static_cast<std::uint64_t>(k), law.poisson_mean());
    }
  }
  return 0.0;
}

double classical_chi2_p_value(double chi2, std::uint64_t df) {
  if (df == 0) throw InvalidParameter("classical_chi2_p_value: df must be at least 1");
  if (!(chi2 >= 0.0)) throw InvalidParameter("classical_chi2_p_value: chi2 must be nonnegative");
  if (chi2 == 0.0) return 1.0;
  if (std::isinf(chi2)) return 0.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * chi2);
}

}  // namespace chi2r
