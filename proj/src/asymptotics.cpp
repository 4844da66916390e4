#include "chi2r/asymptotics.hpp"

#include <cmath>

#include "chi2r/errors.hpp"

namespace chi2r {

namespace {

// sum_{k=1}^n (k-1)_r for r = 1, 2, 3 where (x)_r is the falling factorial:
// n(n-1)/2, n(n-1)(n-2)/3, n(n-1)(n-2)(n-3)/4.
struct FallingSums {
  double s1, s2, s3;
};

FallingSums falling_sums(std::uint64_t n) {
  const double x = static_cast<double>(n);
  if (n < 2) return {0.0, 0.0, 0.0};
  const double s1 = x * (x - 1.0) / 2.0;
  const double s2 = n < 3 ? 0.0 : x * (x - 1.0) * (x - 2.0) / 3.0;
  const double s3 = n < 4 ? 0.0 : x * (x - 1.0) * (x - 2.0) * (x - 3.0) / 4.0;
  return {s1, s2, s3};
}

void check_n(std::uint64_t n, const char* op) {
  if (n == 0) throw InvalidParameter(std::string(op) + ": n must be at least 1");
}

}  // namespace

double chi2_mean(std::uint64_t m) {
  if (m == 0) throw InvalidParameter("chi2_mean: m must be at least 1");
  return static_cast<double>(m) - 1.0;
}

double chi2_variance(const CellDistribution& d, std::uint64_t n) {
  check_n(n, "chi2_variance");
  const double nn = static_cast<double>(n);
  const double m = static_cast<double>(d.cells());
  return (inv_prob_variance(d) + 2.0 * (nn - 1.0) * (m - 1.0)) / nn;
}

double mean_u(std::uint64_t n) {
  check_n(n, "mean_u");
  const double nn = static_cast<double>(n);
  return nn * (nn - 1.0);
}

double mean_s(const CellDistribution& d, std::uint64_t n) {
  check_n(n, "mean_s");
  return static_cast<double>(n) * static_cast<double>(d.cells());
}

AMomentSums a_moment_sums(const CellDistribution& d, std::uint64_t n) {
  check_n(n, "a_moment_sums");
  const auto [s1, s2, s3] = falling_sums(n);
  const double m = static_cast<double>(d.cells());
  AMomentSums out;
  out.first = s1 / m;
  out.second = (s1 * m + s2) / (m * m);
  out.third = (s1 * inv_prob_moment(d, 2.0) + 3.0 * s2 * m + s3) / (m * m * m);
  return out;
}

BksConditionValues bks_condition_values(std::uint64_t n, std::uint64_t m) {
  check_n(n, "bks_condition_values");
  if (m == 0) throw InvalidParameter("bks_condition_values: m must be at least 1");
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return {(nn - 1.0) / mm, nn * (nn - 1.0) / (2.0 * mm)};
}

double poisson_truncation_bound(const CellDistribution& d, std::uint64_t n, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidParameter("poisson_truncation_bound: epsilon must be positive");
  const auto sums = a_moment_sums(d, n);
  return (sums.third - 2.0 * sums.second + sums.first) / (epsilon * epsilon);
}

LyapunovRateTerms lyapunov_rate_terms(const CellDistribution& d, std::uint64_t n, double delta) {
  check_n(n, "lyapunov_rate_terms");
  if (!(delta > 0.0)) throw InvalidParameter("lyapunov_rate_terms: delta must be positive");
  const double nn = static_cast<double>(n);
  const double m_scale = std::pow(static_cast<double>(d.cells()), -(1.0 + 0.5 * delta));
  LyapunovRateTerms out;
  out.first = std::pow(nn, -delta) * m_scale * inv_prob_moment(d, 1.0 + delta);
  out.second = std::pow(nn, -0.5 * delta) * m_scale * inv_prob_moment(d, 1.0 + 0.5 * delta);
  return out;
}

TheoryReport theory_report(const CellDistribution& d, std::uint64_t n, double delta,
                           double epsilon) {
  TheoryReport r;
  r.n = n;
  r.m = d.cells();
  r.chi2_mean = chi2_mean(d.cells());
  r.chi2_var = chi2_variance(d, n);
  r.mean_u = mean_u(n);
  r.mean_s = mean_s(d, n);
  r.inv_prob_variance = inv_prob_variance(d);
  const auto sums = a_moment_sums(d, n);
  r.a_sum_mean = sums.first;
  r.a_sum_m2 = sums.second;
  r.a_sum_m3 = sums.third;
  const auto bks = bks_condition_values(n, d.cells());
  r.bks_max_cond = bks.max_cond;
  r.bks_sum_cond = bks.sum_cond;
  r.epsilon = epsilon;
  r.truncation_bound = poisson_truncation_bound(d, n, epsilon);
  r.truncation_bound_negative = r.truncation_bound < 0.0;
  r.condition_c = condition_c_ratio(d, n);
  r.delta = delta;
  r.novnd = novnd_ratio(d, delta);
  r.lyapunov = lyapunov_rate_terms(d, n, delta);
  return r;
}

}  // namespace chi2r
