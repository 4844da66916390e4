#include <doctest.h>

#include <cmath>
#include <vector>

#include "chi2r/asymptotics.hpp"
#include "chi2r/errors.hpp"
#include "chi2r/stat.hpp"
#include "oracles.hpp"

using namespace chi2r;
using doctest::Approx;

namespace {

bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

// Per-k loop over the conditional binomial moments, in long double.  Given
// X_k with p = p(X_k), m p A_k ~ Bin(j, p) with j = k - 1.
AMomentSums looped_sums(const std::vector<double>& probs, std::uint64_t n) {
  long double ep2 = 0.0L;  // E p^-2(X) = sum 1/p
  for (double p : probs) ep2 += 1.0L / p;
  const long double m = static_cast<long double>(probs.size());
  long double s1 = 0.0L, s2 = 0.0L, s3 = 0.0L;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const long double j = static_cast<long double>(k - 1);
    s1 += j / m;
    // E B^2 = jp(1-p) + j^2 p^2.
    s2 += (j * (m - 1.0L) + j * j) / (m * m);
    // E B^3 = jp + 3j(j-1)p^2 + j(j-1)(j-2)p^3.
    s3 += (j * ep2 + 3.0L * j * (j - 1.0L) * m + j * (j - 1.0L) * (j - 2.0L)) / (m * m * m);
  }
  return {static_cast<double>(s1), static_cast<double>(s2), static_cast<double>(s3)};
}

}  // namespace

TEST_CASE("chi2 moments: worked values") {
  CHECK(chi2_mean(1) == 0.0);
  CHECK(chi2_mean(100) == 99.0);
  CHECK(chi2_variance(make_uniform(2), 2) == Approx(1.0).epsilon(1e-15));
  CHECK(chi2_variance(make_uniform(9), 1) == 0.0);
  CHECK(chi2_variance(make_custom({0.5, 0.25, 0.25}), 2) == Approx(2.5).epsilon(1e-14));
  CHECK(chi2_variance(make_custom({0.5, 0.25, 0.25}), 1) == Approx(1.0).epsilon(1e-14));
  // 2 (n-1)(m-1) / n
  CHECK(chi2_variance(make_uniform(20), 50) == Approx(2.0 * 49.0 * 19.0 / 50.0).epsilon(1e-14));
  CHECK(mean_u(10) == 90.0);
  CHECK(mean_u(1) == 0.0);
  CHECK(mean_s(make_uniform(5), 4) == 20.0);
  CHECK(mean_s(make_power_law(0.4, 30), 7) == Approx(210.0).epsilon(1e-14));
}

TEST_CASE("exhaustive enumeration over small supports") {
  const std::vector<std::vector<double>> supports = {
      {0.5, 0.5}, {0.75, 0.25}, {0.5, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}};
  for (const auto& probs : supports) {
    const auto d = make_custom(probs);
    const std::size_t max_n = probs.size() == 2 ? 8 : 5;
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto e = oracle::exhaustive(probs, n);
      const auto sums = a_moment_sums(d, n);
      CHECK(close(chi2_mean(probs.size()), e.chi2_mean, 1e-12));
      CHECK(close(chi2_variance(d, n), e.chi2_var, 1e-12));
      CHECK(close(mean_u(n), e.u_mean, 1e-12));
      CHECK(close(mean_s(d, n), e.s_mean, 1e-12));
      CHECK(std::fabs(e.cov_us) < 1e-9);
      CHECK(close(sums.first, e.a1, 1e-12));
      CHECK(close(sums.second, e.a2, 1e-12));
      CHECK(close(sums.third, e.a3, 1e-12));
    }
  }
  // The analytic uniform family takes the same values.
  const auto u2 = make_uniform(2);
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto e = oracle::exhaustive({0.5, 0.5}, n);
    CHECK(close(chi2_variance(u2, n), e.chi2_var, 1e-12));
    CHECK(close(a_moment_sums(u2, n).third, e.a3, 1e-12));
  }
}

TEST_CASE("a_moment_sums worked values") {
  const auto one = a_moment_sums(make_power_law(0.3, 17), 1);
  CHECK(one.first == 0.0);
  CHECK(one.second == 0.0);
  CHECK(one.third == 0.0);

  for (std::uint64_t m : {2ull, 3ull, 10ull}) {
    const auto s = a_moment_sums(make_uniform(m), 3);
    const double md = static_cast<double>(m);
    CHECK(s.first == Approx(3.0 / md).epsilon(1e-15));
    CHECK(s.second == Approx((3.0 * md + 2.0) / (md * md)).epsilon(1e-15));
  }
  CHECK(a_moment_sums(make_uniform(2), 3).second == Approx(2.0).epsilon(1e-15));

  const auto lam1 = a_moment_sums(make_uniform(10'000), 100);
  CHECK(lam1.first == Approx(0.495).epsilon(1e-14));
  CHECK(lam1.second == Approx(0.498234).epsilon(1e-13));
  CHECK(lam1.third == Approx(0.50472552735).epsilon(1e-12));
  for (double v : {lam1.first, lam1.second, lam1.third}) CHECK(std::fabs(v - 0.5) < 0.015);
}

TEST_CASE("closed forms match looped sums") {
  Stream s(3, 0);
  for (int trial = 0; trial < 6; ++trial) {
    const std::uint64_t m = 1 + s.uniform_below(2000);
    const CellDistribution d = trial % 2 == 0 ? make_power_law(0.9 * s.uniform(), m) : make_uniform(m);
    for (std::uint64_t n : {1ull, 2ull, 17ull, 1000ull, 100'000ull}) {
      const auto closed = a_moment_sums(d, n);
      const auto looped = looped_sums(d.probs(), n);
      CHECK(close(closed.first, looped.first, 1e-12));
      CHECK(close(closed.second, looped.second, 1e-12));
      CHECK(close(closed.third, looped.third, 1e-11));
    }
  }
}

TEST_CASE("bks condition values") {
  const auto b = bks_condition_values(100, 10'000);
  CHECK(b.max_cond == Approx(0.0099).epsilon(1e-14));
  CHECK(b.sum_cond == Approx(0.495).epsilon(1e-14));
  const auto one = bks_condition_values(1, 50);
  CHECK(one.max_cond == 0.0);
  CHECK(one.sum_cond == 0.0);

  Stream s(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t m = 1 + s.uniform_below(100'000);
    const std::uint64_t n = 1 + s.uniform_below(1'000'000);
    CHECK(a_moment_sums(make_uniform(m), n).first == bks_condition_values(n, m).sum_cond);
    CHECK(a_moment_sums(make_power_law(0.5, m % 500 + 1), n).first ==
          bks_condition_values(n, m % 500 + 1).sum_cond);
  }
}

TEST_CASE("poisson_truncation_bound") {
  CHECK(poisson_truncation_bound(make_uniform(50), 1, 0.5) == 0.0);
  const auto d = make_uniform(10'000);
  const auto a = a_moment_sums(d, 100);
  CHECK(poisson_truncation_bound(d, 100, 0.5) ==
        Approx(4.0 * (a.third - 2.0 * a.second + a.first)).epsilon(1e-12));
  CHECK(poisson_truncation_bound(d, 100, 0.5) == Approx(0.0130301094).epsilon(1e-9));

  double prev = INFINITY;
  for (std::uint64_t n : {100ull, 1000ull, 10'000ull}) {
    const double b = poisson_truncation_bound(make_uniform(n * n), n, 0.5);
    CHECK(b < prev);
    prev = b;
  }

  // The bound is eps^-2 sum E[A (A - 1)^2], so it cannot go below zero.
  for (const auto& probs : {std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}}) {
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto e = oracle::exhaustive(probs, n);
      const double b = poisson_truncation_bound(make_custom(probs), n, 0.25);
      CHECK(close(b, 16.0 * (e.a3 - 2.0 * e.a2 + e.a1), 1e-11));
      CHECK(b >= 0.0);
    }
  }
  for (std::uint64_t m : {1ull, 4ull, 100ull, 100'000'000ull}) {
    for (std::uint64_t n : {1ull, 2ull, 3ull, 50ull, 10'000ull}) {
      const auto r = theory_report(make_uniform(m), n, 1.0, 0.5);
      CHECK(r.truncation_bound >= 0.0);
      CHECK(r.truncation_bound_negative == (r.truncation_bound < 0.0));
    }
  }
  CHECK_THROWS_AS(poisson_truncation_bound(make_uniform(4), 2, 0.0), InvalidParameter);
}

TEST_CASE("sum of A_k over simulated sequences") {
  const auto d = make_uniform(50);
  constexpr int kReps = 10'000;
  Stream stream(17, 0);
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < kReps; ++r) {
    double total = 0.0;
    for (double a : sequential_a(d, draw_sequence(d, 20, stream))) total += a;
    sum += total;
    sum_sq += total * total;
  }
  const double mean = sum / kReps;
  const double se = std::sqrt((sum_sq / kReps - mean * mean) / kReps);
  CHECK(std::fabs(mean - bks_condition_values(20, 50).sum_cond) <= 4.0 * se);
}

TEST_CASE("fixed-lambda schedule converges to lambda^2/2") {
  double prev_err[3] = {0, 0, 0};
  double prev_bound = INFINITY;
  for (int t = 2; t <= 6; ++t) {
    const std::uint64_t n = 10ull << t;
    const auto d = make_uniform(n * n);
    const auto s = a_moment_sums(d, n);
    const double err[3] = {std::fabs(s.first - 0.5), std::fabs(s.second - 0.5),
                           std::fabs(s.third - 0.5)};
    if (t > 2) {
      for (int c = 0; c < 3; ++c) CHECK(err[c] <= 0.6 * prev_err[c]);
    }
    for (int c = 0; c < 3; ++c) prev_err[c] = err[c];
    const double bound = poisson_truncation_bound(d, n, 0.5);
    CHECK(bound < prev_bound);
    prev_bound = bound;
  }
}

TEST_CASE("lyapunov_rate_terms") {
  const auto u = lyapunov_rate_terms(make_uniform(100), 2000, 1.0);
  CHECK(u.first == Approx(0.005).epsilon(1e-13));
  CHECK(u.second == Approx(1.0 / std::sqrt(2000.0)).epsilon(1e-13));
  for (double delta : {0.3, 1.0, 2.5}) {
    const auto one = lyapunov_rate_terms(make_uniform(1), 1, delta);
    CHECK(one.first == Approx(1.0).epsilon(1e-15));
    CHECK(one.second == Approx(1.0).epsilon(1e-15));
  }
  for (int family = 0; family < 2; ++family) {
    LyapunovRateTerms prev{INFINITY, INFINITY};
    for (std::uint64_t m : {100ull, 1000ull, 10'000ull}) {
      const auto d = family == 0 ? make_uniform(m) : make_power_law(0.5, m);
      const auto t = lyapunov_rate_terms(d, m, 1.0);
      CHECK(t.first < prev.first);
      CHECK(t.second < prev.second);
      prev = t;
    }
    CHECK(prev.first < 0.05);
    CHECK(prev.second < 0.05);
  }
}

TEST_CASE("theory_report fields") {
  const auto d = make_power_law(0.5, 1000);
  const auto r = theory_report(d, 300, 1.0, 0.5);
  CHECK(r.n == 300);
  CHECK(r.m == 1000);
  CHECK(r.chi2_mean == 999.0);
  CHECK(r.a_sum_mean == Approx(300.0 * 299.0 / 2000.0).epsilon(1e-15));
  CHECK(r.a_sum_mean == r.bks_sum_cond);
  CHECK(r.chi2_var == chi2_variance(d, 300));
  CHECK(r.condition_c == condition_c_ratio(d, 300));
  CHECK(r.novnd == novnd_ratio(d, 1.0));
  CHECK(r.inv_prob_variance == inv_prob_variance(d));
  CHECK(r.mean_u == 300.0 * 299.0);
  CHECK(r.mean_s == 300000.0);

  const auto one = theory_report(make_uniform(10'000), 1);
  CHECK(one.a_sum_mean == 0.0);
  CHECK(one.a_sum_m2 == 0.0);
  CHECK(one.a_sum_m3 == 0.0);
  CHECK(one.bks_max_cond == 0.0);
  CHECK(one.truncation_bound == 0.0);
  CHECK_FALSE(one.truncation_bound_negative);
}

TEST_CASE("replicate variance of U and covariance with S") {
  struct Case {
    CellDistribution d;
    std::uint64_t n;
  };
  const Case cases[] = {{make_uniform(20), 50}, {make_power_law(0.6, 20), 50}};
  for (const auto& [d, n] : cases) {
    constexpr int kReps = 10'000;
    std::vector<double> us, ss;
    Stream stream(2024, 0);
    for (int r = 0; r < kReps; ++r) {
      const auto b = decompose(d, draw_counts(d, n, stream));
      us.push_back(b.u_stat);
      ss.push_back(b.s_stat);
    }
    const double nd = static_cast<double>(n);
    double mu = 0.0, ms = 0.0;
    for (int r = 0; r < kReps; ++r) {
      mu += us[r];
      ms += ss[r];
    }
    mu /= kReps;
    ms /= kReps;
    double m2 = 0.0, m4 = 0.0, cov = 0.0, cov_sq = 0.0;
    for (int r = 0; r < kReps; ++r) {
      const double du = us[r] - mu, ds = ss[r] - ms;
      m2 += du * du;
      m4 += du * du * du * du;
      cov += du * ds;
      cov_sq += du * du * ds * ds;
    }
    const double var_u = m2 / (kReps - 1);
    m4 /= kReps;
    const double se_var = std::sqrt((m4 - var_u * var_u * (kReps - 3.0) / (kReps - 1.0)) / kReps);
    const double target = chi2_variance(d, n) * nd * nd - nd * inv_prob_variance(d);
    CHECK(std::fabs(var_u - target) <= 5.0 * se_var);

    cov /= (kReps - 1);
    const double se_cov = std::sqrt(std::max(cov_sq / kReps - cov * cov, 0.0) / kReps);
    CHECK(std::fabs(cov) <= 4.0 * se_cov + 1e-9 * std::fabs(ms) * std::sqrt(var_u));
  }
}
