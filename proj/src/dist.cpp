#include "chi2r/dist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chi2r/errors.hpp"
#include "summation.hpp"

namespace chi2r {

namespace {

// Rejection-inversion helpers (Hoermann & Derflinger 1996), numerically
// stable forms of log1p(x)/x and expm1(x)/x.
double log1p_over_x(double x) {
  if (std::fabs(x) > 1e-8) return std::log1p(x) / x;
  return 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
}

double expm1_over_x(double x) {
  if (std::fabs(x) > 1e-8) return std::expm1(x) / x;
  return 1.0 + x * 0.5 * (1.0 + x / 3.0 * (1.0 + 0.25 * x));
}

struct PowerHat {
  double alpha;
  double h(double x) const { return std::exp(-alpha * std::log(x)); }
  double integral(double x) const {
    const double log_x = std::log(x);
    return expm1_over_x((1.0 - alpha) * log_x) * log_x;
  }
  double integral_inverse(double x) const {
    double t = x * (1.0 - alpha);
    if (t < -1.0) t = -1.0;
    return std::exp(log1p_over_x(t) * x);
  }
};

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::uniform:
      return "uniform";
    case Family::power_law:
      return "power_law";
    case Family::custom:
      return "custom";
  }
  return "unknown";
}

CellDistribution make_uniform(std::uint64_t m) {
  if (m == 0) throw InvalidParameter("make_uniform: m must be at least 1");
  CellDistribution d;
  d.family_ = Family::uniform;
  d.m_ = m;
  d.normalizer_ = static_cast<double>(m);
  return d;
}

CellDistribution make_power_law(double alpha, std::uint64_t m) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw InvalidParameter("make_power_law: alpha must lie in [0, 1)");
  }
  if (m == 0) throw InvalidParameter("make_power_law: m must be at least 1");
  CellDistribution d;
  d.family_ = Family::power_law;
  d.m_ = m;
  d.alpha_ = alpha;
  if (alpha == 0.0) {
    d.normalizer_ = static_cast<double>(m);
    return d;
  }
  detail::CompensatedSum c;
  for (std::uint64_t i = 1; i <= m; ++i) c.add(std::pow(static_cast<double>(i), -alpha));
  d.normalizer_ = c.value();

  const PowerHat hat{alpha};
  d.h_integral_x1_ = hat.integral(1.5) - 1.0;
  d.h_integral_m_ = hat.integral(static_cast<double>(m) + 0.5);
  d.squeeze_ = 2.0 - hat.integral_inverse(hat.integral(2.5) - hat.h(2.0));
  return d;
}

CellDistribution make_custom(std::vector<double> probs) {
  if (probs.empty()) throw InvalidParameter("make_custom: no probabilities given");
  if (probs.size() > kDenseCellCap) {
    throw ResourceError("make_custom: custom distributions are limited to 1e7 cells");
  }
  detail::CompensatedSum total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] <= 0.0) {
      std::ostringstream msg;
      msg << "make_custom: probability of cell " << i + 1 << " is not positive";
      throw InvalidParameter(msg.str());
    }
    total.add(probs[i]);
  }
  const double sum = total.value();
  if (std::fabs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "make_custom: probabilities sum to " << sum << ", not 1";
    throw InvalidParameter(msg.str());
  }
  if (sum != 1.0) {
    for (double& p : probs) p /= sum;
  }

  CellDistribution d;
  d.family_ = Family::custom;
  d.m_ = probs.size();
  d.cdf_.resize(probs.size());
  detail::CompensatedSum running;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    running.add(probs[i]);
    d.cdf_[i] = running.value();
  }
  d.cdf_.back() = 1.0;
  d.table_ = std::move(probs);
  return d;
}

double CellDistribution::prob(std::uint64_t cell) const noexcept {
  switch (family_) {
    case Family::uniform:
      return 1.0 / static_cast<double>(m_);
    case Family::power_law:
      if (alpha_ == 0.0) return 1.0 / static_cast<double>(m_);
      return std::pow(static_cast<double>(cell), -alpha_) / normalizer_;
    case Family::custom:
      return table_[cell - 1];
  }
  return 0.0;
}

double CellDistribution::inv_prob(std::uint64_t cell) const noexcept {
  if (is_uniform()) return static_cast<double>(m_);
  if (family_ == Family::power_law) {
    return normalizer_ * std::pow(static_cast<double>(cell), alpha_);
  }
  return 1.0 / table_[cell - 1];
}

std::vector<double> CellDistribution::probs() const {
  if (m_ > kDenseCellCap) {
    throw ResourceError("CellDistribution::probs: m exceeds the dense cap of 1e7 cells");
  }
  if (family_ == Family::custom) return table_;
  std::vector<double> out(m_);
  for (std::uint64_t i = 1; i <= m_; ++i) out[i - 1] = prob(i);
  return out;
}

std::uint64_t CellDistribution::sample(Stream& stream) const noexcept {
  switch (family_) {
    case Family::uniform:
      return 1 + stream.uniform_below(m_);
    case Family::power_law:
      if (alpha_ == 0.0) return 1 + stream.uniform_below(m_);
      return sample_power_law(stream);
    case Family::custom: {
      const double u = stream.uniform();
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      const auto idx = static_cast<std::uint64_t>(it - cdf_.begin());
      return std::min(idx, m_ - 1) + 1;
    }
  }
  return 1;
}

std::uint64_t CellDistribution::sample_power_law(Stream& stream) const noexcept {
  const PowerHat hat{alpha_};
  const double m = static_cast<double>(m_);
  for (;;) {
    const double u = h_integral_m_ + stream.uniform() * (h_integral_x1_ - h_integral_m_);
    const double x = hat.integral_inverse(u);
    double k = std::floor(x + 0.5);
    if (k < 1.0) {
      k = 1.0;
    } else if (k > m) {
      k = m;
    }
    if (k - x <= squeeze_ || u >= hat.integral(k + 0.5) - hat.h(k)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

double inv_prob_moment(const CellDistribution& d, double r) {
  if (!(r >= 0.0)) throw InvalidParameter("inv_prob_moment: r must be nonnegative");
  const double m = static_cast<double>(d.cells());
  if (d.is_uniform()) return std::pow(m, r);
  const double exponent = 1.0 - r;
  if (exponent == 0.0) return m;
  detail::CompensatedSum sum;
  for (std::uint64_t i = 1; i <= d.cells(); ++i) sum.add(std::pow(d.prob(i), exponent));
  return sum.value();
}

double inv_prob_variance(const CellDistribution& d) {
  if (d.is_uniform()) return 0.0;
  // sum_i p_i (1/p_i - m)^2 equals E p^-2 - m^2 without the cancellation.
  const double m = static_cast<double>(d.cells());
  detail::CompensatedSum sum;
  for (std::uint64_t i = 1; i <= d.cells(); ++i) {
    const double p = d.prob(i);
    const double dev = 1.0 / p - m;
    sum.add(p * dev * dev);
  }
  return sum.value();
}

double condition_c_ratio(const CellDistribution& d, std::uint64_t n) {
  if (n == 0) throw InvalidParameter("condition_c_ratio: n must be at least 1");
  return inv_prob_variance(d) / (static_cast<double>(d.cells()) * static_cast<double>(n));
}

double novnd_ratio(const CellDistribution& d, double delta) {
  if (!(delta > 0.0)) throw InvalidParameter("novnd_ratio: delta must be positive");
  const double m = static_cast<double>(d.cells());
  return inv_prob_moment(d, 1.0 + delta) / std::pow(m, 1.0 + delta);
}

}  // namespace chi2r
