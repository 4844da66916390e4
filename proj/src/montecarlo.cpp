#include "chi2r/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "chi2r/errors.hpp"

namespace chi2r {

namespace {

constexpr std::size_t kBlockSize = 4096;
constexpr double kGridLo = -8.0;
constexpr double kGridHi = 8.0;

// Runs body(i) for i in [0, count) on `workers` threads.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(16);
      if (start >= count) return;
      const std::size_t stop = std::min(count, start + 16);
      for (std::size_t i = start; i < stop; ++i) body(i);
    }
  };
  std::vector<std::jthread> pool;
  const unsigned spawned = std::min<std::size_t>(workers, count) - 1;
  pool.reserve(spawned);
  for (unsigned t = 0; t < spawned; ++t) pool.emplace_back(worker);
  worker();
}

// Single-pass mean and central moments up to order four (Pebay 2008).
class MomentAccumulator {
 public:
  void add(double x) noexcept {
    const double n1 = static_cast<double>(count_);
    ++count_;
    const double n = static_cast<double>(count_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
  }
  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
  }
  double central4() const noexcept {
    return count_ == 0 ? 0.0 : m4_ / static_cast<double>(count_);
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

class CovarianceAccumulator {
 public:
  void add(double x, double y) noexcept {
    ++count_;
    const double n = static_cast<double>(count_);
    const double dx = x - mean_x_;
    mean_x_ += dx / n;
    mean_y_ += (y - mean_y_) / n;
    comoment_ += dx * (y - mean_y_);
  }
  double covariance() const noexcept {
    return count_ < 2 ? 0.0 : comoment_ / static_cast<double>(count_ - 1);
  }

 private:
  std::uint64_t count_ = 0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double comoment_ = 0.0;
};

double grid_point(std::size_t j) {
  return kGridLo + (kGridHi - kGridLo) * static_cast<double>(j) /
                       static_cast<double>(kKsGridPoints - 1);
}

// CDF of the standardized statistic on a fixed grid, for streaming mode.
class GridCdf {
 public:
  GridCdf() : bins_(kKsGridPoints + 1, 0) {}

  void add(double x) {
    // Index of the first grid point >= x; values above the grid land in the
    // overflow bin.
    const double pos = (x - kGridLo) / (kGridHi - kGridLo) * static_cast<double>(kKsGridPoints - 1);
    std::size_t idx;
    if (!(pos > 0.0)) {
      idx = 0;
    } else if (pos > static_cast<double>(kKsGridPoints - 1)) {
      idx = kKsGridPoints;
    } else {
      idx = static_cast<std::size_t>(std::ceil(pos));
      while (idx > 0 && grid_point(idx - 1) >= x) --idx;
      while (idx < kKsGridPoints && grid_point(idx) < x) ++idx;
    }
    ++bins_[idx];
    ++total_;
  }

  double ks(const LimitLaw& law) const {
    double best = 0.0;
    std::uint64_t cumulative = 0;
    for (std::size_t j = 0; j < kKsGridPoints; ++j) {
      cumulative += bins_[j];
      const double emp = static_cast<double>(cumulative) / static_cast<double>(total_);
      best = std::max(best, std::fabs(emp - limit_cdf(law, grid_point(j))));
    }
    return best;
  }

 private:
  std::vector<std::uint64_t> bins_;
  std::uint64_t total_ = 0;
};

void validate(const ExperimentConfig& cfg) {
  if (cfg.n == 0) throw InvalidParameter("experiment: n must be at least 1");
  if (cfg.m == 0) throw InvalidParameter("experiment: m must be at least 1");
  if (cfg.convention == Convention::classical && cfg.m < 2) {
    throw InvalidParameter("experiment: classical convention needs m >= 2");
  }
}

}  // namespace

CellDistribution make_distribution(const DistributionSpec& spec, std::uint64_t m) {
  switch (spec.family) {
    case Family::uniform:
      return make_uniform(m);
    case Family::power_law:
      return make_power_law(spec.alpha, m);
    case Family::custom:
      if (spec.probs.size() != m) {
        std::ostringstream msg;
        msg << "custom distribution has " << spec.probs.size() << " cells but m = " << m;
        throw InvalidInput(msg.str());
      }
      return make_custom(spec.probs);
  }
  throw InvalidParameter("unknown distribution family");
}

unsigned resolve_workers(unsigned requested) {
  if (const char* env = std::getenv("CHI2_REGIMES_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value >= 1) return static_cast<unsigned>(value);
  }
  if (requested >= 1) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const CellDistribution d = make_distribution(cfg.distribution, cfg.m);

  ExperimentResult res;
  res.config = cfg;
  res.classification = classify_regime(cfg.n, cfg.m, cfg.thresholds);
  res.reference_law = cfg.law_override.value_or(res.classification.regime);
  if (res.config.replicates == 0) {
    res.config.replicates = res.classification.regime.kind() == LawKind::std_normal
                                ? kDefaultReplicatesNormal
                                : kDefaultReplicatesSparse;
  }
  const std::uint64_t replicates = res.config.replicates;
  const bool retain = cfg.retain_raw || replicates <= kRetainLimit;
  const unsigned workers = resolve_workers(cfg.workers);

  res.theory = theory_report(d, cfg.n);
  const double nn = static_cast<double>(cfg.n);
  res.collision_mean = nn * (nn - 1.0) / (2.0 * static_cast<double>(cfg.m));

  MomentAccumulator standardized_acc, chi2_acc, u_acc, s_acc, cov_term_acc;
  CovarianceAccumulator cov_acc;
  GridCdf grid;
  std::uint64_t zero_collisions = 0;
  if (retain) res.records.reserve(replicates);

  std::vector<ReplicateRecord> block;
  for (std::uint64_t base = 0; base < replicates; base += kBlockSize) {
    const std::size_t size = std::min<std::uint64_t>(kBlockSize, replicates - base);
    block.assign(size, ReplicateRecord{});
    parallel_for(size, workers, [&](std::size_t i) {
      Stream stream(cfg.seed, base + i);
      const SampleCounts counts = draw_counts(d, cfg.n, stream);
      const Chi2Breakdown b = decompose(d, counts);
      block[i] = {b.chi2, b.u_stat, b.s_stat, standardize(b, cfg.convention),
                  collision_pairs(counts)};
    });
    for (const auto& r : block) {
      standardized_acc.add(r.standardized);
      chi2_acc.add(r.chi2);
      u_acc.add(r.u);
      s_acc.add(r.s);
      cov_acc.add(r.u, r.s);
      cov_term_acc.add((r.u - res.theory.mean_u) * (r.s - res.theory.mean_s));
      ++res.collision_histogram[r.collisions];
      if (r.collisions == 0) ++zero_collisions;
      if (retain) {
        res.records.push_back(r);
      } else {
        grid.add(r.standardized);
      }
    }
  }

  res.empirical_mean = standardized_acc.mean();
  res.empirical_var = standardized_acc.variance();
  res.prob_at_zero = static_cast<double>(zero_collisions) / static_cast<double>(replicates);

  const LimitLaw poisson_law = LimitLaw::poisson_regime(res.classification.lambda_hat);
  if (retain) {
    std::vector<double> values(res.records.size());
    std::transform(res.records.begin(), res.records.end(), values.begin(),
                   [](const ReplicateRecord& r) { return r.standardized; });
    res.ks_normal = ks_distance(values, LimitLaw::std_normal());
    res.ks_poisson = ks_distance(values, poisson_law);
    res.ks_reference = ks_distance(values, res.reference_law);
  } else {
    res.ks_from_grid = true;
    res.ks_normal = grid.ks(LimitLaw::std_normal());
    res.ks_poisson = grid.ks(poisson_law);
    res.ks_reference = grid.ks(res.reference_law);
  }
  if (d.is_uniform() && cfg.n >= 2) {
    res.tv_poisson = tv_distance_poisson(res.collision_histogram, res.collision_mean);
  }

  auto& mom = res.moments;
  mom.count = replicates;
  mom.mean_chi2 = chi2_acc.mean();
  mom.var_chi2 = chi2_acc.variance();
  mom.central4_chi2 = chi2_acc.central4();
  mom.mean_u = u_acc.mean();
  mom.var_u = u_acc.variance();
  mom.mean_s = s_acc.mean();
  mom.var_s = s_acc.variance();
  mom.cov_us = cov_acc.covariance();
  mom.var_cov_term = cov_term_acc.variance();
  return res;
}

double ks_distance(std::span<const double> samples, const LimitLaw& law) {
  if (samples.empty()) throw InvalidInput("ks_distance: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = static_cast<double>(sorted.size());

  double best = 0.0;
  auto check = [&](double x, std::size_t below, std::size_t at_or_below) {
    const double emp_left = static_cast<double>(below) / total;
    const double emp = static_cast<double>(at_or_below) / total;
    best = std::max(best, std::fabs(emp - limit_cdf(law, x)));
    best = std::max(best, std::fabs(emp_left - limit_cdf_left(law, x)));
  };

  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    check(sorted[i], i, j);
    i = j;
  }

  auto check_atom = [&](double atom) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), atom) - sorted.begin();
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), atom) - sorted.begin();
    check(atom, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
  };
  if (law.kind() == LawKind::degenerate_zero) {
    check_atom(0.0);
  } else if (law.kind() == LawKind::poisson_regime) {
    const double mean = law.poisson_mean();
    for (std::uint64_t k = 0;; ++k) {
      const double mass = poisson_pmf(k, mean);
      if (mass >= 1e-12) {
        check_atom(law.atom(k));
      } else if (static_cast<double>(k) > mean) {
        break;
      }
    }
  }
  return best;
}

double tv_distance_poisson(const std::map<std::uint64_t, std::uint64_t>& histogram, double mean) {
  if (!(mean > 0.0)) throw InvalidParameter("tv_distance_poisson: mean must be positive");
  std::uint64_t total = 0;
  for (const auto& [value, freq] : histogram) total += freq;
  if (total == 0) throw InvalidInput("tv_distance_poisson: no counts");

  // Truncation point: Poisson mass above K is below 1e-9.
  auto cutoff = static_cast<std::uint64_t>(std::ceil(mean));
  while (poisson_upper(cutoff + 1, mean) >= 1e-9) ++cutoff;

  const double r = static_cast<double>(total);
  double sum = 0.0;
  double pmf = std::exp(-mean);
  auto it = histogram.begin();
  for (std::uint64_t k = 0; k <= cutoff; ++k) {
    if (k > 0) pmf = poisson_pmf(k, mean);
    double emp = 0.0;
    if (it != histogram.end() && it->first == k) {
      emp = static_cast<double>(it->second) / r;
      ++it;
    }
    sum += std::fabs(emp - pmf);
  }
  double empirical_tail = 0.0;
  for (; it != histogram.end(); ++it) empirical_tail += static_cast<double>(it->second) / r;
  const double tail = poisson_upper(cutoff + 1, mean) + empirical_tail;
  return std::min(1.0, 0.5 * sum + 0.5 * tail);
}

double tv_distance_poisson(std::span<const std::uint64_t> counts, double mean) {
  std::map<std::uint64_t, std::uint64_t> histogram;
  for (auto c : counts) ++histogram[c];
  return tv_distance_poisson(histogram, mean);
}

namespace {

Schedule checked(Schedule s) {
  if (s.points.empty()) throw InvalidParameter("schedule: no points");
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto [n, m] = s.points[i];
    if (n == 0 || m == 0) throw InvalidParameter("schedule: n and m must be positive");
    if (i > 0 && n <= s.points[i - 1].first) {
      throw InvalidParameter("schedule: n must be strictly increasing");
    }
  }
  return s;
}

}  // namespace

Schedule schedule_fixed_lambda(double lambda, std::vector<std::uint64_t> ns) {
  if (!(lambda > 0.0)) throw InvalidParameter("schedule: lambda must be positive");
  Schedule s{"fixed_lambda", {}};
  for (auto n : ns) {
    const double ratio = static_cast<double>(n) / lambda;
    const auto m = static_cast<std::uint64_t>(std::llround(ratio * ratio));
    s.points.emplace_back(n, std::max<std::uint64_t>(1, m));
  }
  return checked(std::move(s));
}

Schedule schedule_fixed_m(std::uint64_t m, std::vector<std::uint64_t> ns) {
  Schedule s{"fixed_m", {}};
  for (auto n : ns) s.points.emplace_back(n, m);
  return checked(std::move(s));
}

Schedule schedule_proportional(std::uint64_t ratio, std::vector<std::uint64_t> ms) {
  if (ratio == 0) throw InvalidParameter("schedule: ratio must be positive");
  Schedule s{"proportional", {}};
  for (auto m : ms) s.points.emplace_back(ratio * m, m);
  return checked(std::move(s));
}

Schedule schedule_explicit(std::vector<std::pair<std::uint64_t, std::uint64_t>> points) {
  return checked(Schedule{"explicit", std::move(points)});
}

std::vector<ExperimentResult> convergence_sweep(const Schedule& schedule,
                                                const ExperimentConfig& base) {
  checked(schedule);
  std::vector<ExperimentResult> out;
  out.reserve(schedule.points.size());
  for (std::size_t i = 0; i < schedule.points.size(); ++i) {
    ExperimentConfig cfg = base;
    cfg.n = schedule.points[i].first;
    cfg.m = schedule.points[i].second;
    cfg.seed = base.seed ^ static_cast<std::uint64_t>(i);
    out.push_back(run_experiment(cfg));
  }
  return out;
}

std::vector<MomentZScore> moment_check(const ExperimentResult& res, const TheoryReport& theory) {
  const auto& mom = res.moments;
  if (mom.count < 2) throw InvalidInput("moment_check: need at least two replicates");
  const double r = static_cast<double>(mom.count);

  auto make = [](std::string name, double estimate, double target, double se) {
    MomentZScore z{std::move(name), estimate, target, se, 0.0};
    const double err = estimate - target;
    if (se > 0.0) {
      z.z = err / se;
    } else {
      z.z = err == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), err);
    }
    return z;
  };

  // Biased second moment for the fourth-moment SE of the sample variance.
  const double m2 = mom.var_chi2 * (r - 1.0) / r;
  const double var_se = std::sqrt(std::max(0.0, mom.central4_chi2 - m2 * m2) / r);

  std::vector<MomentZScore> out;
  out.push_back(make("mean_chi2", mom.mean_chi2, theory.chi2_mean, std::sqrt(mom.var_chi2 / r)));
  out.push_back(make("var_chi2", mom.var_chi2, theory.chi2_var, var_se));
  out.push_back(make("mean_u", mom.mean_u, theory.mean_u, std::sqrt(mom.var_u / r)));
  out.push_back(make("mean_s", mom.mean_s, theory.mean_s, std::sqrt(mom.var_s / r)));
  out.push_back(make("cov_us", mom.cov_us, 0.0, std::sqrt(mom.var_cov_term / r)));
  return out;
}

}  // namespace chi2r
