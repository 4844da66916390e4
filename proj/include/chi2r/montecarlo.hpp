#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chi2r/asymptotics.hpp"
#include "chi2r/dist.hpp"
#include "chi2r/limits.hpp"
#include "chi2r/stat.hpp"

namespace chi2r {

/// Family description that can be instantiated for any m.
struct DistributionSpec {
  Family family = Family::uniform;
  double alpha = 0.0;              // power_law
  std::vector<double> probs;       // custom
  std::string probs_file;          // custom, echoed in outputs

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

CellDistribution make_distribution(const DistributionSpec& spec, std::uint64_t m);

/// Replicate counts above this are aggregated in streaming mode unless
/// ExperimentConfig::retain_raw is set.
inline constexpr std::uint64_t kRetainLimit = 100'000;
inline constexpr std::size_t kKsGridPoints = 4096;
inline constexpr std::uint64_t kDefaultReplicatesNormal = 2000;
inline constexpr std::uint64_t kDefaultReplicatesSparse = 20000;

struct ExperimentConfig {
  DistributionSpec distribution;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t replicates = 0;  // 0: regime default
  std::uint64_t seed = 0;
  Convention convention = Convention::theorem;
  std::optional<LimitLaw> law_override;
  RegimeThresholds thresholds;
  unsigned workers = 0;  // 0: auto; never affects results
  bool retain_raw = false;
};

struct ReplicateRecord {
  double chi2 = 0.0;
  double u = 0.0;
  double s = 0.0;
  double standardized = 0.0;
  std::uint64_t collisions = 0;
};

/// Replicate-sample moments sufficient for moment_check.
struct MomentSummary {
  std::uint64_t count = 0;
  double mean_chi2 = 0.0;
  double var_chi2 = 0.0;         // unbiased
  double central4_chi2 = 0.0;    // biased fourth central moment
  double mean_u = 0.0;
  double var_u = 0.0;
  double mean_s = 0.0;
  double var_s = 0.0;
  double cov_us = 0.0;           // unbiased
  double var_cov_term = 0.0;     // variance of (U - EU)(S - ES)
};

struct ExperimentResult {
  ExperimentConfig config;  // replicates resolved
  RegimeClassification classification;
  LimitLaw reference_law = LimitLaw::std_normal();
  double empirical_mean = 0.0;  // standardized statistic
  double empirical_var = 0.0;
  double ks_normal = 0.0;
  double ks_poisson = 0.0;      // against poisson_regime(lambda_hat)
  double ks_reference = 0.0;    // against reference_law
  bool ks_from_grid = false;
  std::optional<double> tv_poisson;  // uniform cells, n >= 2
  double collision_mean = 0.0;       // n(n-1)/(2m)
  double prob_at_zero = 0.0;         // fraction of replicates without collisions
  MomentSummary moments;
  TheoryReport theory;
  std::map<std::uint64_t, std::uint64_t> collision_histogram;
  std::vector<ReplicateRecord> records;  // empty in streaming mode
};

/// Runs R seeded replicates.  Replicate i draws from Stream(seed, i) and
/// results are folded in replicate order, so the output does not depend on
/// the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// sup_x |F_emp(x) - F(x)|, checked on both sides of every sample point
/// and, for atomic laws, at every atom of mass >= 1e-12.
double ks_distance(std::span<const double> samples, const LimitLaw& law);

/// Total variation between the empirical law of `counts` and Pois(mean).
double tv_distance_poisson(std::span<const std::uint64_t> counts, double mean);
double tv_distance_poisson(const std::map<std::uint64_t, std::uint64_t>& histogram, double mean);

struct Schedule {
  std::string rule;  // fixed_lambda | fixed_m | proportional | explicit
  std::vector<std::pair<std::uint64_t, std::uint64_t>> points;  // (n, m)
};

/// m = round((n / lambda)^2).
Schedule schedule_fixed_lambda(double lambda, std::vector<std::uint64_t> ns);
/// Constant m, growing n.
Schedule schedule_fixed_m(std::uint64_t m, std::vector<std::uint64_t> ns);
/// n = ratio * m.
Schedule schedule_proportional(std::uint64_t ratio, std::vector<std::uint64_t> ms);
Schedule schedule_explicit(std::vector<std::pair<std::uint64_t, std::uint64_t>> points);

/// One experiment per schedule point; point i runs with seed ^ i.
std::vector<ExperimentResult> convergence_sweep(const Schedule& schedule,
                                                const ExperimentConfig& base);

struct MomentZScore {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
};

/// (estimate - exact) / SE for mean chi2, Var chi2, mean U, mean S and
/// Cov(U, S).  A zero SE with zero error gives z = 0.
std::vector<MomentZScore> moment_check(const ExperimentResult& res, const TheoryReport& theory);

/// Worker count actually used: CHI2_REGIMES_WORKERS if set, else the
/// request, else hardware concurrency.
unsigned resolve_workers(unsigned requested);

}  // namespace chi2r
