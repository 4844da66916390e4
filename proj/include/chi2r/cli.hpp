#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chi2r/dist.hpp"
#include "chi2r/io.hpp"
#include "chi2r/limits.hpp"
#include "chi2r/stat.hpp"

namespace chi2r {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Goodness-of-fit summary.  All three reference p-values are reported;
/// `regime` is only the recommendation derived from lambda_hat.
struct GofReport {
  double chi2 = 0.0;
  double u = 0.0;
  double s = 0.0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t collisions = 0;
  double lambda_hat = 0.0;
  LimitLaw regime = LimitLaw::std_normal();
  RegimeThresholds thresholds;
  Convention convention = Convention::theorem;
  double standardized_theorem = 0.0;
  std::optional<double> standardized_classical;  // m >= 2
  double p_classical = 1.0;  // chi-square with m-1 degrees of freedom
  double p_normal = 1.0;     // N(0,1) tail of the chosen standardization
  double p_poisson = 1.0;    // shifted-scaled Poisson with lambda_hat
  std::optional<double> p_collision;  // uniform cells: P(Pois(n(n-1)/2m) >= collisions)
  double condition_c = 0.0;
  std::vector<std::string> warnings;
};

GofReport goodness_of_fit(const CellDistribution& d, const SampleCounts& counts,
                          Convention convention = Convention::theorem,
                          RegimeThresholds thresholds = {});

Json to_json(const GofReport& report);

/// Entry point of the chi2_regimes tool.  args excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on malformed data.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chi2r
