#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "chi2r/asymptotics.hpp"
#include "chi2r/montecarlo.hpp"
#include "chi2r/stat.hpp"

namespace chi2r {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "chi2_regimes";
inline constexpr const char* kToolVersion = CHI2R_VERSION;

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

/// "cell_index,count" rows; a non-numeric first line is taken as a header.
/// Blank lines are skipped.  Throws DataError on anything else.
SampleCounts read_counts_csv(const std::filesystem::path& path, std::uint64_t m);
SampleCounts parse_counts_csv(std::istream& in, std::uint64_t m);

/// One probability per line, optional header.
std::vector<double> read_probs_csv(const std::filesystem::path& path);
std::vector<double> parse_probs_csv(std::istream& in);

/// One cell index per line.
SampleSequence read_sequence_file(const std::filesystem::path& path, std::uint64_t m);

Json to_json(const LimitLaw& law);
Json to_json(const TheoryReport& report);
Json to_json(const ExperimentConfig& cfg);
Json to_json(const ExperimentResult& result);

/// Parses an experiment description.  Missing or ill-typed fields raise
/// UsageError naming the field; an unreadable probs_file raises DataError.
/// When require_size is false, n and m may be absent (sweeps).
ExperimentConfig parse_experiment_config(const Json& j, bool require_size = true);

Schedule parse_schedule(const Json& j);

/// "replicate,chi2,u,s,standardized,collisions"
void write_replicates_csv(const ExperimentResult& result, std::ostream& out);

/// "n,m,lambda_hat,ks_normal,tv_poisson,prob_at_zero,emp_mean,emp_var"
inline constexpr const char* kSeriesHeader =
    "n,m,lambda_hat,ks_normal,tv_poisson,prob_at_zero,emp_mean,emp_var";
void write_series_csv(const std::vector<ExperimentResult>& results, std::ostream& out);

}  // namespace chi2r
