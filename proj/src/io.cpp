#include "chi2r/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "chi2r/errors.hpp"

namespace chi2r {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_uint(std::string_view s, std::uint64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

[[noreturn]] void bad_line(const char* what, std::size_t line_no, const std::string& line) {
  std::ostringstream msg;
  msg << what << ": malformed line " << line_no << ": '" << line << "'";
  throw DataError(msg.str());
}

template <class T>
T require(const Json& j, const char* field) {
  if (!j.contains(field)) throw UsageError(std::string("config: missing required field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("config: field '") + field + "' has the wrong type");
  }
}

template <class T>
T optional_field(const Json& j, const char* field, T fallback) {
  if (!j.contains(field) || j.at(field).is_null()) return fallback;
  return require<T>(j, field);
}

Family parse_family(const std::string& name) {
  if (name == "uniform") return Family::uniform;
  if (name == "power_law" || name == "powerlaw") return Family::power_law;
  if (name == "custom") return Family::custom;
  throw UsageError("config: unknown distribution '" + name +
                   "' (expected uniform, power_law or custom)");
}

LimitLaw parse_law(const Json& j) {
  const std::string kind = j.is_string() ? j.get<std::string>() : require<std::string>(j, "kind");
  if (kind == "degenerate_zero") return LimitLaw::degenerate_zero();
  if (kind == "std_normal") return LimitLaw::std_normal();
  if (kind == "poisson_regime") {
    if (!j.is_object()) throw UsageError("config: poisson_regime override needs a lambda");
    return LimitLaw::poisson_regime(require<double>(j, "lambda"));
  }
  throw UsageError("config: unknown law_override kind '" + kind + "'");
}

std::vector<std::uint64_t> uint_list(const Json& j, const char* field) {
  return require<std::vector<std::uint64_t>>(j, field);
}

Json nullable(const std::optional<double>& value) {
  return value ? Json(*value) : Json(nullptr);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

SampleCounts parse_counts_csv(std::istream& in, std::uint64_t m) {
  std::vector<CellCount> entries;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    CellCount e{};
    const bool ok = comma != std::string_view::npos && parse_uint(text.substr(0, comma), e.cell) &&
                    parse_uint(text.substr(comma + 1), e.count);
    if (!ok) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      bad_line("counts", line_no, line);
    }
    first_content = false;
    entries.push_back(e);
  }
  try {
    return SampleCounts(m, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("counts: ") + e.what());
  }
}

SampleCounts read_counts_csv(const std::filesystem::path& path, std::uint64_t m) {
  auto in = open_input(path);
  return parse_counts_csv(in, m);
}

std::vector<double> parse_probs_csv(std::istream& in) {
  std::vector<double> probs;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    double p = 0.0;
    if (!parse_real(text, p)) {
      if (first_content) {
        first_content = false;
        continue;
      }
      bad_line("probs", line_no, line);
    }
    first_content = false;
    probs.push_back(p);
  }
  if (probs.empty()) throw DataError("probs: no probabilities found");
  return probs;
}

std::vector<double> read_probs_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_probs_csv(in);
}

SampleSequence read_sequence_file(const std::filesystem::path& path, std::uint64_t m) {
  auto in = open_input(path);
  std::vector<std::uint64_t> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::uint64_t x = 0;
    if (!parse_uint(line, x)) bad_line("sequence", line_no, line);
    values.push_back(x);
  }
  try {
    return SampleSequence(m, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("sequence: ") + e.what());
  }
}

Json to_json(const LimitLaw& law) {
  Json j;
  j["kind"] = to_string(law.kind());
  if (law.kind() == LawKind::poisson_regime) j["lambda"] = law.lambda();
  return j;
}

Json to_json(const TheoryReport& r) {
  Json j;
  j["n"] = r.n;
  j["m"] = r.m;
  j["chi2_mean"] = r.chi2_mean;
  j["chi2_var"] = r.chi2_var;
  j["mean_u"] = r.mean_u;
  j["mean_s"] = r.mean_s;
  j["inv_prob_variance"] = r.inv_prob_variance;
  j["a_sum_mean"] = r.a_sum_mean;
  j["a_sum_m2"] = r.a_sum_m2;
  j["a_sum_m3"] = r.a_sum_m3;
  j["bks_max_cond"] = r.bks_max_cond;
  j["bks_sum_cond"] = r.bks_sum_cond;
  j["truncation_bound"] = {{"epsilon", r.epsilon},
                           {"value", r.truncation_bound},
                           {"negative", r.truncation_bound_negative}};
  j["condition_c"] = r.condition_c;
  j["novnd"] = {{"delta", r.delta}, {"value", r.novnd}};
  j["lyapunov_rate_terms"] = {{"delta", r.delta},
                              {"first", r.lyapunov.first},
                              {"second", r.lyapunov.second}};
  return j;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["distribution"] = to_string(cfg.distribution.family);
  if (cfg.distribution.family == Family::power_law) j["alpha"] = cfg.distribution.alpha;
  if (cfg.distribution.family == Family::custom) j["probs_file"] = cfg.distribution.probs_file;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["convention"] = to_string(cfg.convention);
  j["lambda_lo"] = cfg.thresholds.lambda_lo;
  j["lambda_hi"] = cfg.thresholds.lambda_hi;
  j["law_override"] = cfg.law_override ? to_json(*cfg.law_override) : Json(nullptr);
  j["retain_raw"] = cfg.retain_raw;
  return j;
}

Json to_json(const ExperimentResult& res) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["config"] = to_json(res.config);
  j["lambda_hat"] = res.classification.lambda_hat;
  j["regime"] = to_json(res.classification.regime);
  j["reference_law"] = to_json(res.reference_law);
  Json summary;
  summary["empirical_mean"] = res.empirical_mean;
  summary["empirical_var"] = res.empirical_var;
  summary["ks_normal"] = res.ks_normal;
  summary["ks_poisson"] = res.ks_poisson;
  summary["ks_reference"] = res.ks_reference;
  summary["ks_from_grid"] = res.ks_from_grid;
  summary["tv_poisson"] = nullable(res.tv_poisson);
  summary["collision_mean"] = res.collision_mean;
  summary["prob_at_zero"] = res.prob_at_zero;
  j["summary"] = summary;

  const auto& mom = res.moments;
  j["moments"] = {{"replicates", mom.count},      {"mean_chi2", mom.mean_chi2},
                  {"var_chi2", mom.var_chi2},     {"central4_chi2", mom.central4_chi2},
                  {"mean_u", mom.mean_u},         {"var_u", mom.var_u},
                  {"mean_s", mom.mean_s},         {"var_s", mom.var_s},
                  {"cov_us", mom.cov_us},         {"var_cov_term", mom.var_cov_term}};
  if (mom.count >= 2) {
    Json zs = Json::array();
    for (const auto& z : moment_check(res, res.theory)) {
      zs.push_back({{"name", z.name},
                    {"estimate", z.estimate},
                    {"target", z.target},
                    {"standard_error", z.standard_error},
                    {"z", z.z}});
    }
    j["moment_z"] = zs;
  }
  j["theory"] = to_json(res.theory);
  Json hist = Json::array();
  for (const auto& [k, freq] : res.collision_histogram) hist.push_back({k, freq});
  j["collision_histogram"] = hist;
  return j;
}

ExperimentConfig parse_experiment_config(const Json& j, bool require_size) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.distribution.family = parse_family(optional_field<std::string>(j, "distribution", "uniform"));
  if (cfg.distribution.family == Family::power_law) {
    cfg.distribution.alpha = require<double>(j, "alpha");
  }
  if (cfg.distribution.family == Family::custom) {
    cfg.distribution.probs_file = require<std::string>(j, "probs_file");
    cfg.distribution.probs = read_probs_csv(cfg.distribution.probs_file);
  }
  if (require_size) {
    cfg.n = require<std::uint64_t>(j, "n");
    if (cfg.distribution.family == Family::custom) {
      cfg.m = optional_field<std::uint64_t>(j, "m", cfg.distribution.probs.size());
    } else {
      cfg.m = require<std::uint64_t>(j, "m");
    }
  }
  cfg.replicates = optional_field<std::uint64_t>(j, "replicates", 0);
  if (!j.contains("replicates")) cfg.replicates = optional_field<std::uint64_t>(j, "R", 0);
  cfg.seed = optional_field<std::uint64_t>(j, "seed", 0);
  try {
    cfg.convention = parse_convention(optional_field<std::string>(j, "convention", "theorem"));
  } catch (const InvalidParameter& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  cfg.thresholds.lambda_lo = optional_field<double>(j, "lambda_lo", cfg.thresholds.lambda_lo);
  cfg.thresholds.lambda_hi = optional_field<double>(j, "lambda_hi", cfg.thresholds.lambda_hi);
  if (j.contains("law_override") && !j.at("law_override").is_null()) {
    cfg.law_override = parse_law(j.at("law_override"));
  }
  if (j.contains("workers") && !(j.at("workers").is_string() && j.at("workers") == "auto")) {
    cfg.workers = require<unsigned>(j, "workers");
  }
  cfg.retain_raw = optional_field<bool>(j, "retain_raw", false);
  return cfg;
}

Schedule parse_schedule(const Json& j) {
  if (!j.is_object()) throw UsageError("config: 'schedule' must be an object");
  const auto rule = require<std::string>(j, "rule");
  try {
    if (rule == "fixed_lambda") return schedule_fixed_lambda(require<double>(j, "lambda"), uint_list(j, "n"));
    if (rule == "fixed_m") return schedule_fixed_m(require<std::uint64_t>(j, "m"), uint_list(j, "n"));
    if (rule == "proportional") {
      return schedule_proportional(require<std::uint64_t>(j, "ratio"), uint_list(j, "m"));
    }
    if (rule == "explicit") {
      return schedule_explicit(
          require<std::vector<std::pair<std::uint64_t, std::uint64_t>>>(j, "points"));
    }
  } catch (const InvalidParameter& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  throw UsageError("config: unknown schedule rule '" + rule +
                   "' (expected fixed_lambda, fixed_m, proportional or explicit)");
}

void write_replicates_csv(const ExperimentResult& result, std::ostream& out) {
  out << "replicate,chi2,u,s,standardized,collisions\n";
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    out << std::to_string(i) << ',' << format_double(r.chi2) << ',' << format_double(r.u) << ','
        << format_double(r.s) << ',' << format_double(r.standardized) << ',' << std::to_string(r.collisions) << '\n';
  }
}

void write_series_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
  out << kSeriesHeader << '\n';
  for (const auto& r : results) {
    out << std::to_string(r.config.n) << ',' << std::to_string(r.config.m) << ',' << format_double(r.classification.lambda_hat)
        << ',' << format_double(r.ks_normal) << ','
        << format_double(r.tv_poisson.value_or(std::nan(""))) << ','
        << format_double(r.prob_at_zero) << ',' << format_double(r.empirical_mean) << ','
        << format_double(r.empirical_var) << '\n';
  }
}

}  // namespace chi2r
