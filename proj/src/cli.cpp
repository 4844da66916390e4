#include "chi2r/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "chi2r/asymptotics.hpp"
#include "chi2r/errors.hpp"
#include "chi2r/montecarlo.hpp"

namespace chi2r {

namespace fs = std::filesystem;

GofReport goodness_of_fit(const CellDistribution& d, const SampleCounts& counts,
                          Convention convention, RegimeThresholds thresholds) {
  const Chi2Breakdown b = decompose(d, counts);
  const auto cls = classify_regime(counts.n(), counts.cells(), thresholds);

  GofReport r;
  r.chi2 = b.chi2;
  r.u = b.u_stat;
  r.s = b.s_stat;
  r.n = b.n;
  r.m = b.m;
  r.collisions = collision_pairs(counts);
  r.lambda_hat = cls.lambda_hat;
  r.regime = cls.regime;
  r.thresholds = thresholds;
  r.convention = convention;
  r.standardized_theorem = standardize(b, Convention::theorem);
  if (b.m >= 2) {
    r.standardized_classical = standardize(b, Convention::classical);
    r.p_classical = classical_chi2_p_value(std::max(0.0, b.chi2), b.m - 1);
  }
  const double z = convention == Convention::classical && r.standardized_classical
                       ? *r.standardized_classical
                       : r.standardized_theorem;
  if (convention == Convention::classical && !r.standardized_classical) {
    r.warnings.push_back("classical standardization needs m >= 2; used the theorem convention");
  }
  r.p_normal = p_value_upper(LimitLaw::std_normal(), z);
  r.p_poisson = p_value_upper(LimitLaw::poisson_regime(cls.lambda_hat), r.standardized_theorem);
  if (d.is_uniform() && b.n >= 2) {
    const double nn = static_cast<double>(b.n);
    r.p_collision = poisson_upper(r.collisions, nn * (nn - 1.0) / (2.0 * static_cast<double>(b.m)));
  }
  r.condition_c = condition_c_ratio(d, b.n);

  if (r.condition_c > 0.1) {
    std::ostringstream msg;
    msg << "condition_c ratio " << format_double(r.condition_c)
        << " exceeds 0.1: the inverse-probability term is not negligible and the "
           "Poisson/normal references may be unreliable";
    r.warnings.push_back(msg.str());
  }
  auto near = [&](double threshold) {
    return r.lambda_hat >= threshold / 2.0 && r.lambda_hat <= threshold * 2.0;
  };
  if (near(thresholds.lambda_lo) || near(thresholds.lambda_hi)) {
    std::ostringstream msg;
    msg << "lambda_hat " << format_double(r.lambda_hat)
        << " is within a factor 2 of a regime threshold; compare all three p-values";
    r.warnings.push_back(msg.str());
  }
  return r;
}

Json to_json(const GofReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["chi2"] = r.chi2;
  j["u"] = r.u;
  j["s"] = r.s;
  j["n"] = r.n;
  j["m"] = r.m;
  j["collisions"] = r.collisions;
  j["lambda_hat"] = r.lambda_hat;
  j["regime"] = to_json(r.regime);
  j["lambda_lo"] = r.thresholds.lambda_lo;
  j["lambda_hi"] = r.thresholds.lambda_hi;
  j["convention"] = to_string(r.convention);
  j["standardized_theorem"] = r.standardized_theorem;
  j["standardized_classical"] = opt(r.standardized_classical);
  j["p_classical"] = r.p_classical;
  j["p_normal"] = r.p_normal;
  j["p_poisson"] = r.p_poisson;
  j["p_collision"] = opt(r.p_collision);
  j["condition_c"] = r.condition_c;
  j["warnings"] = r.warnings;
  return j;
}

namespace {

struct DistFlags {
  std::string dist = "uniform";
  double alpha = 0.0;
  std::uint64_t m = 0;
  std::string probs;

  void attach(CLI::App& app) {
    app.add_option("--dist", dist, "Cell distribution: uniform, powerlaw or custom")
        ->check(CLI::IsMember({"uniform", "powerlaw", "power_law", "custom"}));
    app.add_option("--alpha", alpha, "Power-law exponent in [0, 1)");
    app.add_option("--m", m, "Number of cells");
    app.add_option("--probs", probs, "CSV with one cell probability per line (custom)");
  }

  // Probability files are data; their failures map to exit code 2.
  CellDistribution resolve(Json& echo) const {
    if (!probs.empty() || dist == "custom") {
      if (probs.empty()) throw UsageError("--dist custom needs --probs FILE");
      std::vector<double> p = read_probs_csv(probs);
      if (m != 0 && m != p.size()) {
        throw DataError("--m " + std::to_string(m) + " disagrees with the " +
                        std::to_string(p.size()) + " probabilities in " + probs);
      }
      echo["distribution"] = "custom";
      echo["probs_file"] = probs;
      try {
        return make_custom(std::move(p));
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string("probs: ") + e.what());
      }
    }
    if (m == 0) throw UsageError("--m is required for the " + dist + " distribution");
    echo["m"] = m;
    if (dist == "uniform") {
      echo["distribution"] = "uniform";
      return make_uniform(m);
    }
    echo["distribution"] = "power_law";
    echo["alpha"] = alpha;
    try {
      return make_power_law(alpha, m);
    } catch (const InvalidParameter& e) {
      throw UsageError(e.what());
    }
  }
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config " + path + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Json envelope(const std::string& command) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  return j;
}

std::string summary_line(const ExperimentResult& r) {
  std::ostringstream line;
  line << "n=" << std::to_string(r.config.n) << " m=" << std::to_string(r.config.m)
       << " lambda_hat=" << format_double(r.classification.lambda_hat)
       << " regime=" << to_string(r.classification.regime.kind())
       << " replicates=" << std::to_string(r.config.replicates) << " seed=" << std::to_string(r.config.seed)
       << " convention=" << to_string(r.config.convention)
       << " mean=" << format_double(r.empirical_mean) << " var=" << format_double(r.empirical_var)
       << " ks_normal=" << format_double(r.ks_normal)
       << " tv_poisson=" << (r.tv_poisson ? format_double(*r.tv_poisson) : std::string("nan"))
       << " prob_at_zero=" << format_double(r.prob_at_zero);
  return line.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pearson chi-square in the growing-cells regimes", kToolName};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // gof
  auto* gof = app.add_subcommand("gof", "Goodness of fit of observed counts");
  std::string counts_file;
  DistFlags gof_dist;
  std::string convention_name = "theorem";
  RegimeThresholds thresholds;
  std::string out_dir;
  gof->add_option("--counts", counts_file, "CSV of cell_index,count rows")->required();
  gof_dist.attach(*gof);
  gof->add_option("--convention", convention_name, "theorem or classical")
      ->check(CLI::IsMember({"theorem", "classical"}));
  gof->add_option("--lambda-lo", thresholds.lambda_lo, "Degenerate/Poisson threshold on n/sqrt(m)");
  gof->add_option("--lambda-hi", thresholds.lambda_hi, "Poisson/normal threshold on n/sqrt(m)");
  gof->add_option("--out", out_dir, "Also write gof.json into this directory");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run one Monte Carlo experiment");
  std::string sim_config;
  std::string sim_out = ".";
  bool sim_csv = false;
  std::optional<std::uint64_t> seed_flag, replicates_flag;
  std::optional<std::string> sim_convention;
  simulate->add_option("config", sim_config, "Experiment config JSON")->required();
  simulate->add_option("--out", sim_out, "Output directory");
  simulate->add_flag("--csv", sim_csv, "Write per-replicate values to replicates.csv");
  simulate->add_option("--seed", seed_flag, "Override the config seed");
  simulate->add_option("--replicates", replicates_flag, "Override the replicate count");
  simulate->add_option("--convention", sim_convention, "Override the standardization")
      ->check(CLI::IsMember({"theorem", "classical"}));

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a convergence schedule");
  std::string sweep_config;
  std::string sweep_out;
  sweep->add_option("config", sweep_config, "Sweep config JSON with a 'schedule' object")
      ->required();
  sweep->add_option("--out", sweep_out, "Write series.csv and sweep.json here (default: stdout)");

  // theory
  auto* theory = app.add_subcommand("theory", "Exact finite-n theory values");
  std::uint64_t theory_n = 0;
  DistFlags theory_dist;
  double delta = 1.0;
  double epsilon = 0.5;
  theory->add_option("--n", theory_n, "Sample size")->required();
  theory_dist.attach(*theory);
  theory->add_option("--delta", delta, "Moment exponent for the Gaussian-regime diagnostics");
  theory->add_option("--epsilon", epsilon, "Truncation level of the Poisson-regime bound");
  std::string theory_out;
  theory->add_option("--out", theory_out, "Also write theory.json into this directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gof->parsed()) {
      Json echo;
      const CellDistribution d = gof_dist.resolve(echo);
      const SampleCounts counts = read_counts_csv(counts_file, d.cells());
      const GofReport report =
          goodness_of_fit(d, counts, parse_convention(convention_name), thresholds);
      Json j = envelope("gof");
      echo["counts_file"] = counts_file;
      j["config"] = echo;
      j["report"] = to_json(report);
      const std::string text = j.dump(2) + "\n";
      out << text;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "gof.json", text);
      }
      return kExitOk;
    }

    if (simulate->parsed()) {
      Json raw = read_json_file(sim_config);
      ExperimentConfig cfg = parse_experiment_config(raw);
      if (seed_flag) cfg.seed = *seed_flag;
      if (replicates_flag) cfg.replicates = *replicates_flag;
      if (sim_convention) cfg.convention = parse_convention(*sim_convention);
      const bool csv = sim_csv || (raw.contains("csv") && raw["csv"].is_boolean() && raw["csv"].get<bool>());
      if (csv) cfg.retain_raw = true;
      const ExperimentResult result = run_experiment(cfg);
      fs::create_directories(sim_out);
      write_text(fs::path(sim_out) / "result.json", to_json(result).dump(2) + "\n");
      if (csv) {
        std::ostringstream rows;
        write_replicates_csv(result, rows);
        write_text(fs::path(sim_out) / "replicates.csv", rows.str());
      }
      out << summary_line(result) << "\n";
      return kExitOk;
    }

    if (sweep->parsed()) {
      Json raw = read_json_file(sweep_config);
      if (!raw.is_object() || !raw.contains("schedule")) {
        throw UsageError("config: missing required field 'schedule'");
      }
      const Schedule schedule = parse_schedule(raw["schedule"]);
      const ExperimentConfig base = parse_experiment_config(raw, false);
      const auto results = convergence_sweep(schedule, base);
      std::ostringstream csv;
      write_series_csv(results, csv);
      if (sweep_out.empty()) {
        out << csv.str();
      } else {
        fs::create_directories(sweep_out);
        write_text(fs::path(sweep_out) / "series.csv", csv.str());
        Json j = envelope("sweep");
        j["schedule_rule"] = schedule.rule;
        j["results"] = Json::array();
        for (const auto& r : results) j["results"].push_back(to_json(r));
        write_text(fs::path(sweep_out) / "sweep.json", j.dump(2) + "\n");
        for (const auto& r : results) out << summary_line(r) << "\n";
      }
      return kExitOk;
    }

    if (theory->parsed()) {
      Json echo;
      const CellDistribution d = theory_dist.resolve(echo);
      Json j = envelope("theory");
      echo["n"] = theory_n;
      echo["delta"] = delta;
      echo["epsilon"] = epsilon;
      j["config"] = echo;
      j["report"] = to_json(theory_report(d, theory_n, delta, epsilon));
      const std::string text = j.dump(2) + "\n";
      out << text;
      if (!theory_out.empty()) {
        fs::create_directories(theory_out);
        write_text(fs::path(theory_out) / "theory.json", text);
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace chi2r
