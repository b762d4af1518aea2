#pragma once

#include "bergman/verification.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bergman {

inline constexpr const char* kOutputEnv = "BERGMAN_LP_OUTPUT";

/// Names accepted in the "experiments" list.
const std::vector<std::string>& experiment_names();

struct ContextConfig {
  std::optional<double> mu_override;
  bool global_mode = true;
  std::string chi_profile = "exp-step";
  std::string tau_policy = "mollified";
  int calibration_samples = 4000;
  std::uint64_t seed = 20240917;
};

struct ExperimentConfig {
  std::string name;
  std::optional<DomainParams> domain;        // falls back to the run domain
  std::optional<std::vector<double>> eps;    // falls back to the run eps list
  nlohmann::json options;                    // fully materialized after parsing
};

struct RunConfig {
  std::string name = "run";
  DomainParams domain{"ball", 1, {}, 0.0, 0.0};
  std::vector<double> eps{0.1, 0.05, 0.01};
  std::uint64_t seed = 20240917;
  int threads = 0;
  std::string output_dir;   // empty: env var, then ./bergman-lp-out
  ContextConfig context;
  std::vector<ExperimentConfig> experiments;
  nlohmann::json thresholds = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Parses and validates; every problem raises ConfigError naming the key path.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

DomainParams parse_domain(const nlohmann::json& j, const std::string& key);
nlohmann::json domain_to_json(const DomainParams& d);
/// Default options for an experiment on the given domain, used to fill unspecified keys.
nlohmann::json default_options(const std::string& experiment, const DomainParams& domain);

ContextOptions context_options(const ContextConfig& c);

/// Runs one experiment. Errors propagate.
ValidationReport run_experiment(const ExperimentConfig& e, const RunConfig& run, const Thresholds& th);

struct RunOutcome {
  int exit_code = 0;   // 0 all gates pass, 1 a gate failed
  std::filesystem::path directory;
  nlohmann::json report;
};

/// Output root: explicit argument, then the config, then $BERGMAN_LP_OUTPUT, then ./bergman-lp-out.
std::filesystem::path output_root(const RunConfig& cfg, const std::string& override_root = "");

/// Runs every experiment and writes config.json, report.json, CSV sidecars and summary.txt.
RunOutcome execute(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log);

/// Human-readable summary of a report.json document.
std::string summarize(const nlohmann::json& report);

}  // namespace bergman
