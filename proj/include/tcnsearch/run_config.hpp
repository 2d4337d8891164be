#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/nsga2.hpp"
#include "tcnsearch/synthetic.hpp"
#include "tcnsearch/two_stage.hpp"

namespace tcnsearch::cli {

// Everything a subcommand needs. Sources, in increasing precedence:
// built-in defaults, the JSON config document, command-line flags.
struct RunConfig {
  std::string cohort_path;
  std::string out_dir = "out";
  ema::SplitSpec split;
  int horizon_days = 14;
  int steps_per_day = tcn::kDefaultStepsPerDay;
  double max_speed = tcn::TemporalCausalModel::kDefaultMaxSpeed;
  double initial_edge_density = 0.3;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  nsga2::GaConfig stage_one = nsga2::GaConfig::stage_one_defaults();
  nsga2::GaConfig stage_two = nsga2::GaConfig::stage_two_defaults();

  // `generate` only
  std::size_t clients = 20;
  int days = 42;
  double noise_sd = 0.05;
  double missing_rate = 0.2;
  bool table2 = false;
  std::string truth_path;

  // Throws ConfigError.
  void validate() const;

  search::SearchSettings settings() const;
  // GA configs carrying seeds derived from the master seed.
  nsga2::GaConfig seeded_stage_one() const;
  nsga2::GaConfig seeded_stage_two() const;
  ema::SyntheticSpec synthetic_spec() const;
};

// Unknown keys are rejected so that typos do not silently fall back to defaults.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);

// Hex digest of the canonical config with run-environment fields
// (output directory, parallelism) left out.
std::string config_hash(const RunConfig& cfg);

}  // namespace tcnsearch::cli
