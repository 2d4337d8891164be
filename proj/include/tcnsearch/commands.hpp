#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcnsearch/network.hpp"
#include "tcnsearch/run_config.hpp"

namespace tcnsearch::cli {

// Paths of every file a command wrote, in write order.
using WrittenFiles = std::vector<std::string>;

// <out>/cohort.csv and <out>/truth_model.json. The truth model is the
// built-in reference model (cfg.table2) or the document at cfg.truth_path.
WrittenFiles cmd_generate(const RunConfig& cfg);

// <out>/models/<concept>.json + manifest.json, <out>/traces/stage1.csv,
// <out>/reports/front.csv, <out>/dot/<concept>.dot.
WrittenFiles cmd_search(const RunConfig& cfg);

// <out>/reports/validation.csv and validation.txt. An empty manifest path
// means <out>/models/manifest.json.
WrittenFiles cmd_validate(const RunConfig& cfg, const std::string& manifest_path = {});

// <out>/trajectory.csv: header plus one row per simulated day (1..horizon).
// Missing initial state means 0.5 for every concept.
WrittenFiles cmd_simulate(const RunConfig& cfg, const std::string& model_path,
                          const std::optional<tcn::StateVector>& initial = std::nullopt);

// <out>/reports/baseline.csv and baseline.txt.
WrittenFiles cmd_baseline(const RunConfig& cfg);

// "Activities done" -> "activities_done".
std::string file_stem(std::string_view concept_name);

// Comma-separated values, e.g. "0.2,0.5,0.7".
tcn::StateVector parse_state(std::string_view text);

}  // namespace tcnsearch::cli
