#include "tcnsearch/run_config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"
#include "tcnsearch/random.hpp"

namespace tcnsearch::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
}

template <class T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}.{} has the wrong type", where, key));
  }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v, where);
  out = v;
}

nsga2::GaConfig ga_from_json(const json& j, nsga2::GaConfig cfg, std::string_view where) {
  reject_unknown(j,
                 {"population_size", "generations", "crossover_rate", "mutation_rate", "sbx_eta", "polynomial_eta",
                  "block_swap_rate", "bit_flip_rate"},
                 where);
  read(j, "population_size", cfg.population_size, where);
  read(j, "generations", cfg.generations, where);
  read(j, "crossover_rate", cfg.crossover_rate, where);
  read(j, "mutation_rate", cfg.mutation_rate, where);
  read(j, "sbx_eta", cfg.sbx_eta, where);
  read(j, "polynomial_eta", cfg.polynomial_eta, where);
  read(j, "block_swap_rate", cfg.block_swap_rate, where);
  read(j, "bit_flip_rate", cfg.bit_flip_rate, where);
  return cfg;
}

json ga_to_json(const nsga2::GaConfig& cfg) {
  json j;
  j["population_size"] = cfg.population_size;
  j["generations"] = cfg.generations;
  j["crossover_rate"] = cfg.crossover_rate;
  j["mutation_rate"] = cfg.mutation_rate ? json(*cfg.mutation_rate) : json(nullptr);
  j["sbx_eta"] = cfg.sbx_eta;
  j["polynomial_eta"] = cfg.polynomial_eta;
  j["block_swap_rate"] = cfg.block_swap_rate;
  j["bit_flip_rate"] = cfg.bit_flip_rate ? json(*cfg.bit_flip_rate) : json(nullptr);
  return j;
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void RunConfig::validate() const {
  if (horizon_days < 1) throw ConfigError("horizon_days must be at least 1");
  if (horizon_days > split.test_days)
    throw ConfigError(fmt::format("horizon_days ({}) exceeds test_days ({})", horizon_days, split.test_days));
  if (days < 1) throw ConfigError("days must be at least 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be non-negative");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must be in [0,1)");
  try {
    split.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  settings().validate();
  stage_one.validate();
  stage_two.validate();
}

search::SearchSettings RunConfig::settings() const {
  search::SearchSettings s;
  s.horizon_days = horizon_days;
  s.steps_per_day = steps_per_day;
  s.max_speed = max_speed;
  s.initial_edge_density = initial_edge_density;
  s.jobs = jobs;
  return s;
}

nsga2::GaConfig RunConfig::seeded_stage_one() const {
  auto cfg = stage_one;
  cfg.seed = derive_seed(seed, {1});
  return cfg;
}

nsga2::GaConfig RunConfig::seeded_stage_two() const {
  auto cfg = stage_two;
  cfg.seed = derive_seed(seed, {2});
  return cfg;
}

ema::SyntheticSpec RunConfig::synthetic_spec() const {
  ema::SyntheticSpec s;
  s.clients = clients;
  s.days = days;
  s.noise_sd = noise_sd;
  s.missing_rate = missing_rate;
  s.seed = derive_seed(seed, {3});
  s.steps_per_day = steps_per_day;
  return s;
}

RunConfig config_from_json(const json& j, RunConfig cfg) {
  reject_unknown(j,
                 {"cohort", "out", "split", "horizon_days", "steps_per_day", "max_speed", "initial_edge_density", "seed",
                  "jobs", "stage1", "stage2", "synthetic"},
                 "config");
  read(j, "cohort", cfg.cohort_path, "config");
  read(j, "out", cfg.out_dir, "config");
  read(j, "horizon_days", cfg.horizon_days, "config");
  read(j, "steps_per_day", cfg.steps_per_day, "config");
  read(j, "max_speed", cfg.max_speed, "config");
  read(j, "initial_edge_density", cfg.initial_edge_density, "config");
  read(j, "seed", cfg.seed, "config");
  read(j, "jobs", cfg.jobs, "config");
  if (auto it = j.find("split"); it != j.end()) {
    reject_unknown(*it, {"train_days", "test_days", "validation_days"}, "split");
    read(*it, "train_days", cfg.split.train_days, "split");
    read(*it, "test_days", cfg.split.test_days, "split");
    read(*it, "validation_days", cfg.split.validation_days, "split");
  }
  if (auto it = j.find("stage1"); it != j.end()) cfg.stage_one = ga_from_json(*it, cfg.stage_one, "stage1");
  if (auto it = j.find("stage2"); it != j.end()) cfg.stage_two = ga_from_json(*it, cfg.stage_two, "stage2");
  if (auto it = j.find("synthetic"); it != j.end()) {
    reject_unknown(*it, {"clients", "days", "noise_sd", "missing_rate", "table2", "truth"}, "synthetic");
    read(*it, "clients", cfg.clients, "synthetic");
    read(*it, "days", cfg.days, "synthetic");
    read(*it, "noise_sd", cfg.noise_sd, "synthetic");
    read(*it, "missing_rate", cfg.missing_rate, "synthetic");
    read(*it, "table2", cfg.table2, "synthetic");
    read(*it, "truth", cfg.truth_path, "synthetic");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("config '{}': {}", path, e.what()), 0);
  }
  return config_from_json(j, std::move(base));
}

json to_json(const RunConfig& cfg) {
  json j;
  j["cohort"] = cfg.cohort_path;
  j["out"] = cfg.out_dir;
  j["split"] = {{"train_days", cfg.split.train_days},
                {"test_days", cfg.split.test_days},
                {"validation_days", cfg.split.validation_days}};
  j["horizon_days"] = cfg.horizon_days;
  j["steps_per_day"] = cfg.steps_per_day;
  j["max_speed"] = cfg.max_speed;
  j["initial_edge_density"] = cfg.initial_edge_density;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["stage1"] = ga_to_json(cfg.stage_one);
  j["stage2"] = ga_to_json(cfg.stage_two);
  j["synthetic"] = {{"clients", cfg.clients},   {"days", cfg.days},     {"noise_sd", cfg.noise_sd},
                    {"missing_rate", cfg.missing_rate}, {"table2", cfg.table2}, {"truth", cfg.truth_path}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out");
  j.erase("jobs");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

}  // namespace tcnsearch::cli
