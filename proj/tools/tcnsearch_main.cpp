#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tcnsearch/commands.hpp"
#include "tcnsearch/error.hpp"

namespace {

// Errors go out as one line: "tcnsearch: error[<category>]: <message>".
int report(std::string_view category, std::string message) {
  for (auto& c : message)
    if (c == '\n' || c == '\r') c = ' ';
  fmt::print(stderr, "tcnsearch: error[{}]: {}\n", category, message);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using tcnsearch::cli::RunConfig;

  CLI::App app{"Temporal-causal network structure search for EMA time series"};
  app.set_version_flag("--version", std::string(TCNSEARCH_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, cohort, out, truth, model, initial, manifest;
  std::uint64_t seed = 0;
  std::size_t clients = 0;
  int days = 0, horizon = 0, steps = 0;
  unsigned jobs = 0;
  double noise_sd = 0, missing_rate = 0;
  bool table2 = false;

  app.add_option("--config", config_path, "JSON run configuration");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_cohort = app.add_option("--cohort", cohort, "cohort CSV");
  auto* o_clients = app.add_option("--clients", clients, "synthetic clients");
  auto* o_days = app.add_option("--days", days, "synthetic days per client");
  auto* o_noise = app.add_option("--noise-sd", noise_sd, "synthetic noise sd");
  auto* o_missing = app.add_option("--missing-rate", missing_rate, "synthetic missing-value probability");
  auto* o_table2 = app.add_flag("--table2", table2, "use the built-in reference truth model");
  auto* o_truth = app.add_option("--truth", truth, "truth model document for generate");
  auto* o_horizon = app.add_option("--horizon", horizon, "forecast horizon in days");
  auto* o_steps = app.add_option("--steps-per-day", steps, "Euler steps per day");
  auto* o_jobs = app.add_option("--jobs", jobs, "worker threads (0 = all cores)");

  auto* generate = app.add_subcommand("generate", "write a synthetic cohort and its truth model");
  auto* search = app.add_subcommand("search", "two-stage structure search; writes champion models");
  auto* validate = app.add_subcommand("validate", "score champions and baselines on the validation window");
  validate->add_option("--manifest", manifest, "champion manifest (default <out>/models/manifest.json)");
  auto* simulate = app.add_subcommand("simulate", "simulate a model document");
  simulate->add_option("--model", model, "model document")->required();
  simulate->add_option("--initial", initial, "initial state, comma separated (default 0.5 each)");
  auto* baseline = app.add_subcommand("baseline", "baseline predictors only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = tcnsearch::cli::load_config_file(config_path, cfg);
    if (o_seed->count()) cfg.seed = seed;
    if (o_out->count()) cfg.out_dir = out;
    if (o_cohort->count()) cfg.cohort_path = cohort;
    if (o_clients->count()) cfg.clients = clients;
    if (o_days->count()) cfg.days = days;
    if (o_noise->count()) cfg.noise_sd = noise_sd;
    if (o_missing->count()) cfg.missing_rate = missing_rate;
    if (o_table2->count()) cfg.table2 = table2;
    if (o_truth->count()) cfg.truth_path = truth;
    if (o_horizon->count()) cfg.horizon_days = horizon;
    if (o_steps->count()) cfg.steps_per_day = steps;
    if (o_jobs->count()) cfg.jobs = jobs;

    tcnsearch::cli::WrittenFiles written;
    if (*generate) written = tcnsearch::cli::cmd_generate(cfg);
    else if (*search) written = tcnsearch::cli::cmd_search(cfg);
    else if (*validate) written = tcnsearch::cli::cmd_validate(cfg, manifest);
    else if (*simulate) {
      std::optional<tcnsearch::tcn::StateVector> x0;
      if (!initial.empty()) x0 = tcnsearch::cli::parse_state(initial);
      written = tcnsearch::cli::cmd_simulate(cfg, model, x0);
    } else if (*baseline) written = tcnsearch::cli::cmd_baseline(cfg);
    for (const auto& f : written) fmt::print("wrote {}\n", f);
  } catch (const tcnsearch::Error& e) {
    return report(e.category(), e.what());
  } catch (const std::exception& e) {
    return report("internal", e.what());
  }
  return 0;
}
