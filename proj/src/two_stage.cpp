#include "tcnsearch/two_stage.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"
#include "tcnsearch/parallel.hpp"
#include "tcnsearch/random.hpp"

namespace tcnsearch::search {

void SearchSettings::validate() const {
  if (horizon_days < 1) throw ConfigError("horizon_days must be >= 1");
  if (steps_per_day < 1) throw ConfigError("steps_per_day must be >= 1");
  if (!(max_speed > 0.0) || static_cast<double>(steps_per_day) < max_speed)
    throw ConfigError(fmt::format("steps_per_day {} must be at least max_speed {}", steps_per_day, max_speed));
  if (!(initial_edge_density >= 0.0 && initial_edge_density <= 1.0))
    throw ConfigError("initial_edge_density must be in [0,1]");
}

// ---- parameter layout ------------------------------------------------------

namespace {

constexpr double kMinSteepness = 0.01;

// (all but the last `days` days, the last `days` days)
std::pair<ema::SeriesWindow, ema::SeriesWindow> split_at_end(const ema::SeriesWindow& w, int days) {
  const int cut = w.end_day() - days;
  std::pair<ema::SeriesWindow, ema::SeriesWindow> out{{w.client_id, w.first_day, cut - w.first_day, {}},
                                                      {w.client_id, cut, days, {}}};
  for (const auto& o : w.observations) (o.day < cut ? out.first : out.second).observations.push_back(o);
  return out;
}

}  // namespace

ParameterLayout::ParameterLayout(const tcn::NetworkStructure& structure, double max_speed)
    : concepts_(structure.size()), base_(tcn::ModelParameters::defaults_for(structure)) {
  const std::size_t k = concepts_;
  auto add = [&](Slot s, std::size_t a, std::size_t b, double lo, double hi) {
    entries_.push_back({s, a, b});
    bounds_.lower.push_back(lo);
    bounds_.upper.push_back(hi);
  };
  for (std::size_t from = 0; from < k; ++from)
    for (std::size_t to = 0; to < k; ++to)
      if (structure.edge(from, to)) add(Slot::Weight, from, to, -1.0, 1.0);
  for (std::size_t j = 0; j < k; ++j) add(Slot::Speed, j, 0, 0.0, max_speed);
  for (std::size_t j = 0; j < k; ++j) {
    if (structure.in_degree(j) == 0) continue;
    switch (structure.combiner(j)) {
      case tcn::CombiningFunctionId::ScaledSum:
        add(Slot::Scale, j, 0, 1.0, std::max(1.0, static_cast<double>(structure.in_degree(j))));
        break;
      case tcn::CombiningFunctionId::SimpleLogistic:
        add(Slot::Steepness, j, 0, std::log(kMinSteepness), std::log(tcn::kMaxSteepness));
        add(Slot::Threshold, j, 0, 0.0, 1.0);
        break;
      default:
        break;
    }
  }
}

tcn::ModelParameters ParameterLayout::decode(std::span<const double> genome) const {
  if (genome.size() != entries_.size()) throw ContractViolation("ParameterLayout::decode: genome length mismatch");
  tcn::ModelParameters p = base_;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const double v = std::clamp(genome[i], bounds_.lower[i], bounds_.upper[i]);
    switch (e.slot) {
      case Slot::Weight:
        p.weights[e.a * concepts_ + e.b] = v;
        break;
      case Slot::Speed:
        p.speed[e.a] = v;
        break;
      case Slot::Scale:
        p.shape[e.a].scale = v;
        break;
      case Slot::Steepness:
        p.shape[e.a].steepness = std::exp(v);
        break;
      case Slot::Threshold:
        p.shape[e.a].threshold = v;
        break;
    }
  }
  return p;
}

std::vector<double> ParameterLayout::encode(const tcn::ModelParameters& p) const {
  std::vector<double> g(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    switch (e.slot) {
      case Slot::Weight:
        g[i] = p.weights[e.a * concepts_ + e.b];
        break;
      case Slot::Speed:
        g[i] = p.speed[e.a];
        break;
      case Slot::Scale:
        g[i] = p.shape[e.a].scale;
        break;
      case Slot::Steepness:
        g[i] = std::log(p.shape[e.a].steepness);
        break;
      case Slot::Threshold:
        g[i] = p.shape[e.a].threshold;
        break;
    }
  }
  return g;
}

// ---- stage 2 ---------------------------------------------------------------

StageTwoResult fit_parameters(const tcn::NetworkStructure& structure, const ema::SeriesWindow& history,
                              const ema::SeriesWindow& scored, const nsga2::GaConfig& cfg,
                              const SearchSettings& settings) {
  if (scored.first_day != history.end_day())
    throw ContractViolation("fit_parameters: scored window must start right after the history");
  if (scored.length < 1) throw ContractViolation("fit_parameters: empty scored window");
  const std::size_t k = structure.size();
  const ParameterLayout layout(structure, settings.max_speed);
  const nsga2::RealEncoding encoding{layout.bounds()};

  auto forecast_error = [&](const nsga2::RealVector& genome) {
    const tcn::TemporalCausalModel model(structure, layout.decode(genome), settings.max_speed);
    return tcn::score(tcn::predict(model, history, scored.length, settings.steps_per_day), scored);
  };
  const auto run = nsga2::evolve(encoding, nsga2::per_genome<nsga2::RealVector>(forecast_error), cfg);

  StageTwoResult out;
  out.client_id = history.client_id;
  out.failed_evaluations = run.failed_evaluations;
  out.min_error.assign(k, kUnscorable);
  out.supplier.assign(k, kNoSupplier);
  for (auto idx : run.front) {
    const auto& ind = run.population[idx];
    if (!ind.failed) out.front.push_back({layout.decode(ind.genome), ind.objectives});
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (history.present_count(j) == 0) continue;
    for (std::size_t m = 0; m < out.front.size(); ++m) {
      const double e = out.front[m].error[j];
      if (is_unscorable(e)) continue;
      if (out.supplier[j] == kNoSupplier || e < out.min_error[j]) {
        out.min_error[j] = e;
        out.supplier[j] = m;
      }
    }
  }
  return out;
}

StageTwoResult fit_client_params(const tcn::NetworkStructure& structure, const ema::ClientSplit& split,
                                 const nsga2::GaConfig& cfg, const SearchSettings& settings) {
  return fit_parameters(structure, split.train, baselines::head(split.test, settings.horizon_days), cfg, settings);
}

std::uint64_t stage_two_seed(std::uint64_t master, const tcn::NetworkStructure& structure, std::size_t client) {
  return derive_seed(master, {structure.hash(), client});
}

ObjectiveVector aggregate_stage_one(std::span<const StageTwoResult> clients) {
  if (clients.empty()) return {};
  const std::size_t k = clients.front().min_error.size();
  ObjectiveVector out(k, kUnscorable);
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : clients)
      if (!is_unscorable(c.min_error[j])) {
        sum += c.min_error[j];
        ++n;
      }
    if (n > 0) out[j] = sum / static_cast<double>(n);
  }
  return out;
}

namespace {

StructureEvaluation assemble(std::vector<StageTwoResult> clients) {
  StructureEvaluation ev;
  ev.objectives = aggregate_stage_one(clients);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto& m = clients[i].min_error;
    if (std::any_of(m.begin(), m.end(), [](double v) { return !is_unscorable(v); })) ev.scorable_clients.push_back(i);
  }
  ev.clients = std::move(clients);
  return ev;
}

nsga2::GaConfig with_seed(nsga2::GaConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}


}  // namespace

StructureEvaluation evaluate_structure(const tcn::NetworkStructure& structure, std::span<const ema::ClientSplit> splits,
                                       const nsga2::GaConfig& stage_two, const SearchSettings& settings) {
  settings.validate();
  std::vector<StageTwoResult> clients(splits.size());
  parallel_for(splits.size(), settings.jobs, [&](std::size_t i) {
    clients[i] = fit_client_params(structure, splits[i], with_seed(stage_two, stage_two_seed(stage_two.seed, structure, i)),
                                   settings);
  });
  return assemble(std::move(clients));
}

UsableCohort prepare_splits(const ema::Cohort& cohort, const ema::SplitSpec& spec) {
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  UsableCohort out;
  for (const auto& client : cohort.clients) {
    try {
      out.splits.push_back(ema::split_client(client, spec));
      out.client_ids.push_back(client.client_id());
    } catch (const ValidationError& e) {
      out.warnings.push_back(fmt::format("dropped client '{}': {}", client.client_id(), e.what()));
    }
  }
  return out;
}

// ---- stage 1 ---------------------------------------------------------------

SearchResult search_structures(const ema::Cohort& cohort, const ema::SplitSpec& split_spec,
                               const nsga2::GaConfig& stage_one, const nsga2::GaConfig& stage_two,
                               const SearchSettings& settings) {
  settings.validate();
  stage_one.validate();
  stage_two.validate();
  auto usable = prepare_splits(cohort, split_spec);
  if (usable.splits.empty()) throw ConfigError("no client has enough data for the requested split");
  const std::span<const ema::ClientSplit> splits(usable.splits);
  const std::size_t k = cohort.catalog.size();

  using Genome = nsga2::StructureGenome;
  std::map<Genome, std::shared_ptr<const StructureEvaluation>> cache;
  nsga2::BatchEvaluator<Genome> batch = [&](std::span<const Genome> genomes) {
    std::vector<Genome> todo;
    for (const auto& g : genomes)
      if (!cache.contains(g) && std::find(todo.begin(), todo.end(), g) == todo.end()) todo.push_back(g);
    const std::size_t n_clients = splits.size();
    std::vector<StageTwoResult> results(todo.size() * n_clients);
    std::vector<char> failed(todo.size(), 0);
    parallel_for(results.size(), settings.jobs, [&](std::size_t t) {
      const std::size_t s = t / n_clients, c = t % n_clients;
      try {
        results[t] = fit_client_params(todo[s], splits[c],
                                       with_seed(stage_two, stage_two_seed(stage_two.seed, todo[s], c)), settings);
      } catch (const std::exception&) {
        failed[s] = 1;
      }
    });
    for (std::size_t s = 0; s < todo.size(); ++s) {
      if (failed[s]) {
        cache.emplace(todo[s], nullptr);
        continue;
      }
      std::vector<StageTwoResult> per_client(std::make_move_iterator(results.begin() + s * n_clients),
                                             std::make_move_iterator(results.begin() + (s + 1) * n_clients));
      cache.emplace(todo[s], std::make_shared<const StructureEvaluation>(assemble(std::move(per_client))));
    }
    std::vector<std::optional<ObjectiveVector>> out;
    out.reserve(genomes.size());
    for (const auto& g : genomes) {
      const auto& ev = cache.at(g);
      if (ev) out.emplace_back(ev->objectives);
      else out.emplace_back(std::nullopt);
    }
    return out;
  };

  const nsga2::StructureEncoding encoding{k, settings.initial_edge_density};
  const auto run = nsga2::evolve(encoding, batch, stage_one);

  SearchResult result;
  result.trace = run.trace;
  result.warnings = std::move(usable.warnings);
  result.failed_evaluations = run.failed_evaluations;
  result.distinct_structures = cache.size();
  for (auto idx : run.front) {
    const auto& ind = run.population[idx];
    if (ind.failed) continue;
    result.front.push_back({ind.genome, ind.objectives, cache.at(ind.genome)});
  }
  return result;
}

// ---- champions and validation ----------------------------------------------

ConceptChampionSet select_concept_champions(std::span<const StructureCandidate> front, std::size_t concepts) {
  ConceptChampionSet set;
  set.champions.resize(concepts);
  for (std::size_t j = 0; j < concepts; ++j) {
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < front.size(); ++m) {
      const double v = front[m].objectives.at(j);
      if (is_unscorable(v)) continue;
      if (!best) {
        best = m;
        continue;
      }
      const auto& b = front[*best];
      const double bv = b.objectives[j];
      const std::size_t edges = front[m].structure.edge_count(), best_edges = b.structure.edge_count();
      if (v < bv || (v == bv && (edges < best_edges || (edges == best_edges && front[m].structure < b.structure))))
        best = m;
    }
    if (!best) {
      set.notes.push_back(fmt::format("concept {} is unscorable for every front member", j));
      continue;
    }
    const auto& cand = front[*best];
    Champion champ{j, *best, cand.structure, tcn::ModelParameters::defaults_for(cand.structure), cand.objectives[j]};
    if (cand.evaluation) {
      for (const auto& client : cand.evaluation->clients) {
        if (client.supplier.at(j) == kNoSupplier) continue;
        champ.representative = client.front.at(client.supplier[j]).params;
        break;
      }
    }
    set.champions[j] = std::move(champ);
  }
  return set;
}

void ValidationReport::write_csv(std::ostream& out) const { baselines::write_error_csv(out, table); }

std::string ValidationReport::summary() const {
  std::string out = "Validation-window forecast error (MSE, normalized units)\n\n";
  out += baselines::format_error_summary(table);
  out += "\nChampion vs mean-value prediction\n";
  for (std::size_t j = 0; j < table.concepts.size(); ++j) {
    const auto* champ = table.find(j, "champion");
    const auto* mean = table.find(j, "mean");
    if (!champ || !mean || std::isnan(champ->mse_mean) || std::isnan(mean->mse_mean)) {
      out += fmt::format("  {:<20} n/a\n", table.concepts[j]);
      continue;
    }
    out += fmt::format("  {:<20} {}\n", table.concepts[j], champ->mse_mean < mean->mse_mean ? "better" : "not better");
  }
  return out;
}

ValidationReport validate_champions(const ConceptChampionSet& champions, std::span<const ema::ClientSplit> splits,
                                    const ema::ConceptCatalog& catalog, const nsga2::GaConfig& stage_two,
                                    const SearchSettings& settings) {
  settings.validate();
  stage_two.validate();
  const std::size_t k = catalog.size();
  if (champions.champions.size() != k) throw ContractViolation("validate_champions: champion count != concept count");
  for (const auto& s : splits)
    if (s.validation.length < 1) throw ContractViolation("validate_champions: empty validation window");

  std::vector<tcn::NetworkStructure> unique;
  for (const auto& c : champions.champions)
    if (c && std::find(unique.begin(), unique.end(), c->structure) == unique.end()) unique.push_back(c->structure);

  const int horizon = std::min(settings.horizon_days, splits.front().validation.length);
  const std::size_t n_clients = splits.size();
  std::vector<StageTwoResult> refits(unique.size() * n_clients);
  parallel_for(refits.size(), settings.jobs, [&](std::size_t t) {
    const std::size_t s = t / n_clients, c = t % n_clients;
    const auto& split = splits[c];
    auto cfg = with_seed(stage_two, derive_seed(stage_two.seed, {unique[s].hash(), c, 0x7a11dULL}));
    const auto [history, scored] = split_at_end(split.train_and_test(), horizon);
    refits[t] = fit_parameters(unique[s], history, scored, cfg, settings);
  });

  const auto base = baselines::baseline_report(splits, catalog, settings.horizon_days);
  ValidationReport report;
  report.table.concepts = catalog.names();
  for (std::size_t j = 0; j < k; ++j) {
    if (const auto& champ = champions.champions[j]) {
      const std::size_t s =
          static_cast<std::size_t>(std::find(unique.begin(), unique.end(), champ->structure) - unique.begin());
      std::vector<double> errors;
      for (std::size_t c = 0; c < n_clients; ++c) {
        const auto& fit = refits[s * n_clients + c];
        if (fit.supplier[j] == kNoSupplier) {
          errors.push_back(kUnscorable);
          continue;
        }
        const tcn::TemporalCausalModel model(champ->structure, fit.front[fit.supplier[j]].params, settings.max_speed);
        const auto window = baselines::head(splits[c].validation, settings.horizon_days);
        const auto forecast = tcn::predict(model, splits[c].train_and_test(), window.length, settings.steps_per_day);
        errors.push_back(tcn::score(forecast, window)[j]);
      }
      report.table.rows.push_back(baselines::aggregate_errors(j, "champion", errors));
    }
    for (const auto& row : base.rows)
      if (row.concept_idx == j) report.table.rows.push_back(row);
  }
  return report;
}

}  // namespace tcnsearch::search
