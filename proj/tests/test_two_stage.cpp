#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>

#include "support.hpp"
#include "tcnsearch/error.hpp"
#include "tcnsearch/reference_model.hpp"
#include "tcnsearch/synthetic.hpp"
#include "tcnsearch/two_stage.hpp"

using namespace tcnsearch;
using namespace tcnsearch::search;

namespace {

ema::Cohort make_cohort(const tcn::TemporalCausalModel& truth, std::size_t clients, double noise, double missing,
                        std::uint64_t seed) {
  ema::SyntheticSpec spec;
  spec.clients = clients;
  spec.noise_sd = noise;
  spec.missing_rate = missing;
  spec.seed = seed;
  ema::ConceptCatalog catalog;
  if (truth.size() != catalog.size()) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < truth.size(); ++j) names.push_back("c" + std::to_string(j));
    catalog = ema::ConceptCatalog(names);
  }
  return ema::generate_synthetic_cohort(truth, catalog, spec);
}

std::vector<ema::ClientSplit> splits_of(const ema::Cohort& cohort) {
  std::vector<ema::ClientSplit> out;
  for (const auto& c : cohort.clients) out.push_back(ema::split_client(c, {}));
  return out;
}

nsga2::GaConfig small_ga(std::uint64_t seed, std::size_t pop = 8, std::size_t gens = 3) {
  auto cfg = nsga2::GaConfig::stage_two_defaults();
  cfg.population_size = pop;
  cfg.generations = gens;
  cfg.seed = seed;
  return cfg;
}

// 0 -> 1 -> 2 with moderate speeds; concept 0 decays towards nothing because it has no parents.
tcn::TemporalCausalModel chain3() {
  tcn::NetworkStructure s(3);
  s.set_edge(0, 1, true);
  s.set_edge(1, 2, true);
  auto p = tcn::ModelParameters::defaults_for(s);
  p.weights[0 * 3 + 1] = 0.8;
  p.weights[1 * 3 + 2] = 0.6;
  p.speed = {0.3, 0.3, 0.25};
  return tcn::TemporalCausalModel(s, p);
}

}  // namespace

TEST_SUITE("parameter_layout") {
  TEST_CASE("gene count: one per edge, one speed per concept, shape genes for concepts with parents") {
    const auto s = tcn::reference_structure();
    const ParameterLayout layout(s);
    // 13 weights + 7 speeds + one scale for each of the 7 concepts (all have parents)
    CHECK(layout.size() == 13 + 7 + 7);

    tcn::NetworkStructure t(3, tcn::CombiningFunctionId::SimpleLogistic);
    t.set_edge(0, 1, true);
    // one weight, three speeds, steepness + threshold for concept 1 only
    CHECK(ParameterLayout(t).size() == 1 + 3 + 2);
    CHECK(ParameterLayout(tcn::NetworkStructure(4)).size() == 4);
  }

  TEST_CASE("encode then decode round-trips parameters inside the bounds") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      auto s = testing_support::random_structure(5, 0.4, rng);
      auto params = testing_support::random_model(s, rng).params();
      for (std::size_t j = 0; j < s.size(); ++j)
        params.shape[j].scale = std::min(params.shape[j].scale, std::max(1.0, static_cast<double>(s.in_degree(j))));
      const tcn::TemporalCausalModel model(s, params);
      const ParameterLayout layout(s);
      auto genome = layout.encode(model.params());
      for (std::size_t i = 0; i < genome.size(); ++i) {
        CHECK(genome[i] >= layout.bounds().lower[i] - 1e-12);
        CHECK(genome[i] <= layout.bounds().upper[i] + 1e-12);
      }
      const auto back = layout.decode(genome);
      for (std::size_t i = 0; i < back.weights.size(); ++i) CHECK(back.weights[i] == doctest::Approx(model.params().weights[i]));
      for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK(back.speed[j] == doctest::Approx(model.params().speed[j]));
        if (s.in_degree(j) == 0) continue;
        if (s.combiner(j) == tcn::CombiningFunctionId::SimpleLogistic) {
          CHECK(back.shape[j].steepness == doctest::Approx(model.params().shape[j].steepness).epsilon(1e-9));
          CHECK(back.shape[j].threshold == doctest::Approx(model.params().shape[j].threshold));
        }
      }
    }
  }

  TEST_CASE("decode clamps genes to the bounds and rejects the wrong length") {
    tcn::NetworkStructure s(2);
    s.set_edge(0, 1, true);
    const ParameterLayout layout(s);
    std::vector<double> genome(layout.size(), 50.0);
    const auto p = layout.decode(genome);
    CHECK(p.weights[0 * 2 + 1] == 1.0);
    CHECK(p.speed[0] == tcn::TemporalCausalModel::kDefaultMaxSpeed);
    CHECK_THROWS_AS(layout.decode(std::vector<double>(layout.size() + 1, 0.0)), ContractViolation);
  }
}

TEST_SUITE("fit_client_params") {
  TEST_CASE("empty structure forecasts the frozen last observation") {
    const auto cohort = make_cohort(tcn::reference_model(), 3, 0.05, 0.2, 11);
    const auto splits = splits_of(cohort);
    const tcn::NetworkStructure empty(7);
    SearchSettings settings;
    for (const auto& split : splits) {
      const auto r = fit_client_params(empty, split, small_ga(3), settings);
      const auto frozen = tcn::initial_state_at_end(split.train, 7);
      const std::vector<tcn::StateVector> constant(14, frozen);
      const auto expected = tcn::score(constant, baselines::head(split.test, 14));
      for (std::size_t j = 0; j < 7; ++j) CHECK(r.min_error[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("noiseless client from a known chain is recovered") {
    const auto truth = chain3();
    const auto cohort = make_cohort(truth, 1, 0.0, 0.0, 21);
    const auto split = ema::split_client(cohort.clients[0], {});
    auto cfg = nsga2::GaConfig::stage_two_defaults();
    cfg.seed = 4;
    const auto r = fit_client_params(truth.structure(), split, cfg, {});
    for (double e : r.min_error) CHECK(e < 1e-3);
  }

  TEST_CASE("minimum per concept is no larger than any front member's error") {
    const auto cohort = make_cohort(tcn::reference_model(), 2, 0.05, 0.2, 12);
    const auto splits = splits_of(cohort);
    const auto r = fit_client_params(tcn::reference_structure(), splits[0], small_ga(9, 12, 4), {});
    REQUIRE(!r.front.empty());
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(r.min_error[j] <= r.front.front().error[j]);
      for (const auto& m : r.front) CHECK(r.min_error[j] <= m.error[j]);
      CHECK(r.front.at(r.supplier[j]).error[j] == r.min_error[j]);
    }
  }

  TEST_CASE("concept without training data is unscorable") {
    const auto cohort = make_cohort(tcn::reference_model(), 1, 0.0, 0.0, 13);
    auto split = ema::split_client(cohort.clients[0], {});
    for (auto& o : split.train.observations) o.values[0].reset();
    const auto r = fit_client_params(tcn::reference_structure(), split, small_ga(1), {});
    CHECK(is_unscorable(r.min_error[0]));
    CHECK(r.supplier[0] == kNoSupplier);
    CHECK_FALSE(is_unscorable(r.min_error[1]));
  }

  TEST_CASE("same seed gives the same result") {
    const auto cohort = make_cohort(tcn::reference_model(), 1, 0.05, 0.2, 14);
    const auto split = ema::split_client(cohort.clients[0], {});
    const auto a = fit_client_params(tcn::reference_structure(), split, small_ga(77), {});
    const auto b = fit_client_params(tcn::reference_structure(), split, small_ga(77), {});
    CHECK(a.min_error == b.min_error);
    CHECK(a.front.size() == b.front.size());
  }

  TEST_CASE("scored window must follow the history") {
    const auto cohort = make_cohort(tcn::reference_model(), 1, 0.0, 0.0, 15);
    const auto split = ema::split_client(cohort.clients[0], {});
    CHECK_THROWS_AS(fit_parameters(tcn::reference_structure(), split.train, split.validation, small_ga(1), {}),
                    ContractViolation);
  }
}

TEST_SUITE("evaluate_structure") {
  TEST_CASE("one client: objectives equal that client's minima") {
    const auto cohort = make_cohort(tcn::reference_model(), 1, 0.05, 0.2, 31);
    const auto splits = splits_of(cohort);
    const auto ev = evaluate_structure(tcn::reference_structure(), splits, small_ga(2), {});
    REQUIRE(ev.clients.size() == 1);
    CHECK(ev.objectives == ev.clients[0].min_error);
  }

  TEST_CASE("duplicating every client leaves the objectives unchanged") {
    const auto cohort = make_cohort(tcn::reference_model(), 3, 0.05, 0.2, 32);
    const auto splits = splits_of(cohort);
    const auto ev = evaluate_structure(tcn::reference_structure(), splits, small_ga(2), {});
    auto doubled = ev.clients;
    doubled.insert(doubled.end(), ev.clients.begin(), ev.clients.end());
    const auto agg = aggregate_stage_one(doubled);
    for (std::size_t j = 0; j < 7; ++j) CHECK(agg[j] == doctest::Approx(ev.objectives[j]).epsilon(1e-14));

    // For the empty structure the stage-2 seed has no effect, so duplicating the cohort itself is exact too.
    auto twice = splits;
    twice.insert(twice.end(), splits.begin(), splits.end());
    const tcn::NetworkStructure empty(7);
    const auto a = evaluate_structure(empty, splits, small_ga(2), {});
    const auto b = evaluate_structure(empty, twice, small_ga(2), {});
    for (std::size_t j = 0; j < 7; ++j) CHECK(b.objectives[j] == doctest::Approx(a.objectives[j]).epsilon(1e-14));
  }

  TEST_CASE("client-count average skips unscorable clients") {
    StageTwoResult a, b;
    a.min_error = {0.1, kUnscorable};
    b.min_error = {0.3, 0.2};
    const std::vector<StageTwoResult> both{a, b};
    const auto agg = aggregate_stage_one(both);
    CHECK(agg[0] == doctest::Approx(0.2));
    CHECK(agg[1] == doctest::Approx(0.2));
    StageTwoResult c;
    c.min_error = {kUnscorable, kUnscorable};
    const std::vector<StageTwoResult> none{c};
    CHECK(is_unscorable(aggregate_stage_one(none)[0]));
  }

  TEST_CASE("ground truth beats the empty structure on a noiseless cohort") {
    const auto truth = tcn::reference_model();
    const auto cohort = make_cohort(truth, 4, 0.0, 0.0, 33);
    const auto splits = splits_of(cohort);
    auto cfg = nsga2::GaConfig::stage_two_defaults();
    cfg.seed = 6;
    const auto t = evaluate_structure(truth.structure(), splits, cfg, {});
    const auto e = evaluate_structure(tcn::NetworkStructure(7), splits, cfg, {});
    int better = 0;
    for (std::size_t j = 0; j < 7; ++j) better += t.objectives[j] < e.objectives[j];
    CHECK(better >= 6);
  }

  TEST_CASE("nesting consistency: no archived front member beats a client's minimum") {
    const auto cohort = make_cohort(tcn::reference_model(), 3, 0.05, 0.2, 34);
    const auto splits = splits_of(cohort);
    const auto ev = evaluate_structure(tcn::reference_structure(), splits, small_ga(8, 10, 3), {});
    for (std::size_t c = 0; c < ev.clients.size(); ++c) {
      for (const auto& member : ev.clients[c].front) {
        auto swapped = ev.clients;
        for (std::size_t j = 0; j < 7; ++j)
          if (!is_unscorable(swapped[c].min_error[j])) swapped[c].min_error[j] = member.error[j];
        const auto agg = aggregate_stage_one(swapped);
        for (std::size_t j = 0; j < 7; ++j) CHECK(ev.objectives[j] <= agg[j] + 1e-15);
      }
    }
  }

  TEST_CASE("parallel evaluation matches serial") {
    const auto cohort = make_cohort(tcn::reference_model(), 4, 0.05, 0.2, 35);
    const auto splits = splits_of(cohort);
    SearchSettings serial, parallel;
    serial.jobs = 1;
    parallel.jobs = 4;
    const auto a = evaluate_structure(tcn::reference_structure(), splits, small_ga(3), serial);
    const auto b = evaluate_structure(tcn::reference_structure(), splits, small_ga(3), parallel);
    CHECK(a.objectives == b.objectives);
  }
}

TEST_SUITE("search_structures") {
  TEST_CASE("short clients are dropped with one warning each") {
    auto cohort = make_cohort(tcn::reference_model(), 3, 0.05, 0.0, 41);
    std::vector<ema::Observation> obs(cohort.clients[1].observations().begin(),
                                      cohort.clients[1].observations().begin() + 30);
    cohort.clients[1] = ema::ClientSeries("short", obs, 7);
    const auto usable = prepare_splits(cohort, {});
    CHECK(usable.splits.size() == 2);
    REQUIRE(usable.warnings.size() == 1);
    CHECK(usable.warnings[0].find("short") != std::string::npos);
  }

  TEST_CASE("no usable client is a configuration error") {
    auto cohort = make_cohort(tcn::reference_model(), 1, 0.05, 0.0, 42);
    std::vector<ema::Observation> obs(cohort.clients[0].observations().begin(),
                                      cohort.clients[0].observations().begin() + 20);
    cohort.clients[0] = ema::ClientSeries("short", obs, 7);
    auto s1 = nsga2::GaConfig::stage_one_defaults();
    CHECK_THROWS_AS(search_structures(cohort, {}, s1, small_ga(1), {}), ConfigError);
  }

  TEST_CASE("population 4, one generation: at most 4 mutually non-dominated structures, deterministic") {
    const auto cohort = make_cohort(tcn::reference_model(), 2, 0.05, 0.2, 43);
    auto s1 = nsga2::GaConfig::stage_one_defaults();
    s1.population_size = 4;
    s1.generations = 1;
    s1.seed = 10;
    SearchSettings serial;
    serial.jobs = 1;
    const auto r = search_structures(cohort, {}, s1, small_ga(5, 4, 2), serial);
    REQUIRE(!r.front.empty());
    CHECK(r.front.size() <= 4);
    for (const auto& a : r.front)
      for (const auto& b : r.front) CHECK_FALSE(nsga2::dominates(a.objectives, b.objectives));
    CHECK(r.trace.size() == 1);

    SearchSettings parallel;
    parallel.jobs = 3;
    const auto again = search_structures(cohort, {}, s1, small_ga(5, 4, 2), parallel);
    REQUIRE(again.front.size() == r.front.size());
    for (std::size_t i = 0; i < r.front.size(); ++i) {
      CHECK(again.front[i].structure == r.front[i].structure);
      CHECK(again.front[i].objectives == r.front[i].objectives);
    }
  }
}

TEST_SUITE("champions") {
  StructureCandidate candidate(std::size_t edges, ObjectiveVector obj) {
    tcn::NetworkStructure s(3);
    std::size_t placed = 0;
    for (std::size_t i = 0; i < 3 && placed < edges; ++i)
      for (std::size_t j = 0; j < 3 && placed < edges; ++j)
        if (i != j) {
          s.set_edge(i, j, true);
          ++placed;
        }
    return {s, std::move(obj), nullptr};
  }

  TEST_CASE("front of one champions every concept") {
    const std::vector<StructureCandidate> front{candidate(2, {0.1, 0.2, 0.3})};
    const auto set = select_concept_champions(front, 3);
    REQUIRE(set.champions.size() == 3);
    for (const auto& c : set.champions) {
      REQUIRE(c.has_value());
      CHECK(c->front_index == 0);
    }
  }

  TEST_CASE("argmin per concept") {
    const std::vector<StructureCandidate> front{candidate(2, {0.1, 0.5, 0.3}), candidate(3, {0.4, 0.2, 0.3})};
    const auto set = select_concept_champions(front, 3);
    CHECK(set.champions[0]->front_index == 0);
    CHECK(set.champions[1]->front_index == 1);
    CHECK(set.champions[0]->objective == 0.1);
  }

  TEST_CASE("ties go to fewer edges") {
    const std::vector<StructureCandidate> front{candidate(5, {0.2, 0.1, 0.1}), candidate(4, {0.2, 0.3, 0.3}),
                                                candidate(6, {0.2, 0.3, 0.3})};
    const auto set = select_concept_champions(front, 3);
    CHECK(set.champions[0]->front_index == 1);
    CHECK(set.champions[0]->structure.edge_count() == 4);
  }

  TEST_CASE("concept unscorable everywhere has no champion and a note") {
    const std::vector<StructureCandidate> front{candidate(1, {0.1, kUnscorable, 0.3})};
    const auto set = select_concept_champions(front, 3);
    CHECK_FALSE(set.champions[1].has_value());
    CHECK(set.notes.size() == 1);
  }

  TEST_CASE("property: champion objective is minimal in its concept") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<StructureCandidate> front;
      const int n = 1 + static_cast<int>(rng() % 8);
      for (int m = 0; m < n; ++m) {
        ObjectiveVector obj(3);
        for (auto& v : obj) v = std::round(uniform01(rng) * 4.0) / 4.0;  // coarse values force ties
        front.push_back(candidate(rng() % 7, obj));
      }
      const auto set = select_concept_champions(front, 3);
      for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(set.champions[j].has_value());
        const auto& c = *set.champions[j];
        for (const auto& m : front) {
          CHECK_FALSE(m.objectives[j] < c.objective);
          if (m.objectives[j] == c.objective) CHECK(c.structure.edge_count() <= m.structure.edge_count());
        }
      }
    }
  }
}

TEST_SUITE("validate_champions") {
  TEST_CASE("zero-length validation window is a precondition error") {
    const auto cohort = make_cohort(tcn::reference_model(), 1, 0.05, 0.0, 51);
    auto splits = splits_of(cohort);
    splits[0].validation.length = 0;
    splits[0].validation.observations.clear();
    const std::vector<StructureCandidate> front{{tcn::reference_structure(), ObjectiveVector(7, 0.1), nullptr}};
    const auto set = select_concept_champions(front, 7);
    CHECK_THROWS_AS(validate_champions(set, splits, cohort.catalog, small_ga(1), {}), ContractViolation);
  }

  TEST_CASE("report has champion and baseline rows per concept and is reproducible") {
    const auto cohort = make_cohort(tcn::reference_model(), 3, 0.0, 0.0, 52);
    const auto splits = splits_of(cohort);
    const std::vector<StructureCandidate> front{{tcn::reference_structure(), ObjectiveVector(7, 0.1), nullptr}};
    const auto set = select_concept_champions(front, 7);
    auto cfg = nsga2::GaConfig::stage_two_defaults();
    cfg.seed = 3;
    const auto report = validate_champions(set, splits, cohort.catalog, cfg, {});
    CHECK(report.table.rows.size() == 7 * 4);
    for (std::size_t j = 0; j < 7; ++j) {
      const auto* champ = report.table.find(j, "champion");
      REQUIRE(champ != nullptr);
      CHECK(champ->n_scorable == 3);
    }
    std::ostringstream a, b;
    report.write_csv(a);
    validate_champions(set, splits, cohort.catalog, cfg, {}).write_csv(b);
    CHECK(a.str() == b.str());
    CHECK(report.summary().find("better") != std::string::npos);
  }

  TEST_CASE("noiseless cohort: ground-truth champion beats the mean in the validation window") {
    const auto truth = tcn::reference_model();
    const auto cohort = make_cohort(truth, 3, 0.0, 0.0, 53);
    const auto splits = splits_of(cohort);
    const std::vector<StructureCandidate> front{{truth.structure(), ObjectiveVector(7, 0.1), nullptr}};
    const auto set = select_concept_champions(front, 7);
    auto cfg = nsga2::GaConfig::stage_two_defaults();
    cfg.seed = 3;
    const auto report = validate_champions(set, splits, cohort.catalog, cfg, {});
    int wins = 0;
    for (std::size_t j = 0; j < 7; ++j) wins += report.table.find(j, "champion")->mse_mean < report.table.find(j, "mean")->mse_mean;
    CHECK(wins >= 6);
  }
}
