#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tcnsearch/error.hpp"
#include "tcnsearch/network.hpp"
#include "tcnsearch/objectives.hpp"
#include "tcnsearch/parallel.hpp"
#include "tcnsearch/random.hpp"

namespace tcnsearch::nsga2 {

// Hyperparameters of one NSGA-II run. Optional rates resolve against the
// encoding: mutation_rate -> 1 / genome length, bit_flip_rate -> 2 / K^2.
struct GaConfig {
  std::size_t population_size = 20;
  std::size_t generations = 25;
  double crossover_rate = 0.9;
  std::optional<double> mutation_rate;
  double sbx_eta = 15.0;
  double polynomial_eta = 20.0;
  // Probability that a matrix crossover event exchanges a rectangular block.
  double block_swap_rate = 1.0;
  std::optional<double> bit_flip_rate;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;

  static GaConfig stage_one_defaults();
  static GaConfig stage_two_defaults();
};

// Pareto dominance for minimization. Dimensions where either side is NaN
// (unscorable) are ignored; throws ContractViolation on length mismatch.
bool dominates(std::span<const double> a, std::span<const double> b);

// Deb's fast non-dominated sort. Front i lists indices in ascending order.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectiveVector> objectives);

// Crowding distance of each member of `front` (indices into objectives),
// in the same order as `front`.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> objectives, std::span<const std::size_t> front);

template <class Genome>
struct Individual {
  Genome genome;
  ObjectiveVector objectives;
  std::size_t rank = 0;
  double crowding = 0.0;
  bool failed = false;
};

// Crowded-comparison winner of a binary tournament between a and b.
template <class T>
std::size_t binary_tournament(std::span<const T> population, std::size_t a, std::size_t b, Rng& rng) {
  const auto& x = population[a];
  const auto& y = population[b];
  if (x.rank != y.rank) return x.rank < y.rank ? a : b;
  if (x.crowding != y.crowding) return x.crowding > y.crowding ? a : b;
  return bernoulli(rng, 0.5) ? a : b;
}

// Binary tournament on two distinct uniformly drawn members.
template <class T>
std::size_t tournament_select(std::span<const T> population, Rng& rng) {
  if (population.empty()) throw ContractViolation("tournament_select: empty population");
  if (population.size() == 1) return 0;
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  const std::size_t a = pick(rng);
  std::size_t b = pick(rng);
  while (b == a) b = pick(rng);
  return binary_tournament(population, a, b, rng);
}

// ---- real-vector encoding --------------------------------------------------

using RealVector = std::vector<double>;

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const noexcept { return lower.size(); }
};

// SBX crossover per gene with probability crossover_rate, then polynomial
// mutation per gene with probability mutation_rate; children clamped.
std::pair<RealVector, RealVector> real_crossover_mutate(const RealVector& a, const RealVector& b, const Bounds& bounds,
                                                        const GaConfig& cfg, Rng& rng);

struct RealEncoding {
  using Genome = RealVector;
  Bounds bounds;

  Genome random(Rng& rng) const;
  std::pair<Genome, Genome> vary(const Genome& a, const Genome& b, const GaConfig& cfg, Rng& rng) const {
    return real_crossover_mutate(a, b, bounds, cfg, rng);
  }
  bool valid(const Genome& g) const;
};

// ---- structure-matrix encoding ---------------------------------------------

using StructureGenome = tcn::NetworkStructure;

// Half-open row range x column range.
struct BlockRect {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
};

// Exchanges the adjacency entries inside `rect` between a and b.
void swap_block(StructureGenome& a, StructureGenome& b, const BlockRect& rect);

// Uniformly drawn non-empty axis-aligned rectangle in a K x K matrix.
BlockRect random_block(std::size_t concepts, Rng& rng);

// Two-dimensional variation: with probability crossover_rate, a rectangular
// adjacency block is exchanged (probability block_swap_rate) and combiner ids
// swapped per concept with probability 0.5; then off-diagonal bits flip with
// bit_flip_rate and each combiner re-draws with mutation_rate.
std::pair<StructureGenome, StructureGenome> matrix_crossover_mutate(const StructureGenome& a, const StructureGenome& b,
                                                                    const GaConfig& cfg, Rng& rng);

struct StructureEncoding {
  using Genome = StructureGenome;
  std::size_t concepts = 7;
  double initial_edge_density = 0.3;

  Genome random(Rng& rng) const;
  std::pair<Genome, Genome> vary(const Genome& a, const Genome& b, const GaConfig& cfg, Rng& rng) const {
    return matrix_crossover_mutate(a, b, cfg, rng);
  }
  bool valid(const Genome& g) const;
};

// ---- generational loop -----------------------------------------------------

// Evaluates a batch of genomes; std::nullopt marks a failed evaluation.
template <class Genome>
using BatchEvaluator = std::function<std::vector<std::optional<ObjectiveVector>>(std::span<const Genome>)>;

// Lifts a per-genome evaluator to a batch evaluator over `jobs` workers. An
// exception from `evaluate` marks that genome as failed.
template <class Genome, class F>
BatchEvaluator<Genome> per_genome(F evaluate, unsigned jobs = 1) {
  return [evaluate = std::move(evaluate), jobs](std::span<const Genome> batch) {
    std::vector<std::optional<ObjectiveVector>> out(batch.size());
    parallel_for(batch.size(), jobs, [&](std::size_t i) {
      try {
        out[i] = evaluate(batch[i]);
      } catch (...) {
        out[i] = std::nullopt;
      }
    });
    return out;
  };
}

// Best and median of each objective over the population after a generation.
struct GenerationStats {
  std::size_t generation = 0;
  std::vector<double> best;
  std::vector<double> median;
};

template <class Genome>
struct EvolutionResult {
  std::vector<Individual<Genome>> population;
  std::vector<std::size_t> front;  // indices of rank-0 members
  std::size_t failed_evaluations = 0;
  std::vector<GenerationStats> trace;

  std::vector<Individual<Genome>> pareto_front() const {
    std::vector<Individual<Genome>> out;
    for (auto i : front) out.push_back(population[i]);
    return out;
  }
};

template <class Genome>
using GenerationObserver = std::function<void(std::size_t generation, std::span<const Individual<Genome>>)>;

namespace detail {

GenerationStats population_stats(std::size_t generation, std::span<const ObjectiveVector> objectives);

// Survivor indices (into `objectives`) for the next population of size n,
// with rank and crowding of each survivor.
struct Survivors {
  std::vector<std::size_t> index;
  std::vector<std::size_t> rank;
  std::vector<double> crowding;
};
Survivors select_survivors(std::span<const ObjectiveVector> objectives, std::size_t n);

template <class Genome>
void assign(std::vector<Individual<Genome>>& pop, const BatchEvaluator<Genome>& evaluate, std::size_t& failures,
            std::optional<std::size_t>& dims) {
  std::vector<Genome> batch;
  batch.reserve(pop.size());
  for (const auto& ind : pop) batch.push_back(ind.genome);
  auto results = evaluate(std::span<const Genome>(batch));
  if (results.size() != pop.size()) throw ContractViolation("evaluator returned a wrong number of results");
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (results[i]) {
      if (!dims) dims = results[i]->size();
      if (results[i]->size() != *dims) {
        results[i].reset();
      } else {
        pop[i].objectives = std::move(*results[i]);
        pop[i].failed = false;
        continue;
      }
    }
    pop[i].failed = true;
    ++failures;
  }
  for (auto& ind : pop) {
    if (!ind.failed) continue;
    if (!dims) throw ConfigError("every evaluation in the initial population failed");
    ind.objectives.assign(*dims, kWorstObjective);
  }
}

}  // namespace detail

// Standard elitist NSGA-II. Initial genome i draws from stream
// (seed, 0, i); variation event e of generation g from (seed, g, e), so the
// result does not depend on how the evaluator schedules its work.
template <class Encoding>
EvolutionResult<typename Encoding::Genome> evolve(const Encoding& encoding,
                                                   const BatchEvaluator<typename Encoding::Genome>& evaluate,
                                                   const GaConfig& cfg,
                                                   const GenerationObserver<typename Encoding::Genome>& observe = {}) {
  using Genome = typename Encoding::Genome;
  cfg.validate();
  const std::size_t n = cfg.population_size;

  EvolutionResult<Genome> result;
  std::optional<std::size_t> dims;

  std::vector<Individual<Genome>> pop(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(cfg.seed, {0, i});
    pop[i].genome = encoding.random(rng);
  }
  detail::assign(pop, evaluate, result.failed_evaluations, dims);

  auto rerank = [&](std::vector<Individual<Genome>>& merged, std::size_t keep) {
    std::vector<ObjectiveVector> objs;
    objs.reserve(merged.size());
    for (const auto& ind : merged) objs.push_back(ind.objectives);
    auto survivors = detail::select_survivors(objs, keep);
    std::vector<Individual<Genome>> next;
    next.reserve(keep);
    for (std::size_t s = 0; s < survivors.index.size(); ++s) {
      next.push_back(std::move(merged[survivors.index[s]]));
      next.back().rank = survivors.rank[s];
      next.back().crowding = survivors.crowding[s];
    }
    return next;
  };
  pop = rerank(pop, n);
  if (observe) observe(0, pop);

  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    std::vector<Individual<Genome>> offspring(n);
    const std::span<const Individual<Genome>> parents(pop);
    for (std::size_t e = 0; e < n / 2; ++e) {
      Rng rng = make_rng(cfg.seed, {g, e});
      const std::size_t a = tournament_select(parents, rng);
      const std::size_t b = tournament_select(parents, rng);
      auto [c1, c2] = encoding.vary(pop[a].genome, pop[b].genome, cfg, rng);
      offspring[2 * e].genome = std::move(c1);
      offspring[2 * e + 1].genome = std::move(c2);
    }
    detail::assign(offspring, evaluate, result.failed_evaluations, dims);

    std::vector<Individual<Genome>> merged = std::move(pop);
    for (auto& o : offspring) merged.push_back(std::move(o));
    pop = rerank(merged, n);

    std::vector<ObjectiveVector> objs;
    objs.reserve(pop.size());
    for (const auto& ind : pop) objs.push_back(ind.objectives);
    result.trace.push_back(detail::population_stats(g, objs));
    if (observe) observe(g, pop);
  }

  result.population = std::move(pop);
  for (std::size_t i = 0; i < result.population.size(); ++i)
    if (result.population[i].rank == 0) result.front.push_back(i);
  return result;
}

}  // namespace tcnsearch::nsga2
