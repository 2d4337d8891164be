#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcnsearch/baselines.hpp"
#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/network.hpp"
#include "tcnsearch/nsga2.hpp"

namespace tcnsearch::search {

struct SearchSettings {
  int horizon_days = 14;
  int steps_per_day = tcn::kDefaultStepsPerDay;
  double max_speed = tcn::TemporalCausalModel::kDefaultMaxSpeed;
  double initial_edge_density = 0.3;  // stage-1 random structures
  unsigned jobs = 1;                  // 0 = hardware concurrency

  void validate() const;
};

// Flat real-vector encoding of the free parameters of one structure: one
// weight per connection (row-major), one speed factor per concept, then the
// shape parameters of every concept that has incoming connections.
class ParameterLayout {
 public:
  ParameterLayout(const tcn::NetworkStructure& structure, double max_speed = tcn::TemporalCausalModel::kDefaultMaxSpeed);

  std::size_t size() const noexcept { return bounds_.size(); }
  const nsga2::Bounds& bounds() const noexcept { return bounds_; }
  tcn::ModelParameters decode(std::span<const double> genome) const;
  std::vector<double> encode(const tcn::ModelParameters& params) const;

 private:
  enum class Slot : std::uint8_t { Weight, Speed, Scale, Steepness, Threshold };
  struct Entry {
    Slot slot;
    std::size_t a;  // weight: from, else concept
    std::size_t b;  // weight: to
  };
  std::size_t concepts_;
  std::vector<Entry> entries_;
  nsga2::Bounds bounds_;
  tcn::ModelParameters base_;
};

struct ParameterCandidate {
  tcn::ModelParameters params;
  ObjectiveVector error;  // forecast error on the scored window
};

// Outcome of fitting one structure to one client.
struct StageTwoResult {
  std::string client_id;
  ObjectiveVector min_error;          // per concept, minimum error over the front
  std::vector<std::size_t> supplier;  // front index giving each minimum (npos if unscorable)
  std::vector<ParameterCandidate> front;
  std::size_t failed_evaluations = 0;
};

inline constexpr std::size_t kNoSupplier = static_cast<std::size_t>(-1);

// NSGA-II over the structure's parameters. A candidate's objectives are its
// per-concept errors when forecasting `scored` from the end of `history`.
// Concepts with no value in `history` are unscorable.
StageTwoResult fit_parameters(const tcn::NetworkStructure& structure, const ema::SeriesWindow& history,
                              const ema::SeriesWindow& scored, const nsga2::GaConfig& cfg,
                              const SearchSettings& settings);

// fit_parameters on (train, first horizon_days of test).
StageTwoResult fit_client_params(const tcn::NetworkStructure& structure, const ema::ClientSplit& split,
                                 const nsga2::GaConfig& cfg, const SearchSettings& settings);

// Stage-2 seed for (structure, client); identical structures always get identical streams.
std::uint64_t stage_two_seed(std::uint64_t master, const tcn::NetworkStructure& structure, std::size_t client);

struct StructureEvaluation {
  ObjectiveVector objectives;  // per concept mean of client minima (NaN if no client is scorable)
  std::vector<std::size_t> scorable_clients;
  std::vector<StageTwoResult> clients;
};

// Client minima averaged per concept over the clients where it is scorable.
ObjectiveVector aggregate_stage_one(std::span<const StageTwoResult> clients);

// Stage-2 fits of every client, seeded from (cfg.seed, structure hash, client index).
StructureEvaluation evaluate_structure(const tcn::NetworkStructure& structure, std::span<const ema::ClientSplit> splits,
                                       const nsga2::GaConfig& stage_two, const SearchSettings& settings);

struct StructureCandidate {
  tcn::NetworkStructure structure;
  ObjectiveVector objectives;
  std::shared_ptr<const StructureEvaluation> evaluation;
};

struct UsableCohort {
  std::vector<ema::ClientSplit> splits;
  std::vector<std::string> client_ids;
  std::vector<std::string> warnings;  // one per dropped client
};

// Splits every client; clients too short for the split are dropped with a warning.
UsableCohort prepare_splits(const ema::Cohort& cohort, const ema::SplitSpec& spec);

struct SearchResult {
  std::vector<StructureCandidate> front;
  std::vector<nsga2::GenerationStats> trace;
  std::vector<std::string> warnings;
  std::size_t failed_evaluations = 0;
  std::size_t distinct_structures = 0;
};

// Stage 1: NSGA-II over structure genomes with evaluate_structure as the
// evaluator. stage_two.seed is the master seed of all stage-2 runs.
// Throws ConfigError when no client survives the split.
SearchResult search_structures(const ema::Cohort& cohort, const ema::SplitSpec& split_spec,
                               const nsga2::GaConfig& stage_one, const nsga2::GaConfig& stage_two,
                               const SearchSettings& settings);

struct Champion {
  std::size_t concept_idx = 0;
  std::size_t front_index = 0;
  tcn::NetworkStructure structure;
  tcn::ModelParameters representative;  // one client's stage-2 parameters
  double objective = 0.0;
};

struct ConceptChampionSet {
  std::vector<std::optional<Champion>> champions;  // one slot per concept
  std::vector<std::string> notes;                  // why a slot is empty
};

// Per concept, the front member with the lowest objective; ties go to fewer
// connections, then to the smaller genome.
ConceptChampionSet select_concept_champions(std::span<const StructureCandidate> front, std::size_t concepts);

struct ValidationReport {
  baselines::ErrorTable table;  // per concept: champion row (if any), then the baselines

  void write_csv(std::ostream& out) const;
  std::string summary() const;
};

// Refits each champion per client on train + test (the final
// validation-horizon days of test are the scored window), forecasts the
// validation window from the end of test with the front member best in the
// champion's concept, and compares against the baselines on the same windows.
ValidationReport validate_champions(const ConceptChampionSet& champions, std::span<const ema::ClientSplit> splits,
                                    const ema::ConceptCatalog& catalog, const nsga2::GaConfig& stage_two,
                                    const SearchSettings& settings);

}  // namespace tcnsearch::search
