#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/objectives.hpp"

namespace tcnsearch::tcn {

// Rule that aggregates the weighted impacts reaching a concept.
enum class CombiningFunctionId : std::uint8_t { ScaledSum, Product, Max, Min, SimpleLogistic };

inline constexpr std::size_t kCombinerCount = 5;

std::string_view to_string(CombiningFunctionId id);
std::optional<CombiningFunctionId> combiner_from_string(std::string_view name);

// Shape parameters of a combining function. Only `scale` is read by
// ScaledSum and only `steepness` / `threshold` by SimpleLogistic.
struct CombinerShape {
  double scale = 1.0;      // lambda, in [1, K]
  double steepness = 1.0;  // sigma, in (0, 40]
  double threshold = 0.5;  // tau, in [0, 1]

  bool operator==(const CombinerShape&) const = default;
};

inline constexpr double kMaxSteepness = 40.0;

// Applies a combining function to the impacts omega_i * X_i.
// Throws ContractViolation on an empty impact list.
double combine(CombiningFunctionId id, const CombinerShape& shape, std::span<const double> impacts);

// Directed connection pattern plus one combining function per concept.
// Entry (from, to) set means `from` causally influences `to`; self
// connections are not representable.
class NetworkStructure {
 public:
  NetworkStructure() = default;
  explicit NetworkStructure(std::size_t concepts, CombiningFunctionId combiner = CombiningFunctionId::ScaledSum);

  std::size_t size() const noexcept { return concepts_; }

  bool edge(std::size_t from, std::size_t to) const { return adjacency_[from * concepts_ + to] != 0; }
  // Setting a diagonal entry to true throws ContractViolation.
  void set_edge(std::size_t from, std::size_t to, bool on);

  CombiningFunctionId combiner(std::size_t concept_idx) const { return combiners_[concept_idx]; }
  void set_combiner(std::size_t concept_idx, CombiningFunctionId id) { combiners_.at(concept_idx) = id; }

  std::size_t edge_count() const noexcept;
  std::size_t in_degree(std::size_t concept_idx) const;
  std::vector<std::size_t> parents(std::size_t concept_idx) const;

  // Stable 64-bit digest of adjacency and combiners.
  std::uint64_t hash() const noexcept;

  auto operator<=>(const NetworkStructure&) const = default;
  bool operator==(const NetworkStructure&) const = default;

 private:
  std::size_t concepts_ = 0;
  std::vector<std::uint8_t> adjacency_;  // row-major, [from * K + to]
  std::vector<CombiningFunctionId> combiners_;
};

// Weights, speed factors and combiner shapes for one structure.
struct ModelParameters {
  std::vector<double> weights;  // K*K row-major like the adjacency, 0 off-structure
  std::vector<double> speed;    // eta per concept
  std::vector<CombinerShape> shape;

  // Zero weights, unit speed, default shapes with scale = max(1, in-degree).
  static ModelParameters defaults_for(const NetworkStructure& structure);

  double weight(std::size_t from, std::size_t to) const { return weights[from * speed.size() + to]; }
  bool operator==(const ModelParameters&) const = default;
};

using StateVector = std::vector<double>;

// Structure plus consistent parameters. Construction validates every
// parameter range; speed factors are capped at `max_speed`, which together
// with steps_per_day >= max_speed keeps each Euler step a convex update.
class TemporalCausalModel {
 public:
  static constexpr double kDefaultMaxSpeed = 1.0;

  TemporalCausalModel(NetworkStructure structure, ModelParameters params, double max_speed = kDefaultMaxSpeed);

  const NetworkStructure& structure() const noexcept { return structure_; }
  const ModelParameters& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return structure_.size(); }
  double max_speed() const noexcept { return max_speed_; }
  const std::vector<std::size_t>& parents(std::size_t concept_idx) const { return parents_[concept_idx]; }

  bool operator==(const TemporalCausalModel& o) const {
    return structure_ == o.structure_ && params_ == o.params_ && max_speed_ == o.max_speed_;
  }

 private:
  NetworkStructure structure_;
  ModelParameters params_;
  double max_speed_;
  std::vector<std::vector<std::size_t>> parents_;
};

// One explicit Euler step of dY/dt = eta * (C(omega * X) - Y), clamped to
// [0, 1]. Concepts without incoming connections keep their value.
StateVector euler_step(const StateVector& state, const TemporalCausalModel& model, double dt);

// Daily states after day 1 .. horizon_days, integrating with
// dt = 1 / steps_per_day. The initial state itself is not included.
std::vector<StateVector> simulate(const TemporalCausalModel& model, const StateVector& initial, int horizon_days,
                                  int steps_per_day);

inline constexpr int kDefaultStepsPerDay = 10;

// Starting state for forecasting past the end of a window: last observed
// value per concept, else the window mean, else 0.5.
StateVector initial_state_at_end(const ema::SeriesWindow& window, std::size_t concepts);
// Starting state at the first day of a window: first observed value, else mean, else 0.5.
StateVector initial_state_at_start(const ema::SeriesWindow& window, std::size_t concepts);

// Forecast of the `horizon_days` days following the end of `train`.
std::vector<StateVector> predict(const TemporalCausalModel& model, const ema::SeriesWindow& train, int horizon_days,
                                 int steps_per_day = kDefaultStepsPerDay);

// Replays a window from its first day: element d is the state on day
// window.first_day + d, element 0 being the starting state.
std::vector<StateVector> reconstruct(const TemporalCausalModel& model, const ema::SeriesWindow& window,
                                     int steps_per_day = kDefaultStepsPerDay);

// Per-concept mean squared error over present observations; predicted[i] is
// the state on day first_predicted_day + i. Concepts with no present
// observation are unscorable (NaN). An observation outside the predicted
// range throws ContractViolation.
ObjectiveVector score(std::span<const StateVector> predicted, const ema::SeriesWindow& observed,
                      int first_predicted_day);
inline ObjectiveVector score(std::span<const StateVector> predicted, const ema::SeriesWindow& observed) {
  return score(predicted, observed, observed.first_day);
}

// Graphviz rendering; edges carry omega at 3 decimals when params are given.
std::string export_dot(const NetworkStructure& structure, const ema::ConceptCatalog& catalog,
                       const ModelParameters* params = nullptr);

// Precision / recall / F1 of predicted edges against a reference pattern.
struct EdgeRecovery {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
EdgeRecovery edge_recovery(const NetworkStructure& predicted, const NetworkStructure& truth);

}  // namespace tcnsearch::tcn
