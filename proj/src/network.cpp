#include "tcnsearch/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"

namespace tcnsearch::tcn {

namespace {
constexpr std::array<std::string_view, kCombinerCount> kCombinerNames = {"scaled_sum", "product", "max", "min",
                                                                         "simple_logistic"};
}

std::string_view to_string(CombiningFunctionId id) { return kCombinerNames.at(static_cast<std::size_t>(id)); }

std::optional<CombiningFunctionId> combiner_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kCombinerNames.size(); ++i)
    if (kCombinerNames[i] == name) return static_cast<CombiningFunctionId>(i);
  return std::nullopt;
}

double combine(CombiningFunctionId id, const CombinerShape& shape, std::span<const double> impacts) {
  if (impacts.empty()) throw ContractViolation("combine: empty impact list");
  switch (id) {
    case CombiningFunctionId::ScaledSum: {
      const double s = std::accumulate(impacts.begin(), impacts.end(), 0.0) / shape.scale;
      return std::clamp(s, 0.0, 1.0);
    }
    case CombiningFunctionId::Product:
      return std::accumulate(impacts.begin(), impacts.end(), 1.0, std::multiplies<>{});
    case CombiningFunctionId::Max:
      return *std::max_element(impacts.begin(), impacts.end());
    case CombiningFunctionId::Min:
      return *std::min_element(impacts.begin(), impacts.end());
    case CombiningFunctionId::SimpleLogistic: {
      const double s = std::accumulate(impacts.begin(), impacts.end(), 0.0);
      return 1.0 / (1.0 + std::exp(-shape.steepness * (s - shape.threshold)));
    }
  }
  throw ContractViolation("combine: unknown combining function");
}

NetworkStructure::NetworkStructure(std::size_t concepts, CombiningFunctionId combiner)
    : concepts_(concepts), adjacency_(concepts * concepts, 0), combiners_(concepts, combiner) {}

void NetworkStructure::set_edge(std::size_t from, std::size_t to, bool on) {
  if (from >= concepts_ || to >= concepts_) throw ContractViolation("set_edge: concept index out of range");
  if (from == to && on) throw ContractViolation("set_edge: self connections are not allowed");
  adjacency_[from * concepts_ + to] = on ? 1 : 0;
}

std::size_t NetworkStructure::edge_count() const noexcept {
  return static_cast<std::size_t>(std::count(adjacency_.begin(), adjacency_.end(), std::uint8_t{1}));
}

std::size_t NetworkStructure::in_degree(std::size_t concept_idx) const {
  std::size_t n = 0;
  for (std::size_t from = 0; from < concepts_; ++from) n += edge(from, concept_idx) ? 1 : 0;
  return n;
}

std::vector<std::size_t> NetworkStructure::parents(std::size_t concept_idx) const {
  std::vector<std::size_t> out;
  for (std::size_t from = 0; from < concepts_; ++from)
    if (edge(from, concept_idx)) out.push_back(from);
  return out;
}

std::uint64_t NetworkStructure::hash() const noexcept {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < 8; ++i) feed(static_cast<std::uint8_t>(concepts_ >> (8 * i)));
  for (auto a : adjacency_) feed(a);
  for (auto c : combiners_) feed(static_cast<std::uint8_t>(c) + 0x10);
  return h;
}

ModelParameters ModelParameters::defaults_for(const NetworkStructure& structure) {
  const std::size_t k = structure.size();
  ModelParameters p{std::vector<double>(k * k, 0.0), std::vector<double>(k, 1.0), std::vector<CombinerShape>(k)};
  for (std::size_t j = 0; j < k; ++j) p.shape[j].scale = std::max<double>(1.0, static_cast<double>(structure.in_degree(j)));
  return p;
}

TemporalCausalModel::TemporalCausalModel(NetworkStructure structure, ModelParameters params, double max_speed)
    : structure_(std::move(structure)), params_(std::move(params)), max_speed_(max_speed) {
  const std::size_t k = structure_.size();
  if (k < 2) throw ValidationError("model needs at least 2 concepts");
  if (params_.weights.size() != k * k || params_.speed.size() != k || params_.shape.size() != k)
    throw ValidationError("parameter dimensions do not match the structure");
  if (!(max_speed_ > 0.0) || !std::isfinite(max_speed_)) throw ValidationError("max_speed must be positive");
  parents_.resize(k);
  for (std::size_t from = 0; from < k; ++from) {
    for (std::size_t to = 0; to < k; ++to) {
      const double w = params_.weights[from * k + to];
      if (structure_.edge(from, to)) {
        if (!(w >= -1.0 && w <= 1.0))
          throw ValidationError(fmt::format("weight {}->{} = {} outside [-1,1]", from, to, w));
        parents_[to].push_back(from);
      } else if (w != 0.0) {
        throw ValidationError(fmt::format("weight {}->{} set without a connection", from, to));
      }
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double eta = params_.speed[j];
    if (!(eta >= 0.0 && eta <= max_speed_))
      throw ConfigError(fmt::format("speed factor {} of concept {} outside [0,{}]", eta, j, max_speed_));
    const auto& s = params_.shape[j];
    switch (structure_.combiner(j)) {
      case CombiningFunctionId::ScaledSum:
        if (!(s.scale >= 1.0 && s.scale <= static_cast<double>(k)))
          throw ValidationError(fmt::format("scale {} of concept {} outside [1,{}]", s.scale, j, k));
        break;
      case CombiningFunctionId::SimpleLogistic:
        if (!(s.steepness > 0.0 && s.steepness <= kMaxSteepness))
          throw ValidationError(fmt::format("steepness {} of concept {} outside (0,40]", s.steepness, j));
        if (!(s.threshold >= 0.0 && s.threshold <= 1.0))
          throw ValidationError(fmt::format("threshold {} of concept {} outside [0,1]", s.threshold, j));
        break;
      default:
        break;
    }
  }
}

namespace {

void step_into(const StateVector& in, StateVector& out, const TemporalCausalModel& model, double dt,
               std::vector<double>& impacts) {
  const std::size_t k = model.size();
  const auto& p = model.params();
  for (std::size_t j = 0; j < k; ++j) {
    const auto& parents = model.parents(j);
    if (parents.empty()) {
      out[j] = in[j];
      continue;
    }
    impacts.clear();
    for (auto from : parents) impacts.push_back(p.weights[from * k + j] * in[from]);
    const double c = combine(model.structure().combiner(j), p.shape[j], impacts);
    out[j] = std::clamp(in[j] + p.speed[j] * dt * (c - in[j]), 0.0, 1.0);
  }
}

void check_state(const StateVector& s, std::size_t k) {
  if (s.size() != k) throw ContractViolation("state length does not match the model");
  for (double v : s)
    if (!std::isfinite(v)) throw ContractViolation("state contains a non-finite value");
}

}  // namespace

StateVector euler_step(const StateVector& state, const TemporalCausalModel& model, double dt) {
  check_state(state, model.size());
  if (!(dt > 0.0) || dt * model.max_speed() > 1.0) throw ContractViolation("euler_step: dt must satisfy 0 < dt*eta_max <= 1");
  StateVector out(state.size());
  std::vector<double> impacts;
  step_into(state, out, model, dt, impacts);
  return out;
}

std::vector<StateVector> simulate(const TemporalCausalModel& model, const StateVector& initial, int horizon_days,
                                  int steps_per_day) {
  if (horizon_days < 1) throw ContractViolation("simulate: horizon_days must be >= 1");
  if (steps_per_day < 1) throw ContractViolation("simulate: steps_per_day must be >= 1");
  const double dt = 1.0 / steps_per_day;
  if (dt * model.max_speed() > 1.0)
    throw ConfigError(fmt::format("steps_per_day {} too small for max speed {}", steps_per_day, model.max_speed()));
  check_state(initial, model.size());

  std::vector<StateVector> days;
  days.reserve(static_cast<std::size_t>(horizon_days));
  StateVector cur = initial;
  StateVector next(cur.size());
  std::vector<double> impacts;
  impacts.reserve(cur.size());
  for (int d = 0; d < horizon_days; ++d) {
    for (int s = 0; s < steps_per_day; ++s) {
      step_into(cur, next, model, dt, impacts);
      cur.swap(next);
    }
    days.push_back(cur);
  }
  return days;
}

StateVector initial_state_at_end(const ema::SeriesWindow& window, std::size_t concepts) {
  StateVector s(concepts, 0.5);
  for (std::size_t j = 0; j < concepts; ++j) {
    if (auto v = window.last_value(j)) s[j] = *v;
    else if (auto m = window.mean_value(j)) s[j] = *m;
  }
  return s;
}

StateVector initial_state_at_start(const ema::SeriesWindow& window, std::size_t concepts) {
  StateVector s(concepts, 0.5);
  for (std::size_t j = 0; j < concepts; ++j) {
    if (auto v = window.first_value(j)) s[j] = *v;
    else if (auto m = window.mean_value(j)) s[j] = *m;
  }
  return s;
}

std::vector<StateVector> predict(const TemporalCausalModel& model, const ema::SeriesWindow& train, int horizon_days,
                                 int steps_per_day) {
  return simulate(model, initial_state_at_end(train, model.size()), horizon_days, steps_per_day);
}

std::vector<StateVector> reconstruct(const TemporalCausalModel& model, const ema::SeriesWindow& window,
                                     int steps_per_day) {
  if (window.length < 1) throw ContractViolation("reconstruct: empty window");
  std::vector<StateVector> out;
  out.reserve(static_cast<std::size_t>(window.length));
  out.push_back(initial_state_at_start(window, model.size()));
  if (window.length > 1) {
    auto rest = simulate(model, out.front(), window.length - 1, steps_per_day);
    for (auto& s : rest) out.push_back(std::move(s));
  }
  return out;
}

ObjectiveVector score(std::span<const StateVector> predicted, const ema::SeriesWindow& observed,
                      int first_predicted_day) {
  const std::size_t k = observed.observations.empty()
                            ? (predicted.empty() ? 0 : predicted.front().size())
                            : observed.observations.front().values.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> n(k, 0);
  for (const auto& o : observed.observations) {
    const long idx = static_cast<long>(o.day) - first_predicted_day;
    if (idx < 0 || idx >= static_cast<long>(predicted.size()))
      throw ContractViolation(fmt::format("score: observed day {} outside the predicted range", o.day));
    const auto& p = predicted[static_cast<std::size_t>(idx)];
    if (p.size() != k) throw ContractViolation("score: concept count mismatch");
    for (std::size_t j = 0; j < k; ++j) {
      if (!o.values[j]) continue;
      const double r = p[j] - *o.values[j];
      sum[j] += r * r;
      ++n[j];
    }
  }
  ObjectiveVector out(k, kUnscorable);
  for (std::size_t j = 0; j < k; ++j)
    if (n[j] > 0) out[j] = sum[j] / static_cast<double>(n[j]);
  return out;
}

namespace {
std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}
}  // namespace

std::string export_dot(const NetworkStructure& structure, const ema::ConceptCatalog& catalog,
                       const ModelParameters* params) {
  const std::size_t k = structure.size();
  if (catalog.size() != k) throw ContractViolation("export_dot: catalog size does not match the structure");
  std::string out = "digraph tcn {\n  rankdir=LR;\n";
  for (std::size_t j = 0; j < k; ++j)
    out += fmt::format("  n{} [label=\"{}\", combiner=\"{}\"];\n", j, dot_escape(catalog.name(j)),
                       to_string(structure.combiner(j)));
  for (std::size_t from = 0; from < k; ++from)
    for (std::size_t to = 0; to < k; ++to) {
      if (!structure.edge(from, to)) continue;
      if (params)
        out += fmt::format("  n{} -> n{} [label=\"{:.3f}\"];\n", from, to, params->weights[from * k + to]);
      else
        out += fmt::format("  n{} -> n{};\n", from, to);
    }
  out += "}\n";
  return out;
}

EdgeRecovery edge_recovery(const NetworkStructure& predicted, const NetworkStructure& truth) {
  if (predicted.size() != truth.size()) throw ContractViolation("edge_recovery: size mismatch");
  EdgeRecovery r;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const bool p = predicted.edge(i, j), t = truth.edge(i, j);
      if (p && t) ++r.true_positives;
      else if (p) ++r.false_positives;
      else if (t) ++r.false_negatives;
    }
  const double tp = static_cast<double>(r.true_positives);
  r.precision = (r.true_positives + r.false_positives) ? tp / static_cast<double>(r.true_positives + r.false_positives) : 0.0;
  r.recall = (r.true_positives + r.false_negatives) ? tp / static_cast<double>(r.true_positives + r.false_negatives) : 0.0;
  r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace tcnsearch::tcn
