#pragma once

#include <random>

#include "tcnsearch/network.hpp"
#include "tcnsearch/random.hpp"

namespace testing_support {

using namespace tcnsearch;

// Random structure with edge probability `density` and random combiners.
inline tcn::NetworkStructure random_structure(std::size_t k, double density, Rng& rng) {
  tcn::NetworkStructure s(k);
  std::uniform_int_distribution<int> comb(0, static_cast<int>(tcn::kCombinerCount) - 1);
  for (std::size_t j = 0; j < k; ++j) s.set_combiner(j, static_cast<tcn::CombiningFunctionId>(comb(rng)));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && bernoulli(rng, density)) s.set_edge(i, j, true);
  return s;
}

// Parameters drawn uniformly from their full admissible ranges.
inline tcn::TemporalCausalModel random_model(const tcn::NetworkStructure& s, Rng& rng) {
  const std::size_t k = s.size();
  std::uniform_real_distribution<double> w(-1.0, 1.0), u(0.0, 1.0);
  auto p = tcn::ModelParameters::defaults_for(s);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (s.edge(i, j)) p.weights[i * k + j] = w(rng);
  for (std::size_t j = 0; j < k; ++j) {
    p.speed[j] = u(rng);
    p.shape[j].scale = 1.0 + u(rng) * static_cast<double>(k - 1);
    p.shape[j].steepness = 0.01 + u(rng) * (tcn::kMaxSteepness - 0.01);
    p.shape[j].threshold = u(rng);
  }
  return tcn::TemporalCausalModel(s, p);
}

inline tcn::StateVector random_state(std::size_t k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tcn::StateVector x(k);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace testing_support
