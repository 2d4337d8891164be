#pragma once

#include <cstdint>

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/network.hpp"

namespace tcnsearch::ema {

struct SyntheticSpec {
  std::size_t clients = 20;
  int days = 42;
  double noise_sd = 0.05;
  double missing_rate = 0.2;
  std::uint64_t seed = 0;
  int steps_per_day = tcn::kDefaultStepsPerDay;
  double initial_low = 0.2;
  double initial_high = 0.8;
};

// Per client: uniform initial state in [initial_low, initial_high], the
// truth model simulated day by day, Gaussian noise clipped to [0, 1], then
// each value deleted independently with probability missing_rate.
// Clients are named c1, c2, ...; a pure function of its arguments.
Cohort generate_synthetic_cohort(const tcn::TemporalCausalModel& truth, const ConceptCatalog& catalog,
                                 const SyntheticSpec& spec);

}  // namespace tcnsearch::ema
