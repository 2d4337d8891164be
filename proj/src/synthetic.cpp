#include "tcnsearch/synthetic.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"
#include "tcnsearch/random.hpp"

namespace tcnsearch::ema {

Cohort generate_synthetic_cohort(const tcn::TemporalCausalModel& truth, const ConceptCatalog& catalog,
                                 const SyntheticSpec& spec) {
  const std::size_t k = truth.size();
  if (catalog.size() != k) throw ValidationError("catalog size does not match the truth model");
  if (spec.days < 1) throw ValidationError("synthetic cohort needs at least one day");
  if (!(spec.noise_sd >= 0.0)) throw ValidationError("noise_sd must be non-negative");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) throw ValidationError("missing_rate must be in [0,1)");
  if (!(spec.initial_low >= 0.0 && spec.initial_low <= spec.initial_high && spec.initial_high <= 1.0))
    throw ValidationError("initial state range must lie within [0,1]");

  Cohort cohort{catalog, {}};
  cohort.clients.reserve(spec.clients);
  for (std::size_t c = 0; c < spec.clients; ++c) {
    Rng rng = make_rng(spec.seed, {0x5eed, c});
    std::uniform_real_distribution<double> init(spec.initial_low, spec.initial_high);
    tcn::StateVector x0(k);
    for (auto& v : x0) v = init(rng);

    std::vector<tcn::StateVector> states{x0};
    if (spec.days > 1) {
      auto rest = tcn::simulate(truth, x0, spec.days - 1, spec.steps_per_day);
      states.insert(states.end(), rest.begin(), rest.end());
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Observation> obs;
    obs.reserve(states.size());
    for (int d = 0; d < spec.days; ++d) {
      Observation o{d, std::vector<Rating>(k)};
      for (std::size_t j = 0; j < k; ++j) {
        double v = states[static_cast<std::size_t>(d)][j];
        if (spec.noise_sd > 0.0) v = std::clamp(v + spec.noise_sd * noise(rng), 0.0, 1.0);
        if (!bernoulli(rng, spec.missing_rate)) o.values[j] = v;
      }
      obs.push_back(std::move(o));
    }
    cohort.clients.emplace_back(fmt::format("c{}", c + 1), std::move(obs), k);
  }
  return cohort;
}

}  // namespace tcnsearch::ema
