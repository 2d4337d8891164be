#include "tcnsearch/reference_model.hpp"

#include <array>
#include <cmath>

namespace tcnsearch::tcn {

namespace {

// Default catalog order.
enum Concept : std::size_t { Mood, Worry, SelfEsteem, Sleep, ActivitiesDone, EnjoyedActivities, SocialContact, kCount };

struct Link {
  Concept from;
  Concept to;
  double weight;
};

constexpr std::array<Link, 13> kLinks = {{
    {Mood, Sleep, 0.6},
    {Mood, EnjoyedActivities, 0.8},
    {Worry, Mood, -0.5},
    {Worry, Sleep, -0.4},
    {Sleep, SocialContact, 0.7},
    {Sleep, EnjoyedActivities, 0.5},
    {SelfEsteem, Worry, -0.6},
    {SelfEsteem, SocialContact, 0.6},
    {SocialContact, Worry, -0.4},
    {SocialContact, SelfEsteem, 0.7},
    {SocialContact, ActivitiesDone, 0.9},
    {EnjoyedActivities, Mood, 0.9},
    {ActivitiesDone, SelfEsteem, 0.6},
}};

constexpr std::array<double, kCount> kSpeed = {0.25, 0.2, 0.15, 0.3, 0.2, 0.25, 0.2};

// Concepts with inhibiting inputs use the logistic combiner; a scaled sum
// would clamp them to zero.
struct Logistic {
  Concept target;
  double steepness;
  double threshold;
};

constexpr std::array<Logistic, 3> kLogistic = {{
    {Mood, 5.0, 0.2},
    {Worry, 3.0, 0.0},
    {Sleep, 5.0, 0.1},
}};

}  // namespace

NetworkStructure reference_structure() {
  NetworkStructure s(kCount, CombiningFunctionId::ScaledSum);
  for (const auto& l : kLinks) s.set_edge(l.from, l.to, true);
  return s;
}

TemporalCausalModel reference_model() {
  auto structure = reference_structure();
  ModelParameters p = ModelParameters::defaults_for(structure);
  std::array<double, kCount> positive_in{};
  for (const auto& l : kLinks) {
    p.weights[l.from * kCount + l.to] = l.weight;
    if (l.weight > 0) positive_in[l.to] += l.weight;
  }
  for (std::size_t c = 0; c < kCount; ++c) {
    p.speed[c] = kSpeed[c];
    p.shape[c].scale = std::max(1.0, positive_in[c]);
  }
  for (const auto& l : kLogistic) {
    structure.set_combiner(l.target, CombiningFunctionId::SimpleLogistic);
    p.shape[l.target].steepness = l.steepness;
    p.shape[l.target].threshold = l.threshold;
  }
  return TemporalCausalModel(std::move(structure), std::move(p));
}

}  // namespace tcnsearch::tcn
