#pragma once

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/network.hpp"

namespace tcnsearch::tcn {

// The illustrative seven-concept EMA interaction network (13 connections,
// e.g. Worry -> Mood, Social contact -> Self-Esteem), indexed by the
// default ConceptCatalog. All concepts use ScaledSum.
NetworkStructure reference_structure();

// The same connections with fixed parameters; the ground truth used by the
// synthetic benchmarks. Mood, Worry and Sleep use SimpleLogistic.
TemporalCausalModel reference_model();

}  // namespace tcnsearch::tcn
