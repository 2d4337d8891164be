#pragma once

#include <string>

#include <json.hpp>

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/network.hpp"

namespace tcnsearch::tcn {

inline constexpr int kModelFormatVersion = 1;

// A model together with the concept names it was built for.
struct ModelDocument {
  ema::ConceptCatalog catalog;
  TemporalCausalModel model;
};

// JSON layout:
//   format_version, concepts[K], combiners[K], adjacency[K][K] (0/1, row = from),
//   weights[K][K], speed[K], shape[K] (only the fields the concept's combiner reads)
nlohmann::json to_json(const ModelDocument& doc);
// Throws ParseError on a malformed document and ValidationError on bad values.
ModelDocument model_from_json(const nlohmann::json& j);

std::string dump_model(const ModelDocument& doc);
ModelDocument load_model_file(const std::string& path);
void save_model_file(const std::string& path, const ModelDocument& doc);

}  // namespace tcnsearch::tcn
