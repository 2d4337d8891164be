#include "tcnsearch/model_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"

namespace tcnsearch::tcn {

using nlohmann::json;

json to_json(const ModelDocument& doc) {
  const auto& m = doc.model;
  const std::size_t k = m.size();
  json j;
  j["format_version"] = kModelFormatVersion;
  j["concepts"] = doc.catalog.names();
  json combiners = json::array(), adjacency = json::array(), weights = json::array(), shape = json::array();
  for (std::size_t to = 0; to < k; ++to) combiners.push_back(std::string(to_string(m.structure().combiner(to))));
  for (std::size_t from = 0; from < k; ++from) {
    json arow = json::array(), wrow = json::array();
    for (std::size_t to = 0; to < k; ++to) {
      arow.push_back(m.structure().edge(from, to) ? 1 : 0);
      wrow.push_back(m.params().weights[from * k + to]);
    }
    adjacency.push_back(std::move(arow));
    weights.push_back(std::move(wrow));
  }
  for (std::size_t c = 0; c < k; ++c) {
    json s = json::object();
    const auto& sh = m.params().shape[c];
    switch (m.structure().combiner(c)) {
      case CombiningFunctionId::ScaledSum:
        s["scale"] = sh.scale;
        break;
      case CombiningFunctionId::SimpleLogistic:
        s["steepness"] = sh.steepness;
        s["threshold"] = sh.threshold;
        break;
      default:
        break;
    }
    shape.push_back(std::move(s));
  }
  j["combiners"] = std::move(combiners);
  j["adjacency"] = std::move(adjacency);
  j["weights"] = std::move(weights);
  j["speed"] = m.params().speed;
  j["shape"] = std::move(shape);
  j["max_speed"] = m.max_speed();
  return j;
}

namespace {

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(fmt::format("model document lacks '{}'", name), 0);
  return *it;
}

const json& sized_array(const json& j, const char* name, std::size_t n) {
  const auto& a = field(j, name);
  if (!a.is_array() || a.size() != n) throw ParseError(fmt::format("'{}' must be an array of {}", name, n), 0);
  return a;
}

double number(const json& v, const char* what) {
  if (!v.is_number()) throw ParseError(fmt::format("'{}' must be numeric", what), 0);
  return v.get<double>();
}

}  // namespace

ModelDocument model_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("model document must be a JSON object", 0);
  const auto& version = field(j, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
    throw ParseError(fmt::format("unsupported model format_version {}", version.dump()), 0);
  const auto& names = field(j, "concepts");
  if (!names.is_array()) throw ParseError("'concepts' must be an array", 0);
  std::vector<std::string> concept_names;
  for (const auto& n : names) {
    if (!n.is_string()) throw ParseError("concept names must be strings", 0);
    concept_names.push_back(n.get<std::string>());
  }
  ema::ConceptCatalog catalog(std::move(concept_names));
  const std::size_t k = catalog.size();

  NetworkStructure structure(k);
  const auto& combiners = sized_array(j, "combiners", k);
  for (std::size_t c = 0; c < k; ++c) {
    if (!combiners[c].is_string()) throw ParseError("combiner ids must be strings", 0);
    auto id = combiner_from_string(combiners[c].get<std::string>());
    if (!id) throw ParseError(fmt::format("unknown combiner '{}'", combiners[c].get<std::string>()), 0);
    structure.set_combiner(c, *id);
  }
  const auto& adjacency = sized_array(j, "adjacency", k);
  const auto& weights = sized_array(j, "weights", k);
  ModelParameters params{std::vector<double>(k * k, 0.0), std::vector<double>(k, 0.0), std::vector<CombinerShape>(k)};
  for (std::size_t from = 0; from < k; ++from) {
    if (!adjacency[from].is_array() || adjacency[from].size() != k || !weights[from].is_array() ||
        weights[from].size() != k)
      throw ParseError("adjacency and weights must be K x K", 0);
    for (std::size_t to = 0; to < k; ++to) {
      const auto& a = adjacency[from][to];
      if (!a.is_number_integer() || (a.get<int>() != 0 && a.get<int>() != 1))
        throw ParseError("adjacency entries must be 0 or 1", 0);
      if (a.get<int>() == 1) {
        if (from == to) throw ValidationError("self connection in adjacency");
        structure.set_edge(from, to, true);
      }
      params.weights[from * k + to] = number(weights[from][to], "weights");
    }
  }
  const auto& speed = sized_array(j, "speed", k);
  for (std::size_t c = 0; c < k; ++c) params.speed[c] = number(speed[c], "speed");
  const auto& shape = sized_array(j, "shape", k);
  for (std::size_t c = 0; c < k; ++c) {
    if (!shape[c].is_object()) throw ParseError("shape entries must be objects", 0);
    if (auto it = shape[c].find("scale"); it != shape[c].end()) params.shape[c].scale = number(*it, "scale");
    if (auto it = shape[c].find("steepness"); it != shape[c].end()) params.shape[c].steepness = number(*it, "steepness");
    if (auto it = shape[c].find("threshold"); it != shape[c].end()) params.shape[c].threshold = number(*it, "threshold");
  }
  double max_speed = TemporalCausalModel::kDefaultMaxSpeed;
  if (auto it = j.find("max_speed"); it != j.end()) max_speed = number(*it, "max_speed");
  return ModelDocument{std::move(catalog), TemporalCausalModel(std::move(structure), std::move(params), max_speed)};
}

std::string dump_model(const ModelDocument& doc) { return to_json(doc).dump(2) + "\n"; }

ModelDocument load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open model file '{}'", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()), 0);
  }
  return model_from_json(j);
}

void save_model_file(const std::string& path, const ModelDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write model file '{}'", path));
  out << dump_model(doc);
  if (!out) throw IoError(fmt::format("failed writing model file '{}'", path));
}

}  // namespace tcnsearch::tcn
