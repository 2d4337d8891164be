#include "tcnsearch/commands.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tcnsearch/baselines.hpp"
#include "tcnsearch/error.hpp"
#include "tcnsearch/model_io.hpp"
#include "tcnsearch/reference_model.hpp"
#include "tcnsearch/synthetic.hpp"
#include "tcnsearch/two_stage.hpp"

namespace tcnsearch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

fs::path ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError(fmt::format("cannot create directory '{}'", p.string()));
  return p;
}

void write_text(const fs::path& path, std::string_view text, WrittenFiles& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  out.close();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
  written.push_back(path.string());
}

// Empty cell for unscorable values, as in the report CSVs.
std::string number(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.10g}", v); }

// One entry per command in a shared <out>/run_manifest.json.
void record_run(const RunConfig& cfg, std::string_view command, json details, WrittenFiles& written) {
  const fs::path path = fs::path(cfg.out_dir) / "run_manifest.json";
  json doc = json::object();
  if (std::ifstream in(path); in) {
    try {
      doc = json::parse(in);
    } catch (const json::parse_error&) {
      doc = json::object();
    }
    if (!doc.is_object()) doc = json::object();
  }
  json cfg_doc = to_json(cfg);
  cfg_doc.erase("out");
  cfg_doc.erase("jobs");
  details["config_hash"] = config_hash(cfg);
  details["config"] = std::move(cfg_doc);
  doc["tool"] = "tcnsearch";
  doc["version"] = TCNSEARCH_VERSION;
  doc["runs"][std::string(command)] = std::move(details);
  write_text(path, doc.dump(2) + "\n", written);
}

ema::Cohort load_cohort(const RunConfig& cfg) {
  if (cfg.cohort_path.empty()) throw ConfigError("no cohort CSV given (set 'cohort' or pass --cohort)");
  return ema::read_cohort_csv(cfg.cohort_path);
}

search::UsableCohort usable_or_throw(const ema::Cohort& cohort, const ema::SplitSpec& split) {
  auto usable = search::prepare_splits(cohort, split);
  if (usable.splits.empty()) {
    std::string spans;
    for (const auto& c : cohort.clients)
      spans += fmt::format("{}{}={} days", spans.empty() ? "" : ", ", c.client_id(), c.span_days());
    throw ConfigError(fmt::format("no client covers the {}-day split; client spans: {}", split.total_days(),
                                  spans.empty() ? std::string("(no clients)") : spans));
  }
  return usable;
}

std::string trace_csv(const std::vector<nsga2::GenerationStats>& trace, const ema::ConceptCatalog& catalog) {
  std::string out = "generation";
  for (const auto& n : catalog.names()) out += fmt::format(",best_{}", file_stem(n));
  for (const auto& n : catalog.names()) out += fmt::format(",median_{}", file_stem(n));
  out += '\n';
  for (const auto& g : trace) {
    out += std::to_string(g.generation);
    for (double v : g.best) out += ',' + number(v);
    for (double v : g.median) out += ',' + number(v);
    out += '\n';
  }
  return out;
}

std::string front_csv(const std::vector<search::StructureCandidate>& front, const ema::ConceptCatalog& catalog) {
  std::string out = "member,edges";
  for (const auto& n : catalog.names()) out += ',' + file_stem(n);
  out += '\n';
  for (std::size_t m = 0; m < front.size(); ++m) {
    out += fmt::format("{},{}", m, front[m].structure.edge_count());
    for (double v : front[m].objectives) out += ',' + number(v);
    out += '\n';
  }
  return out;
}

json warnings_json(const std::vector<std::string>& warnings) {
  json j = json::array();
  for (const auto& w : warnings) j.push_back(w);
  return j;
}

}  // namespace

std::string file_stem(std::string_view name) {
  std::string out;
  bool pending = false;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      if (pending && !out.empty()) out += '_';
      pending = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending = true;
    }
  }
  return out.empty() ? std::string("concept") : out;
}

tcn::StateVector parse_state(std::string_view text) {
  tcn::StateVector out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    auto field = text.substr(pos, comma - pos);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
      throw ParseError(fmt::format("bad state value '{}'", field), 0);
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

WrittenFiles cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.table2 && !cfg.truth_path.empty()) throw ConfigError("give either --table2 or --truth, not both");
  std::optional<tcn::ModelDocument> truth;
  if (cfg.table2) truth = tcn::ModelDocument{ema::ConceptCatalog{}, tcn::reference_model()};
  else if (!cfg.truth_path.empty()) truth = tcn::load_model_file(cfg.truth_path);
  else throw ConfigError("generate needs a truth model (--table2 or --truth <model.json>)");

  const auto cohort = ema::generate_synthetic_cohort(truth->model, truth->catalog, cfg.synthetic_spec());
  const fs::path out = ensure_dir(cfg.out_dir);
  WrittenFiles written;
  std::ostringstream csv;
  ema::write_cohort_csv(csv, cohort);
  write_text(out / "cohort.csv", csv.str(), written);
  write_text(out / "truth_model.json", tcn::dump_model(*truth), written);
  record_run(cfg, "generate", {{"clients", cohort.clients.size()}, {"edges", truth->model.structure().edge_count()}},
             written);
  return written;
}

WrittenFiles cmd_search(const RunConfig& cfg) {
  cfg.validate();
  const auto cohort = load_cohort(cfg);
  const auto usable = usable_or_throw(cohort, cfg.split);
  const auto& catalog = cohort.catalog;
  const auto settings = cfg.settings();
  const auto result =
      search::search_structures(cohort, cfg.split, cfg.seeded_stage_one(), cfg.seeded_stage_two(), settings);
  const auto champions = search::select_concept_champions(result.front, catalog.size());

  const fs::path out(cfg.out_dir);
  const fs::path models = ensure_dir(out / "models"), traces = ensure_dir(out / "traces"),
                 reports = ensure_dir(out / "reports"), dot = ensure_dir(out / "dot");
  WrittenFiles written;

  json entries = json::array();
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    const auto stem = file_stem(catalog.name(j));
    json entry{{"concept", catalog.name(j)}, {"index", j}};
    if (const auto& champ = champions.champions[j]) {
      const tcn::ModelDocument doc{catalog, tcn::TemporalCausalModel(champ->structure, champ->representative,
                                                                     settings.max_speed)};
      write_text(models / (stem + ".json"), tcn::dump_model(doc), written);
      write_text(dot / (stem + ".dot"), tcn::export_dot(champ->structure, catalog, &champ->representative), written);
      entry["model"] = stem + ".json";
      entry["front_member"] = champ->front_index;
      entry["edges"] = champ->structure.edge_count();
      entry["objective"] = champ->objective;
    } else {
      entry["model"] = nullptr;
    }
    entries.push_back(std::move(entry));
  }
  const json manifest{{"format_version", kManifestVersion},
                      {"concepts", std::move(entries)},
                      {"notes", warnings_json(champions.notes)}};
  write_text(models / "manifest.json", manifest.dump(2) + "\n", written);
  write_text(traces / "stage1.csv", trace_csv(result.trace, catalog), written);
  write_text(reports / "front.csv", front_csv(result.front, catalog), written);
  record_run(cfg, "search",
             {{"clients_used", usable.splits.size()},
              {"warnings", warnings_json(result.warnings)},
              {"front_size", result.front.size()},
              {"distinct_structures", result.distinct_structures},
              {"failed_evaluations", result.failed_evaluations}},
             written);
  return written;
}

WrittenFiles cmd_validate(const RunConfig& cfg, const std::string& manifest_path) {
  cfg.validate();
  const fs::path manifest_file =
      manifest_path.empty() ? fs::path(cfg.out_dir) / "models" / "manifest.json" : fs::path(manifest_path);
  json manifest;
  {
    std::ifstream in(manifest_file);
    if (!in) throw IoError(fmt::format("cannot open manifest '{}'", manifest_file.string()));
    try {
      manifest = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("manifest '{}': {}", manifest_file.string(), e.what()), 0);
    }
  }
  if (!manifest.is_object() || manifest.value("format_version", 0) != kManifestVersion ||
      !manifest.contains("concepts") || !manifest["concepts"].is_array())
    throw ParseError(fmt::format("manifest '{}' is not a version-{} champion manifest", manifest_file.string(),
                                 kManifestVersion),
                     0);

  const auto cohort = load_cohort(cfg);
  const auto& catalog = cohort.catalog;
  const std::size_t k = catalog.size();

  std::vector<std::string> missing;
  search::ConceptChampionSet champions;
  champions.champions.resize(k);
  for (const auto& entry : manifest["concepts"]) {
    if (!entry.is_object() || !entry.contains("concept") || !entry.contains("model"))
      throw ParseError(fmt::format("manifest '{}': malformed concept entry", manifest_file.string()), 0);
    if (entry["model"].is_null()) continue;
    const auto name = entry["concept"].get<std::string>();
    const auto idx = catalog.index_of(name);
    if (!idx) throw ValidationError(fmt::format("manifest concept '{}' is not in the cohort catalog", name));
    const fs::path model_file = manifest_file.parent_path() / entry["model"].get<std::string>();
    if (!fs::exists(model_file)) {
      missing.push_back(model_file.string());
      continue;
    }
    auto doc = tcn::load_model_file(model_file.string());
    if (!(doc.catalog == catalog))
      throw ValidationError(fmt::format("model '{}' was built for a different concept catalog", model_file.string()));
    champions.champions[*idx] = search::Champion{*idx, 0, doc.model.structure(), doc.model.params(),
                                                 entry.value("objective", 0.0)};
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw IoError(fmt::format("missing model files: {}", list));
  }

  const auto usable = usable_or_throw(cohort, cfg.split);
  const auto report =
      search::validate_champions(champions, usable.splits, catalog, cfg.seeded_stage_two(), cfg.settings());

  const fs::path reports = ensure_dir(fs::path(cfg.out_dir) / "reports");
  WrittenFiles written;
  std::ostringstream csv;
  report.write_csv(csv);
  write_text(reports / "validation.csv", csv.str(), written);
  write_text(reports / "validation.txt", report.summary(), written);
  record_run(cfg, "validate", {{"clients_used", usable.splits.size()}, {"warnings", warnings_json(usable.warnings)}},
             written);
  return written;
}

WrittenFiles cmd_simulate(const RunConfig& cfg, const std::string& model_path,
                          const std::optional<tcn::StateVector>& initial) {
  if (cfg.horizon_days < 1) throw ConfigError("horizon_days must be at least 1");
  if (model_path.empty()) throw ConfigError("simulate needs a model document (--model)");
  const auto doc = tcn::load_model_file(model_path);
  const std::size_t k = doc.model.size();
  const tcn::StateVector x0 = initial ? *initial : tcn::StateVector(k, 0.5);
  if (x0.size() != k)
    throw ConfigError(fmt::format("initial state has {} values, the model has {} concepts", x0.size(), k));
  for (double v : x0)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("initial state values must lie in [0,1]");

  const auto states = tcn::simulate(doc.model, x0, cfg.horizon_days, cfg.steps_per_day);
  std::string out = "day";
  for (const auto& n : doc.catalog.names()) out += ',' + n;
  out += '\n';
  for (std::size_t d = 0; d < states.size(); ++d) {
    out += std::to_string(d + 1);
    for (double v : states[d]) out += fmt::format(",{}", v);
    out += '\n';
  }
  WrittenFiles written;
  write_text(ensure_dir(cfg.out_dir) / "trajectory.csv", out, written);
  return written;
}

WrittenFiles cmd_baseline(const RunConfig& cfg) {
  cfg.validate();
  const auto cohort = load_cohort(cfg);
  const auto usable = usable_or_throw(cohort, cfg.split);
  const auto table = baselines::baseline_report(usable.splits, cohort.catalog, cfg.horizon_days);

  const fs::path reports = ensure_dir(fs::path(cfg.out_dir) / "reports");
  WrittenFiles written;
  std::ostringstream csv;
  baselines::write_error_csv(csv, table);
  write_text(reports / "baseline.csv", csv.str(), written);
  write_text(reports / "baseline.txt", baselines::format_error_summary(table), written);
  record_run(cfg, "baseline", {{"clients_used", usable.splits.size()}, {"warnings", warnings_json(usable.warnings)}},
             written);
  return written;
}

}  // namespace tcnsearch::cli
