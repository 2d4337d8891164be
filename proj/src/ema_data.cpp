#include "tcnsearch/ema_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"

namespace tcnsearch::ema {

ConceptCatalog::ConceptCatalog()
    : ConceptCatalog({"Mood", "Worry", "Self-Esteem", "Sleep", "Activities done", "Enjoyed activities",
                      "Social contact"}) {}

ConceptCatalog::ConceptCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) throw ValidationError("concept catalog needs at least 2 concepts");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("concept names must be non-empty");
    if (!seen.insert(n).second) throw ValidationError(fmt::format("duplicate concept name '{}'", n));
  }
}

std::optional<std::size_t> ConceptCatalog::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

double normalize_rating(double raw) {
  if (!(raw >= kRatingMin && raw <= kRatingMax))
    throw ValidationError(fmt::format("rating {} outside the 1-10 scale", raw));
  return (raw - kRatingMin) / (kRatingMax - kRatingMin);
}

double denormalize_rating(double normalized) { return kRatingMin + normalized * (kRatingMax - kRatingMin); }

ClientSeries::ClientSeries(std::string client_id, std::vector<Observation> observations, std::size_t concept_count)
    : client_id_(std::move(client_id)), observations_(std::move(observations)), concept_count_(concept_count) {
  if (observations_.empty()) throw ValidationError(fmt::format("client '{}' has no observations", client_id_));
  bool any_present = false;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    if (obs.day < 0) throw ValidationError(fmt::format("client '{}': negative day {}", client_id_, obs.day));
    if (i > 0 && obs.day <= observations_[i - 1].day)
      throw ValidationError(fmt::format("client '{}': days not strictly increasing at day {}", client_id_, obs.day));
    if (obs.values.size() != concept_count_)
      throw ValidationError(fmt::format("client '{}': day {} has {} values, expected {}", client_id_, obs.day,
                                        obs.values.size(), concept_count_));
    for (const auto& v : obs.values) {
      if (!v) continue;
      if (!(*v >= 0.0 && *v <= 1.0))
        throw ValidationError(fmt::format("client '{}': value {} outside [0,1] on day {}", client_id_, *v, obs.day));
      any_present = true;
    }
  }
  if (!any_present) throw ValidationError(fmt::format("client '{}' has no present values", client_id_));
}

void Cohort::validate() const {
  for (const auto& c : clients)
    if (c.concept_count() != catalog.size())
      throw ValidationError(fmt::format("client '{}' has {} concepts, catalog has {}", c.client_id(),
                                        c.concept_count(), catalog.size()));
}

std::size_t SeriesWindow::present_count(std::size_t concept_idx) const {
  return static_cast<std::size_t>(
      std::count_if(observations.begin(), observations.end(), [&](const Observation& o) { return o.values[concept_idx].has_value(); }));
}

Rating SeriesWindow::last_value(std::size_t concept_idx) const {
  for (auto it = observations.rbegin(); it != observations.rend(); ++it)
    if (it->values[concept_idx]) return it->values[concept_idx];
  return std::nullopt;
}

Rating SeriesWindow::first_value(std::size_t concept_idx) const {
  for (const auto& o : observations)
    if (o.values[concept_idx]) return o.values[concept_idx];
  return std::nullopt;
}

Rating SeriesWindow::mean_value(std::size_t concept_idx) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : observations)
    if (o.values[concept_idx]) {
      sum += *o.values[concept_idx];
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

void SplitSpec::validate() const {
  if (train_days < kMinTrainDays)
    throw ValidationError(fmt::format("train_days {} below the minimum of {} (three weeks)", train_days, kMinTrainDays));
  if (test_days < 1) throw ValidationError("test_days must be at least 1");
  if (validation_days < 1) throw ValidationError("validation_days must be at least 1");
}

SeriesWindow ClientSplit::train_and_test() const {
  SeriesWindow merged{train.client_id, train.first_day, train.length + test.length, train.observations};
  merged.observations.insert(merged.observations.end(), test.observations.begin(), test.observations.end());
  return merged;
}

SeriesWindow window(const ClientSeries& series, int first_day, int length) {
  SeriesWindow w{series.client_id(), first_day, length, {}};
  for (const auto& o : series.observations())
    if (o.day >= first_day && o.day < first_day + length) w.observations.push_back(o);
  return w;
}

SeriesWindow as_window(const ClientSeries& series) {
  return window(series, series.first_day(), series.span_days());
}

ClientSplit split_client(const ClientSeries& series, const SplitSpec& spec) {
  spec.validate();
  if (series.span_days() < spec.total_days())
    throw ValidationError(fmt::format("client '{}' spans {} days, split needs {}", series.client_id(),
                                      series.span_days(), spec.total_days()));
  const int start = series.first_day();
  return ClientSplit{window(series, start, spec.train_days),
                     window(series, start + spec.train_days, spec.test_days),
                     window(series, start + spec.train_days + spec.test_days, spec.validation_days)};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Days since 1970-01-01 from a "YYYY-MM-DD[...]" timestamp.
std::optional<long long> calendar_day(std::string_view ts) {
  ts = trim(ts);
  if (ts.size() < 10 || ts[4] != '-' || ts[7] != '-') return std::nullopt;
  if (ts.size() > 10 && ts[10] != 'T' && ts[10] != ' ') return std::nullopt;
  auto y = parse_int(ts.substr(0, 4));
  auto m = parse_int(ts.substr(5, 2));
  auto d = parse_int(ts.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

}  // namespace

ClientSeries aggregate_daily(std::string client_id, std::span<const Measurement> measurements,
                             const ConceptCatalog& catalog) {
  struct Acc {
    double sum = 0.0;
    int n = 0;
  };
  std::map<long long, std::vector<Acc>> days;
  for (std::size_t row = 0; row < measurements.size(); ++row) {
    const auto& m = measurements[row];
    auto day = calendar_day(m.timestamp);
    if (!day) throw ParseError(fmt::format("unparseable timestamp '{}'", m.timestamp), row + 1);
    auto concept_idx = catalog.index_of(m.concept_name);
    if (!concept_idx) throw ParseError(fmt::format("unknown concept '{}'", m.concept_name), row + 1);
    double v = 0.0;
    try {
      v = normalize_rating(m.raw);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), row + 1);
    }
    auto& slot = days.try_emplace(*day, catalog.size()).first->second[*concept_idx];
    slot.sum += v;
    ++slot.n;
  }
  if (days.empty()) throw ValidationError(fmt::format("client '{}' has no measurements", client_id));
  const long long origin = days.begin()->first;
  std::vector<Observation> obs;
  obs.reserve(days.size());
  for (const auto& [day, accs] : days) {
    Observation o{static_cast<int>(day - origin), std::vector<Rating>(catalog.size())};
    for (std::size_t k = 0; k < accs.size(); ++k)
      if (accs[k].n > 0) o.values[k] = accs[k].sum / accs[k].n;
    obs.push_back(std::move(o));
  }
  return ClientSeries(std::move(client_id), std::move(obs), catalog.size());
}

Cohort parse_cohort_csv(std::istream& in, const std::optional<ConceptCatalog>& expected) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("missing header row", 1);
  if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto header = split_csv(line);
  if (header.size() < 4 || trim(header[0]) != "client_id" || trim(header[1]) != "day")
    throw ParseError("header must start with client_id,day followed by concept names", line_no);
  std::vector<std::string> names;
  for (std::size_t i = 2; i < header.size(); ++i) names.emplace_back(trim(header[i]));
  ConceptCatalog catalog = [&] {
    try {
      return ConceptCatalog(names);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }();
  if (expected && !(*expected == catalog)) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (i >= expected->size() || names[i] != expected->name(i))
        throw ParseError(fmt::format("unknown header column '{}'", names[i]), line_no, i + 3);
    throw ParseError("header is missing concept columns", line_no);
  }
  const std::size_t k = catalog.size();

  struct Pending {
    std::vector<Observation> obs;
    std::vector<std::size_t> lines;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> by_client;
  while (next_line()) {
    auto cells = split_csv(line);
    if (cells.size() != k + 2)
      throw ParseError(fmt::format("expected {} cells, found {}", k + 2, cells.size()), line_no);
    std::string id(trim(cells[0]));
    if (id.empty()) throw ParseError("empty client_id", line_no, 1);
    auto day = parse_int(trim(cells[1]));
    if (!day) throw ParseError(fmt::format("non-integer day '{}'", cells[1]), line_no, 2);
    if (*day < 0) throw ParseError(fmt::format("negative day {}", *day), line_no, 2);
    Observation o{static_cast<int>(*day), std::vector<Rating>(k)};
    for (std::size_t c = 0; c < k; ++c) {
      auto cell = trim(cells[c + 2]);
      if (cell.empty()) continue;
      auto raw = parse_double(cell);
      if (!raw) throw ParseError(fmt::format("non-numeric cell '{}'", cell), line_no, c + 3);
      try {
        o.values[c] = normalize_rating(*raw);
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), line_no, c + 3);
      }
    }
    auto [it, inserted] = by_client.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.obs.push_back(std::move(o));
    it->second.lines.push_back(line_no);
  }

  Cohort cohort{catalog, {}};
  for (const auto& id : order) {
    auto& p = by_client.at(id);
    std::vector<std::size_t> idx(p.obs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p.obs[a].day < p.obs[b].day; });
    std::vector<Observation> sorted;
    sorted.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i > 0 && p.obs[idx[i]].day == p.obs[idx[i - 1]].day)
        throw ParseError(fmt::format("duplicate day {} for client '{}'", p.obs[idx[i]].day, id), p.lines[idx[i]], 2);
      sorted.push_back(std::move(p.obs[idx[i]]));
    }
    try {
      cohort.clients.emplace_back(id, std::move(sorted), k);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), p.lines.front());
    }
  }
  return cohort;
}

Cohort read_cohort_csv(const std::string& path, const std::optional<ConceptCatalog>& expected) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open cohort file '{}'", path));
  return parse_cohort_csv(in, expected);
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  out << "client_id,day";
  for (const auto& n : cohort.catalog.names()) out << ',' << csv_field(n);
  out << '\n';
  for (const auto& client : cohort.clients) {
    for (const auto& o : client.observations()) {
      out << csv_field(client.client_id()) << ',' << o.day;
      for (const auto& v : o.values) {
        out << ',';
        if (v) out << fmt::format("{}", denormalize_rating(*v));
      }
      out << '\n';
    }
  }
}

void write_cohort_csv(const std::string& path, const Cohort& cohort) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write cohort file '{}'", path));
  write_cohort_csv(out, cohort);
  if (!out) throw IoError(fmt::format("failed writing cohort file '{}'", path));
}

}  // namespace tcnsearch::ema
