#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcnsearch::ema {

// Ordered list of assessed concepts. The default catalog holds the seven
// commonly assessed EMA items.
class ConceptCatalog {
 public:
  ConceptCatalog();
  explicit ConceptCatalog(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t concept_idx) const { return names_.at(concept_idx); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const ConceptCatalog&) const = default;

 private:
  std::vector<std::string> names_;
};

constexpr double kRatingMin = 1.0;
constexpr double kRatingMax = 10.0;

// Affine map of the 1-10 rating scale onto [0, 1].
double normalize_rating(double raw);
double denormalize_rating(double normalized);

using Rating = std::optional<double>;

// One day of (normalized) ratings; std::nullopt marks a missing value.
struct Observation {
  int day = 0;
  std::vector<Rating> values;

  bool operator==(const Observation&) const = default;
};

// A client's day-indexed observations. Days are strictly increasing and at
// least one value is present somewhere in the series.
class ClientSeries {
 public:
  ClientSeries(std::string client_id, std::vector<Observation> observations, std::size_t concept_count);

  const std::string& client_id() const noexcept { return client_id_; }
  const std::vector<Observation>& observations() const noexcept { return observations_; }
  std::size_t concept_count() const noexcept { return concept_count_; }
  int first_day() const { return observations_.front().day; }
  int last_day() const { return observations_.back().day; }
  // Number of calendar days covered, first to last inclusive.
  int span_days() const { return last_day() - first_day() + 1; }

  bool operator==(const ClientSeries&) const = default;

 private:
  std::string client_id_;
  std::vector<Observation> observations_;
  std::size_t concept_count_;
};

struct Cohort {
  ConceptCatalog catalog;
  std::vector<ClientSeries> clients;

  // Throws ValidationError if a client's concept count differs from the catalog.
  void validate() const;
  bool operator==(const Cohort&) const = default;
};

// Contiguous block of days [first_day, first_day + length) cut from a client
// series. A window may hold no observations at all.
struct SeriesWindow {
  std::string client_id;
  int first_day = 0;
  int length = 0;
  std::vector<Observation> observations;

  int end_day() const noexcept { return first_day + length; }
  std::size_t present_count(std::size_t concept_idx) const;
  // Most recent present value of a concept, if any.
  Rating last_value(std::size_t concept_idx) const;
  Rating first_value(std::size_t concept_idx) const;
  Rating mean_value(std::size_t concept_idx) const;

  bool operator==(const SeriesWindow&) const = default;
};

// Day counts of the chronological train / test / validation partition.
struct SplitSpec {
  int train_days = 21;
  int test_days = 14;
  int validation_days = 7;

  static constexpr int kMinTrainDays = 21;

  // Throws ValidationError on a violated minimum.
  void validate() const;
  int total_days() const noexcept { return train_days + test_days + validation_days; }
};

struct ClientSplit {
  SeriesWindow train;
  SeriesWindow test;
  SeriesWindow validation;

  // Train and test merged into one window (used for refitting before validation).
  SeriesWindow train_and_test() const;
};

// Full series as one window.
SeriesWindow as_window(const ClientSeries& series);

// Cuts a window out of a series (observations in [first_day, first_day + length)).
SeriesWindow window(const ClientSeries& series, int first_day, int length);

// Chronological partition starting at the series' first day. Days beyond the
// three windows are dropped. Throws ValidationError if the series is too short.
ClientSplit split_client(const ClientSeries& series, const SplitSpec& spec);

// A single timestamped rating as collected on-device.
struct Measurement {
  std::string timestamp;  // "YYYY-MM-DD", optionally followed by 'T' or ' ' and a time of day
  std::string concept_name;
  double raw = 0.0;       // 1-10 scale
};

// Buckets measurements by calendar day (day 0 = earliest date) and averages
// the normalized ratings of each day and concept. Throws ParseError with the
// 1-based row number on a malformed row.
ClientSeries aggregate_daily(std::string client_id, std::span<const Measurement> measurements,
                             const ConceptCatalog& catalog);

// Cohort CSV: header `client_id,day,<concept...>`, empty cell = missing, cells
// are raw 1-10 ratings. When `expected` is given the header must match it.
Cohort parse_cohort_csv(std::istream& in, const std::optional<ConceptCatalog>& expected = std::nullopt);
Cohort read_cohort_csv(const std::string& path, const std::optional<ConceptCatalog>& expected = std::nullopt);
void write_cohort_csv(std::ostream& out, const Cohort& cohort);
void write_cohort_csv(const std::string& path, const Cohort& cohort);

}  // namespace tcnsearch::ema
