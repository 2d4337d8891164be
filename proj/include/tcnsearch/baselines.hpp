#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcnsearch/ema_data.hpp"
#include "tcnsearch/network.hpp"

namespace tcnsearch::baselines {

enum class Method { Mean, Regression, Dlm };

inline constexpr std::array<Method, 3> kAllMethods = {Method::Mean, Method::Regression, Method::Dlm};

// Report ids: "mean", "ols_trend", "dlm_local_level".
std::string_view method_id(Method m);

struct BaselinePrediction {
  Method method = Method::Mean;
  std::vector<tcn::StateVector> states;  // one per horizon day
};

// Constant training mean per concept (0.5 if unobserved).
BaselinePrediction mean_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days);

// Per-concept least-squares line on the day index, extrapolated and
// clamped to [0, 1]; concepts with fewer than two observations fall back to the mean.
BaselinePrediction regression_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days);

// Per-concept local-level Kalman filter with grid-selected variances; the
// forecast holds the last filtered level. Fewer than three observations
// fall back to the mean.
BaselinePrediction dlm_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days);

BaselinePrediction run_baseline(Method m, const ema::SeriesWindow& train, std::size_t concepts, int horizon_days);

// ---- building blocks (exposed for verification) ----------------------------

struct LinearTrend {
  double intercept = 0.0;
  double slope = 0.0;
  double at(double x) const noexcept { return intercept + slope * x; }
};

// Ordinary least squares of y on x; nullopt with fewer than two distinct x.
std::optional<LinearTrend> fit_trend(std::span<const double> x, std::span<const double> y);

// Day-aligned series of one concept: values[d] is day first_day + d.
std::vector<ema::Rating> concept_series(const ema::SeriesWindow& window, std::size_t concept_idx);

struct LocalLevelVariances {
  double level = 0.0;        // q, random-walk increment variance
  double observation = 0.0;  // r
};

struct LocalLevelFilter {
  // Filtered level and variance for every day from the first observation on.
  std::vector<double> level;
  std::vector<double> variance;
  // One-step-ahead (predicted level, observation) pairs, excluding the first observation.
  std::vector<double> one_step_prediction;
  std::vector<double> one_step_observed;
  std::vector<bool> observed;
  double log_likelihood = 0.0;
  double final_level = 0.5;
};

// Kalman recursion initialized at the first present value with variance r;
// missing days only propagate. Requires at least one present value.
LocalLevelFilter run_local_level_filter(std::span<const ema::Rating> series, const LocalLevelVariances& v);

// 8 log-spaced values over [1e-5, 1e-1].
std::array<double, 8> variance_grid();

// Grid point with the highest one-step predictive log-likelihood.
LocalLevelVariances select_local_level_variances(std::span<const ema::Rating> series);

// ---- error tables ----------------------------------------------------------

struct ErrorRow {
  std::size_t concept_idx = 0;
  std::string method;
  double mse_mean = 0.0;  // NaN if no client is scorable
  double mse_sd = 0.0;    // sample sd over clients, 0 with fewer than two
  std::size_t n_scorable = 0;
};

struct ErrorTable {
  std::vector<std::string> concepts;
  std::vector<ErrorRow> rows;

  // First row for (concept, method), if any.
  const ErrorRow* find(std::size_t concept_idx, std::string_view method) const;
};

// Aggregates per-client errors of one concept (NaN entries skipped).
ErrorRow aggregate_errors(std::size_t concept_idx, std::string method, std::span<const double> per_client);

void write_error_csv(std::ostream& out, const ErrorTable& table);
std::string format_error_summary(const ErrorTable& table);

// Restricts a window to its first `days` days.
ema::SeriesWindow head(const ema::SeriesWindow& w, int days);

// Every baseline fit on train + test and scored on (the first horizon days
// of) the validation window; K x 3 rows ordered by concept, then method.
ErrorTable baseline_report(std::span<const ema::ClientSplit> splits, const ema::ConceptCatalog& catalog,
                           int horizon_days);

}  // namespace tcnsearch::baselines
