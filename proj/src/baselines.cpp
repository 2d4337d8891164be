#include "tcnsearch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "tcnsearch/error.hpp"

namespace tcnsearch::baselines {

std::string_view method_id(Method m) {
  switch (m) {
    case Method::Mean:
      return "mean";
    case Method::Regression:
      return "ols_trend";
    case Method::Dlm:
      return "dlm_local_level";
  }
  return "unknown";
}

namespace {

void check_horizon(int horizon_days) {
  if (horizon_days < 1) throw ContractViolation("baseline horizon must be >= 1 day");
}

BaselinePrediction constant_prediction(Method m, const tcn::StateVector& value, int horizon_days) {
  return BaselinePrediction{m, std::vector<tcn::StateVector>(static_cast<std::size_t>(horizon_days), value)};
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

BaselinePrediction mean_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days) {
  check_horizon(horizon_days);
  tcn::StateVector v(concepts, 0.5);
  for (std::size_t j = 0; j < concepts; ++j)
    if (auto m = train.mean_value(j)) v[j] = *m;
  return constant_prediction(Method::Mean, v, horizon_days);
}

std::optional<LinearTrend> fit_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("fit_trend: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  return LinearTrend{my - slope * mx, slope};
}

BaselinePrediction regression_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days) {
  auto out = mean_predictor(train, concepts, horizon_days);
  out.method = Method::Regression;
  std::vector<double> x, y;
  for (std::size_t j = 0; j < concepts; ++j) {
    x.clear();
    y.clear();
    for (const auto& o : train.observations)
      if (o.values[j]) {
        x.push_back(o.day);
        y.push_back(*o.values[j]);
      }
    auto trend = fit_trend(x, y);
    if (!trend) continue;
    for (int h = 0; h < horizon_days; ++h)
      out.states[static_cast<std::size_t>(h)][j] = clamp01(trend->at(static_cast<double>(train.end_day() + h)));
  }
  return out;
}

std::vector<ema::Rating> concept_series(const ema::SeriesWindow& window, std::size_t concept_idx) {
  std::vector<ema::Rating> s(static_cast<std::size_t>(std::max(window.length, 0)));
  for (const auto& o : window.observations) {
    const long idx = static_cast<long>(o.day) - window.first_day;
    if (idx >= 0 && idx < static_cast<long>(s.size())) s[static_cast<std::size_t>(idx)] = o.values[concept_idx];
  }
  return s;
}

LocalLevelFilter run_local_level_filter(std::span<const ema::Rating> series, const LocalLevelVariances& v) {
  if (!(v.level > 0.0) || !(v.observation > 0.0)) throw ContractViolation("local level variances must be positive");
  auto first = std::find_if(series.begin(), series.end(), [](const ema::Rating& r) { return r.has_value(); });
  if (first == series.end()) throw ContractViolation("local level filter needs at least one observation");
  LocalLevelFilter f;
  double a = **first;
  double p = v.observation;
  f.level.push_back(a);
  f.variance.push_back(p);
  f.observed.push_back(true);
  for (auto it = first + 1; it != series.end(); ++it) {
    const double a_pred = a;
    const double p_pred = p + v.level;
    if (*it) {
      const double y = **it;
      const double fvar = p_pred + v.observation;
      const double innov = y - a_pred;
      f.log_likelihood += -0.5 * (std::log(2.0 * std::numbers::pi * fvar) + innov * innov / fvar);
      f.one_step_prediction.push_back(a_pred);
      f.one_step_observed.push_back(y);
      const double gain = p_pred / fvar;
      a = a_pred + gain * innov;
      p = p_pred * v.observation / fvar;
    } else {
      a = a_pred;
      p = p_pred;
    }
    f.level.push_back(a);
    f.variance.push_back(p);
    f.observed.push_back(it->has_value());
  }
  f.final_level = a;
  return f;
}

std::array<double, 8> variance_grid() {
  std::array<double, 8> g{};
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(10.0, -5.0 + 4.0 * static_cast<double>(i) / 7.0);
  return g;
}

LocalLevelVariances select_local_level_variances(std::span<const ema::Rating> series) {
  const auto grid = variance_grid();
  LocalLevelVariances best{grid.front(), grid.front()};
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double q : grid)
    for (double r : grid) {
      const double ll = run_local_level_filter(series, {q, r}).log_likelihood;
      if (ll > best_ll) {
        best_ll = ll;
        best = {q, r};
      }
    }
  return best;
}

BaselinePrediction dlm_predictor(const ema::SeriesWindow& train, std::size_t concepts, int horizon_days) {
  auto out = mean_predictor(train, concepts, horizon_days);
  out.method = Method::Dlm;
  for (std::size_t j = 0; j < concepts; ++j) {
    if (train.present_count(j) < 3) continue;
    const auto series = concept_series(train, j);
    const auto vars = select_local_level_variances(series);
    const double level = clamp01(run_local_level_filter(series, vars).final_level);
    for (auto& s : out.states) s[j] = level;
  }
  return out;
}

BaselinePrediction run_baseline(Method m, const ema::SeriesWindow& train, std::size_t concepts, int horizon_days) {
  switch (m) {
    case Method::Mean:
      return mean_predictor(train, concepts, horizon_days);
    case Method::Regression:
      return regression_predictor(train, concepts, horizon_days);
    case Method::Dlm:
      return dlm_predictor(train, concepts, horizon_days);
  }
  throw ContractViolation("unknown baseline method");
}

const ErrorRow* ErrorTable::find(std::size_t concept_idx, std::string_view method) const {
  for (const auto& r : rows)
    if (r.concept_idx == concept_idx && r.method == method) return &r;
  return nullptr;
}

ErrorRow aggregate_errors(std::size_t concept_idx, std::string method, std::span<const double> per_client) {
  ErrorRow row{concept_idx, std::move(method), kUnscorable, 0.0, 0};
  double sum = 0.0;
  for (double e : per_client)
    if (!std::isnan(e)) {
      sum += e;
      ++row.n_scorable;
    }
  if (row.n_scorable == 0) return row;
  row.mse_mean = sum / static_cast<double>(row.n_scorable);
  if (row.n_scorable > 1) {
    double ss = 0.0;
    for (double e : per_client)
      if (!std::isnan(e)) ss += (e - row.mse_mean) * (e - row.mse_mean);
    row.mse_sd = std::sqrt(ss / static_cast<double>(row.n_scorable - 1));
  }
  return row;
}

namespace {
std::string number(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.10g}", v);
}
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  return q + "\"";
}
}  // namespace

void write_error_csv(std::ostream& out, const ErrorTable& table) {
  out << "concept,method,mse_mean,mse_sd,n_scorable\n";
  for (const auto& r : table.rows)
    out << csv_field(table.concepts.at(r.concept_idx)) << ',' << r.method << ',' << number(r.mse_mean) << ','
        << number(r.mse_sd) << ',' << r.n_scorable << '\n';
}

std::string format_error_summary(const ErrorTable& table) {
  std::string out = fmt::format("{:<20} {:<16} {:>12} {:>12} {:>4}\n", "concept", "method", "mse_mean", "mse_sd", "n");
  std::size_t last = static_cast<std::size_t>(-1);
  for (const auto& r : table.rows) {
    if (r.concept_idx != last && last != static_cast<std::size_t>(-1)) out += "\n";
    last = r.concept_idx;
    out += fmt::format("{:<20} {:<16} {:>12} {:>12} {:>4}\n", table.concepts.at(r.concept_idx), r.method,
                       std::isnan(r.mse_mean) ? std::string("n/a") : fmt::format("{:.6f}", r.mse_mean),
                       fmt::format("{:.6f}", r.mse_sd), r.n_scorable);
  }
  return out;
}

ema::SeriesWindow head(const ema::SeriesWindow& w, int days) {
  ema::SeriesWindow out{w.client_id, w.first_day, std::min(w.length, days), {}};
  for (const auto& o : w.observations)
    if (o.day < out.end_day()) out.observations.push_back(o);
  return out;
}

ErrorTable baseline_report(std::span<const ema::ClientSplit> splits, const ema::ConceptCatalog& catalog,
                           int horizon_days) {
  check_horizon(horizon_days);
  const std::size_t k = catalog.size();
  ErrorTable table{catalog.names(), {}};
  // errors[method][concept][client]
  std::vector<std::vector<std::vector<double>>> errors(kAllMethods.size(), std::vector<std::vector<double>>(k));
  for (const auto& split : splits) {
    if (split.validation.length < 1) throw ContractViolation("baseline_report: empty validation window");
    const auto fit_window = split.train_and_test();
    const auto scored = head(split.validation, horizon_days);
    for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
      const auto pred = run_baseline(kAllMethods[m], fit_window, k, scored.length);
      const auto err = tcn::score(pred.states, scored);
      for (std::size_t j = 0; j < k; ++j) errors[m][j].push_back(err[j]);
    }
  }
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t m = 0; m < kAllMethods.size(); ++m)
      table.rows.push_back(aggregate_errors(j, std::string(method_id(kAllMethods[m])), errors[m][j]));
  return table;
}

}  // namespace tcnsearch::baselines
