#include <cmath>
#include <numeric>
#include <sstream>

#include <doctest.h>

#include "tcnsearch/baselines.hpp"
#include "tcnsearch/error.hpp"
#include "tcnsearch/random.hpp"

using namespace tcnsearch;
using namespace tcnsearch::baselines;

namespace {

// One-concept window; nullopt entries are missing days.
ema::SeriesWindow series_window(int first_day, const std::vector<ema::Rating>& values, std::size_t k = 1) {
  ema::SeriesWindow w{"c", first_day, static_cast<int>(values.size()), {}};
  for (std::size_t d = 0; d < values.size(); ++d) {
    if (!values[d]) continue;
    ema::Observation o{first_day + static_cast<int>(d), std::vector<ema::Rating>(k)};
    o.values[0] = values[d];
    w.observations.push_back(o);
  }
  return w;
}

double train_mse(const std::vector<double>& y, double c) {
  double s = 0;
  for (double v : y) s += (v - c) * (v - c);
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("mean predictor") {
  auto p = mean_predictor(series_window(0, {0.2, std::nullopt, 0.4}, 2), 2, 14);
  REQUIRE(p.states.size() == 14);
  for (const auto& s : p.states) {
    CHECK(s[0] == doctest::Approx(0.3));
    CHECK(s[1] == 0.5);
    CHECK(s == p.states.front());
  }

  Rng rng(10);
  std::normal_distribution<double> step(0.0, 0.01);
  for (int t = 0; t < 1000; ++t) {
    std::vector<ema::Rating> vals;
    std::vector<double> present;
    for (int d = 0; d < 21; ++d) {
      if (bernoulli(rng, 0.3)) {
        vals.emplace_back();
        continue;
      }
      const double v = uniform01(rng);
      vals.emplace_back(v);
      present.push_back(v);
    }
    if (present.empty()) continue;
    const double c = mean_predictor(series_window(0, vals), 1, 1).states[0][0];
    const double base = train_mse(present, c);
    const double delta = step(rng);
    CHECK(train_mse(present, c + delta) >= base - 1e-15);
    CHECK(train_mse(present, c - delta) >= base - 1e-15);
  }
}

TEST_CASE("regression predictor") {
  std::vector<ema::Rating> vals(10);
  vals[0] = 0.0;
  vals[9] = 0.9;
  auto p = regression_predictor(series_window(0, vals), 1, 3);
  CHECK(p.states[0][0] == doctest::Approx(1.0));
  CHECK(p.states[2][0] == 1.0);  // clamped

  auto flat = regression_predictor(series_window(0, {0.5, 0.5, 0.5, 0.5}), 1, 5);
  for (const auto& s : flat.states) CHECK(s[0] == doctest::Approx(0.5));

  const auto single = series_window(0, {std::nullopt, 0.35, std::nullopt});
  CHECK(regression_predictor(single, 1, 4).states == mean_predictor(single, 1, 4).states);

  SUBCASE("residuals are orthogonal to the day index") {
    Rng rng(11);
    for (int t = 0; t < 500; ++t) {
      std::vector<double> x, y;
      for (int d = 0; d < 35; ++d)
        if (bernoulli(rng, 0.8)) {
          x.push_back(d);
          y.push_back(uniform01(rng));
        }
      auto fit = fit_trend(x, y);
      if (!fit) continue;
      double dot = 0, sum = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit->at(x[i]);
        dot += r * x[i];
        sum += r;
      }
      CHECK(std::abs(dot) <= 1e-9);
      CHECK(std::abs(sum) <= 1e-9);
    }
  }
  CHECK_FALSE(fit_trend(std::vector<double>{3, 3}, std::vector<double>{0.1, 0.2}).has_value());
}

TEST_CASE("local level filter") {
  const auto grid = variance_grid();
  CHECK(grid.front() == doctest::Approx(1e-5));
  CHECK(grid.back() == doctest::Approx(1e-1));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] / grid[i - 1] == doctest::Approx(std::pow(10.0, 4.0 / 7)));

  SUBCASE("constant series") {
    std::vector<ema::Rating> vals(21, 0.7);
    auto p = dlm_predictor(series_window(0, vals), 1, 14);
    for (const auto& s : p.states) CHECK(std::abs(s[0] - 0.7) < 1e-6);
  }
  SUBCASE("posterior variance is positive and non-increasing while observed") {
    Rng rng(12);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double q : grid)
      for (double r : grid) {
        std::vector<ema::Rating> vals;
        double level = 0.5;
        for (int d = 0; d < 30; ++d) {
          level += 0.3 * noise(rng);
          vals.emplace_back(std::clamp(level + noise(rng), 0.0, 1.0));
        }
        const auto f = run_local_level_filter(vals, {q, r});
        for (std::size_t i = 0; i < f.variance.size(); ++i) {
          CHECK(f.variance[i] > 0.0);
          if (i > 0) CHECK(f.variance[i] <= f.variance[i - 1] * (1 + 1e-12));
        }
      }
  }
  SUBCASE("missing middle third") {
    std::vector<ema::Rating> vals;
    for (int d = 0; d < 21; ++d) vals.emplace_back(d >= 7 && d < 14 ? std::nullopt : ema::Rating(0.2 + 0.01 * d));
    auto p = dlm_predictor(series_window(0, vals), 1, 7);
    for (const auto& s : p.states) {
      CHECK(std::isfinite(s[0]));
      CHECK(s[0] >= 0.0);
      CHECK(s[0] <= 1.0);
    }
    const auto f = run_local_level_filter(vals, {1e-3, 1e-3});
    for (int d = 7; d < 14; ++d) CHECK(f.variance[d] > f.variance[d - 1]);
  }
  SUBCASE("random walks: one-step filter beats the training mean") {
    Rng rng(13);
    std::normal_distribution<double> noise(0.0, 1.0);
    int wins = 0;
    for (int t = 0; t < 100; ++t) {
      std::vector<ema::Rating> vals;
      double level = 0.5;
      for (int d = 0; d < 35; ++d) {
        level = std::clamp(level + 0.03 * noise(rng), 0.05, 0.95);
        vals.emplace_back(std::clamp(level + 0.01 * noise(rng), 0.0, 1.0));
      }
      const auto f = run_local_level_filter(vals, select_local_level_variances(vals));
      double mean = 0;
      for (const auto& v : vals) mean += *v;
      mean /= static_cast<double>(vals.size());
      double kf = 0, mp = 0;
      for (std::size_t i = 0; i < f.one_step_prediction.size(); ++i) {
        kf += std::pow(f.one_step_prediction[i] - f.one_step_observed[i], 2);
        mp += std::pow(mean - f.one_step_observed[i], 2);
      }
      wins += kf <= mp;
    }
    CHECK(wins >= 95);
  }
  CHECK_THROWS_AS(run_local_level_filter(std::vector<ema::Rating>(3), {1e-3, 1e-3}), ContractViolation);
  // fewer than three observations fall back to the mean
  const auto two = series_window(0, {0.2, std::nullopt, 0.6});
  CHECK(dlm_predictor(two, 1, 2).states == mean_predictor(two, 1, 2).states);
}

TEST_CASE("all baseline predictions lie in [0,1]") {
  Rng rng(14);
  for (int t = 0; t < 300; ++t) {
    std::vector<ema::Rating> vals;
    for (int d = 0; d < 21; ++d) vals.emplace_back(bernoulli(rng, 0.3) ? ema::Rating() : ema::Rating(uniform01(rng)));
    const auto w = series_window(0, vals);
    for (auto m : kAllMethods)
      for (const auto& s : run_baseline(m, w, 1, 14).states) {
        CHECK(s[0] >= 0.0);
        CHECK(s[0] <= 1.0);
      }
  }
}

TEST_CASE("error aggregation and report") {
  auto row = aggregate_errors(2, "mean", std::vector<double>{0.1, kUnscorable, 0.3});
  CHECK(row.n_scorable == 2);
  CHECK(row.mse_mean == doctest::Approx(0.2));
  CHECK(row.mse_sd == doctest::Approx(std::sqrt(0.02)));
  CHECK(std::isnan(aggregate_errors(0, "mean", std::vector<double>{kUnscorable}).mse_mean));

  const ema::ConceptCatalog cat({"A", "B"});
  std::vector<ema::ClientSplit> splits;
  for (int c = 0; c < 3; ++c) {
    std::vector<ema::Observation> obs;
    for (int d = 0; d < 42; ++d) obs.push_back({d, {0.4, 0.8}});
    ema::ClientSeries s("c" + std::to_string(c), obs, 2);
    splits.push_back(ema::split_client(s, {}));
  }
  const auto table = baseline_report(splits, cat, 14);
  REQUIRE(table.rows.size() == 2 * 3);
  for (const auto& r : table.rows) {
    CHECK(r.mse_mean == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(r.n_scorable == 3);
  }
  CHECK(table.rows[0].method == "mean");
  CHECK(table.rows[1].method == "ols_trend");
  CHECK(table.rows[2].method == "dlm_local_level");
  std::ostringstream a, b;
  write_error_csv(a, table);
  write_error_csv(b, baseline_report(splits, cat, 14));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("concept,method,mse_mean,mse_sd,n_scorable\n", 0) == 0);
}
