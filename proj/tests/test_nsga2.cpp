#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <doctest.h>

#include "tcnsearch/error.hpp"
#include "tcnsearch/nsga2.hpp"

using namespace tcnsearch;
using namespace tcnsearch::nsga2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<ObjectiveVector> random_points(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<ObjectiveVector> pts(n, ObjectiveVector(m));
  for (auto& p : pts)
    for (auto& v : p) v = uniform01(rng);
  return pts;
}

// Repeatedly peel off the members no remaining member dominates.
std::vector<std::vector<std::size_t>> brute_force_fronts(const std::vector<ObjectiveVector>& pts) {
  auto dom = [](const ObjectiveVector& a, const ObjectiveVector& b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > b[i]) return false;
      strict |= a[i] < b[i];
    }
    return strict;
  };
  std::vector<std::vector<std::size_t>> fronts;
  std::set<std::size_t> left;
  for (std::size_t i = 0; i < pts.size(); ++i) left.insert(i);
  while (!left.empty()) {
    std::vector<std::size_t> f;
    for (auto i : left) {
      bool dominated = false;
      for (auto j : left) dominated |= dom(pts[j], pts[i]);
      if (!dominated) f.push_back(i);
    }
    for (auto i : f) left.erase(i);
    fronts.push_back(f);
  }
  return fronts;
}

struct Ranked {
  std::size_t rank;
  double crowding;
};

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates(ObjectiveVector{0.1, 0.2}, ObjectiveVector{0.2, 0.3}));
  CHECK_FALSE(dominates(ObjectiveVector{0.1, 0.2}, ObjectiveVector{0.1, 0.2}));
  CHECK_FALSE(dominates(ObjectiveVector{0.1, 0.9}, ObjectiveVector{0.9, 0.1}));
  CHECK(dominates(ObjectiveVector{0.1, 0.2}, ObjectiveVector{0.1, 0.3}));
  CHECK_THROWS_AS(dominates(ObjectiveVector{0.1}, ObjectiveVector{0.1, 0.2}), ContractViolation);
  // unscorable dimensions are ignored
  CHECK(dominates(ObjectiveVector{0.1, kUnscorable}, ObjectiveVector{0.2, 0.0}));
  CHECK_FALSE(dominates(ObjectiveVector{kUnscorable, kUnscorable}, ObjectiveVector{0.2, 0.0}));
  CHECK(dominates(ObjectiveVector{0.5, 0.5}, ObjectiveVector{kWorstObjective, 0.5}));

  Rng rng(1);
  for (int t = 0; t < 20000; ++t) {
    // coarse values so that ties are common
    auto draw = [&] {
      ObjectiveVector v(3);
      for (auto& x : v) x = static_cast<double>(rng() % 4);
      return v;
    };
    const auto a = draw(), b = draw(), c = draw();
    CHECK_FALSE(dominates(a, a));
    if (dominates(a, b)) CHECK_FALSE(dominates(b, a));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("fast non-dominated sort") {
  CHECK(fast_nondominated_sort(std::vector<ObjectiveVector>{{1.0, 2.0}}) ==
        std::vector<std::vector<std::size_t>>{{0}});
  const std::vector<ObjectiveVector> four{{1, 4}, {2, 3}, {3, 2}, {5, 5}};
  CHECK(fast_nondominated_sort(four) == std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3}});
  CHECK(fast_nondominated_sort(std::vector<ObjectiveVector>{}).empty());

  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto pts = random_points(200, 3, rng);
    const auto fronts = fast_nondominated_sort(pts);
    CHECK(fronts == brute_force_fronts(pts));
    std::vector<int> seen(pts.size(), 0);
    for (const auto& f : fronts)
      for (auto i : f) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    for (auto i : fronts[0])
      for (std::size_t j = 0; j < pts.size(); ++j) CHECK_FALSE(dominates(pts[j], pts[i]));
  }
}

TEST_CASE("crowding distance") {
  const std::vector<ObjectiveVector> pts{{0, 2}, {1, 1}, {2, 0}};
  const std::vector<std::size_t> all{0, 1, 2};
  const auto d = crowding_distance(pts, all);
  CHECK(d[0] == kInf);
  CHECK(d[1] == doctest::Approx(2.0));
  CHECK(d[2] == kInf);
  CHECK(crowding_distance(pts, std::vector<std::size_t>{1}) == std::vector<double>{kInf});
  CHECK(crowding_distance(pts, std::vector<std::size_t>{0, 2}) == std::vector<double>{kInf, kInf});
  CHECK_THROWS_AS(crowding_distance(pts, std::vector<std::size_t>{}), ContractViolation);

  const std::vector<ObjectiveVector> line{{0, 4}, {1, 3}, {3, 1}, {4, 0}};
  const auto e = crowding_distance(line, std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(e[1] == doctest::Approx(3.0 / 4 + 3.0 / 4));
  CHECK(e[2] == doctest::Approx(3.0 / 4 + 3.0 / 4));
}

TEST_CASE("binary tournament") {
  Rng rng(3);
  std::vector<Ranked> pop{{0, 1.0}, {2, 5.0}, {1, kInf}, {1, 1.3}, {1, 1.3}};
  const std::span<const Ranked> view(pop);
  CHECK(binary_tournament(view, 0, 1, rng) == 0);
  CHECK(binary_tournament(view, 1, 0, rng) == 0);
  CHECK(binary_tournament(view, 2, 3, rng) == 2);
  CHECK(binary_tournament(view, 3, 2, rng) == 2);
  int first = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) first += binary_tournament(view, 3, 4, rng) == 3;
  CHECK(std::abs(first / double(trials) - 0.5) <= 0.05);
  for (int t = 0; t < 100; ++t) CHECK(tournament_select(view, rng) < pop.size());
}

TEST_CASE("real-vector variation") {
  const Bounds bounds{{0, 0, -1}, {1, 1, 1}};
  Rng rng(4);
  GaConfig cfg;
  cfg.crossover_rate = 0;
  cfg.mutation_rate = 0;
  const RealVector a{0.1, 0.9, -0.5}, b{0.7, 0.2, 0.5};
  auto [c1, c2] = real_crossover_mutate(a, b, bounds, cfg, rng);
  CHECK(c1 == a);
  CHECK(c2 == b);

  SUBCASE("mutation at a bound stays in bounds") {
    GaConfig m;
    m.crossover_rate = 0;
    m.mutation_rate = 1;
    const RealVector top{1, 1, 1}, bottom{0, 0, -1};
    for (int t = 0; t < 2000; ++t) {
      auto [x, y] = real_crossover_mutate(top, bottom, bounds, m, rng);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(x[i] >= bounds.lower[i]);
        CHECK(x[i] <= bounds.upper[i]);
        CHECK(y[i] >= bounds.lower[i]);
        CHECK(y[i] <= bounds.upper[i]);
      }
    }
  }
  SUBCASE("SBX children are centred on the parents") {
    GaConfig x;
    x.crossover_rate = 1;
    x.mutation_rate = 0;
    const Bounds wide{{-10}, {10}};
    const RealVector p{0.3}, q{0.7};
    double sum = 0;
    const int n = 50000;
    for (int t = 0; t < n; ++t) {
      auto [u, v] = real_crossover_mutate(p, q, wide, x, rng);
      sum += u[0] + v[0];
      CHECK(u[0] + v[0] == doctest::Approx(1.0));
    }
    CHECK(std::abs(sum / (2.0 * n) - 0.5) <= 0.02 * 0.5);
  }
}

TEST_CASE("structure-matrix variation") {
  Rng rng(5);
  const StructureEncoding enc{7, 0.3};
  const auto a = enc.random(rng), b = enc.random(rng);
  CHECK(enc.valid(a));

  GaConfig none;
  none.crossover_rate = 0;
  none.bit_flip_rate = 0;
  none.mutation_rate = 0;
  auto [c1, c2] = matrix_crossover_mutate(a, b, none, rng);
  CHECK(c1 == a);
  CHECK(c2 == b);

  auto x = a, y = b;
  swap_block(x, y, BlockRect{0, 7, 0, 7});
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(x.edge(i, j) == b.edge(i, j));
      CHECK(y.edge(i, j) == a.edge(i, j));
    }
  CHECK(enc.valid(x));
  CHECK(enc.valid(y));

  GaConfig flip = none;
  flip.bit_flip_rate = 1;
  auto [f1, f2] = matrix_crossover_mutate(a, b, flip, rng);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      if (i == j) CHECK_FALSE(f1.edge(i, j));
      else CHECK(f1.edge(i, j) == !a.edge(i, j));
    }

  for (int t = 0; t < 1000; ++t) {
    const auto r = random_block(7, rng);
    CHECK(r.row_begin < r.row_end);
    CHECK(r.col_begin < r.col_end);
    CHECK(r.row_end <= 7);
    CHECK(r.col_end <= 7);
    auto [u, v] = matrix_crossover_mutate(a, b, GaConfig{}, rng);
    CHECK(enc.valid(u));
    CHECK(enc.valid(v));
  }
}

TEST_CASE("evolve") {
  SUBCASE("constant objectives keep everyone on the front") {
    GaConfig cfg;
    cfg.population_size = 4;
    cfg.generations = 1;
    const RealEncoding enc{{{0.0}, {1.0}}};
    auto res = evolve(enc, per_genome<RealVector>([](const RealVector&) { return ObjectiveVector{1.0, 1.0}; }), cfg);
    CHECK(res.front.size() == 4);
    CHECK(res.trace.size() == 1);
  }
  SUBCASE("two-sphere problem converges to the Pareto set") {
    GaConfig cfg;
    cfg.population_size = 40;
    cfg.generations = 50;
    cfg.seed = 7;
    const RealEncoding enc{{{-5.0}, {5.0}}};
    auto f = [](const RealVector& x) { return ObjectiveVector{x[0] * x[0], (x[0] - 1) * (x[0] - 1)}; };
    auto res = evolve(enc, per_genome<RealVector>(f), cfg);
    for (auto i : res.front) {
      CHECK(res.population[i].genome[0] >= -0.05);
      CHECK(res.population[i].genome[0] <= 1.05);
    }
    auto again = evolve(enc, per_genome<RealVector>(f), cfg);
    REQUIRE(again.population.size() == res.population.size());
    for (std::size_t i = 0; i < res.population.size(); ++i) {
      CHECK(again.population[i].genome == res.population[i].genome);
      CHECK(again.population[i].objectives == res.population[i].objectives);
    }
    auto parallel = evolve(enc, per_genome<RealVector>(f, 4), cfg);
    for (std::size_t i = 0; i < res.population.size(); ++i)
      CHECK(parallel.population[i].genome == res.population[i].genome);
  }
  SUBCASE("failed evaluations get the worst objectives and are counted") {
    GaConfig cfg;
    cfg.population_size = 20;
    cfg.generations = 5;
    const RealEncoding enc{{{0.0, 0.0}, {1.0, 1.0}}};
    auto f = [](const RealVector& x) -> ObjectiveVector {
      if (x[0] > 0.8) throw std::runtime_error("boom");
      return {x[0], 1 - x[0] + x[1]};
    };
    std::size_t flagged = 0;
    auto res = evolve(enc, per_genome<RealVector>(f), cfg,
                      [&](std::size_t, std::span<const Individual<RealVector>> pop) {
                        for (const auto& ind : pop)
                          if (ind.failed) {
                            ++flagged;
                            CHECK(ind.objectives == ObjectiveVector{kWorstObjective, kWorstObjective});
                          }
                      });
    CHECK(res.failed_evaluations > 0);
    CHECK(flagged > 0);
    for (auto i : res.front) CHECK_FALSE(res.population[i].failed);
  }
  SUBCASE("elitism and encoding constraints on structure genomes") {
    GaConfig cfg;
    cfg.population_size = 24;
    cfg.generations = 20;
    cfg.seed = 3;
    const StructureEncoding enc{5, 0.3};
    // two conflicting objectives over the adjacency bits
    auto f = [](const StructureGenome& g) {
      double upper = 0, lower = 0;
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
          if (g.edge(i, j)) (i < j ? upper : lower) += 1 + 0.1 * static_cast<double>(i + j);
      return ObjectiveVector{10 - upper + 0.3 * lower, 10 - lower + 0.2 * upper};
    };
    std::vector<ObjectiveVector> previous;
    bool all_valid = true;
    auto res = evolve(enc, per_genome<StructureGenome>(f), cfg,
                      [&](std::size_t, std::span<const Individual<StructureGenome>> pop) {
                        std::vector<ObjectiveVector> objs;
                        for (const auto& ind : pop) {
                          all_valid &= enc.valid(ind.genome);
                          if (ind.rank == 0) objs.push_back(ind.objectives);
                        }
                        // front 0 holds fewer members than the population: no truncation,
                        // so every old front-0 point is weakly dominated by a new one
                        if (objs.size() < pop.size())
                          for (const auto& old : previous) {
                            bool covered = false;
                            for (const auto& now : objs) covered |= now == old || dominates(now, old);
                            CHECK(covered);
                          }
                        previous = objs;
                      });
    CHECK(all_valid);
    CHECK_FALSE(res.front.empty());
  }
}

TEST_CASE("configuration checks") {
  GaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.population_size = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = GaConfig{};
  cfg.crossover_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = GaConfig{};
  cfg.generations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(GaConfig::stage_one_defaults().population_size == 24);
  CHECK(GaConfig::stage_one_defaults().generations == 30);
  CHECK(GaConfig::stage_two_defaults().population_size == 20);
  CHECK(GaConfig::stage_two_defaults().generations == 25);
}
