#include "tcnsearch/nsga2.hpp"

#include <numeric>

#include <fmt/format.h>

namespace tcnsearch::nsga2 {

namespace {
bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }
}  // namespace

void GaConfig::validate() const {
  if (population_size < 4 || population_size % 2 != 0)
    throw ConfigError(fmt::format("population_size must be even and >= 4 (got {})", population_size));
  if (generations < 1) throw ConfigError("generations must be >= 1");
  if (!is_probability(crossover_rate)) throw ConfigError("crossover_rate must be in [0,1]");
  if (mutation_rate && !is_probability(*mutation_rate)) throw ConfigError("mutation_rate must be in [0,1]");
  if (!is_probability(block_swap_rate)) throw ConfigError("block_swap_rate must be in [0,1]");
  if (bit_flip_rate && !is_probability(*bit_flip_rate)) throw ConfigError("bit_flip_rate must be in [0,1]");
  if (!(sbx_eta > 0.0) || !(polynomial_eta > 0.0)) throw ConfigError("distribution indices must be positive");
}

GaConfig GaConfig::stage_one_defaults() {
  GaConfig c;
  c.population_size = 24;
  c.generations = 30;
  return c;
}

GaConfig GaConfig::stage_two_defaults() {
  GaConfig c;
  c.population_size = 20;
  c.generations = 25;
  return c;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("dominates: objective vectors differ in length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectiveVector> objectives) {
  const std::size_t n = objectives.size();
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(objectives[p], objectives[q])) {
        dominated_by_me[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(objectives[q], objectives[p])) {
        dominated_by_me[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (domination_count[p] == 0) current.push_back(p);
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto p : current)
      for (auto q : dominated_by_me[p])
        if (--domination_count[q] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> objectives, std::span<const std::size_t> front) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = front.size();
  if (n == 0) throw ContractViolation("crowding_distance: empty front");
  std::vector<double> dist(n, 0.0);
  if (n <= 2) return std::vector<double>(n, inf);
  const std::size_t m = objectives[front[0]].size();
  std::vector<std::size_t> order(n);
  for (std::size_t obj = 0; obj < m; ++obj) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    bool any_nan = false;
    for (auto i : order) any_nan |= std::isnan(objectives[front[i]][obj]);
    if (any_nan) continue;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return objectives[front[x]][obj] < objectives[front[y]][obj]; });
    const double lo = objectives[front[order.front()]][obj];
    const double hi = objectives[front[order.back()]][obj];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = hi - lo;
    if (!(range > 0.0) || !std::isfinite(range)) continue;
    for (std::size_t r = 1; r + 1 < n; ++r) {
      const double gap = objectives[front[order[r + 1]]][obj] - objectives[front[order[r - 1]]][obj];
      if (std::isfinite(gap)) dist[order[r]] += gap / range;
    }
  }
  return dist;
}

std::pair<RealVector, RealVector> real_crossover_mutate(const RealVector& a, const RealVector& b, const Bounds& bounds,
                                                        const GaConfig& cfg, Rng& rng) {
  const std::size_t n = bounds.size();
  if (a.size() != n || b.size() != n || bounds.upper.size() != n)
    throw ContractViolation("real_crossover_mutate: genome and bounds lengths differ");
  RealVector c1 = a, c2 = b;
  const double sbx_pow = 1.0 / (cfg.sbx_eta + 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!bernoulli(rng, cfg.crossover_rate)) continue;
    const double u = uniform01(rng);
    const bool swap = bernoulli(rng, 0.5);
    if (std::abs(a[i] - b[i]) <= 1e-14) continue;
    const double beta = u <= 0.5 ? std::pow(2.0 * u, sbx_pow) : std::pow(1.0 / (2.0 * (1.0 - u)), sbx_pow);
    double x = 0.5 * ((1.0 + beta) * a[i] + (1.0 - beta) * b[i]);
    double y = 0.5 * ((1.0 - beta) * a[i] + (1.0 + beta) * b[i]);
    if (swap) std::swap(x, y);
    c1[i] = x;
    c2[i] = y;
  }
  const double pm = cfg.mutation_rate.value_or(n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  const double mut_pow = 1.0 / (cfg.polynomial_eta + 1.0);
  auto mutate = [&](RealVector& c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = bounds.lower[i], hi = bounds.upper[i];
      if (bernoulli(rng, pm) && hi > lo) {
        const double y = std::clamp(c[i], lo, hi);
        const double d1 = (y - lo) / (hi - lo);
        const double d2 = (hi - y) / (hi - lo);
        const double u = uniform01(rng);
        double dq;
        if (u < 0.5) {
          const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, cfg.polynomial_eta + 1.0);
          dq = std::pow(val, mut_pow) - 1.0;
        } else {
          const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, cfg.polynomial_eta + 1.0);
          dq = 1.0 - std::pow(val, mut_pow);
        }
        c[i] = y + dq * (hi - lo);
      }
      c[i] = std::clamp(c[i], lo, hi);
    }
  };
  mutate(c1);
  mutate(c2);
  return {std::move(c1), std::move(c2)};
}

RealEncoding::Genome RealEncoding::random(Rng& rng) const {
  Genome g(bounds.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = bounds.lower[i] + uniform01(rng) * (bounds.upper[i] - bounds.lower[i]);
  return g;
}

bool RealEncoding::valid(const Genome& g) const {
  if (g.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(g[i] >= bounds.lower[i] && g[i] <= bounds.upper[i])) return false;
  return true;
}

void swap_block(StructureGenome& a, StructureGenome& b, const BlockRect& rect) {
  if (a.size() != b.size()) throw ContractViolation("swap_block: genomes differ in size");
  if (rect.row_end > a.size() || rect.col_end > a.size()) throw ContractViolation("swap_block: rectangle out of range");
  for (std::size_t r = rect.row_begin; r < rect.row_end; ++r)
    for (std::size_t c = rect.col_begin; c < rect.col_end; ++c) {
      if (r == c) continue;
      const bool x = a.edge(r, c), y = b.edge(r, c);
      a.set_edge(r, c, y);
      b.set_edge(r, c, x);
    }
}

BlockRect random_block(std::size_t concepts, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, concepts - 1);
  auto r1 = pick(rng), r2 = pick(rng), c1 = pick(rng), c2 = pick(rng);
  if (r1 > r2) std::swap(r1, r2);
  if (c1 > c2) std::swap(c1, c2);
  return BlockRect{r1, r2 + 1, c1, c2 + 1};
}

namespace {
tcn::CombiningFunctionId random_combiner(Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, tcn::kCombinerCount - 1);
  return static_cast<tcn::CombiningFunctionId>(pick(rng));
}
}  // namespace

std::pair<StructureGenome, StructureGenome> matrix_crossover_mutate(const StructureGenome& a, const StructureGenome& b,
                                                                    const GaConfig& cfg, Rng& rng) {
  if (a.size() != b.size()) throw ContractViolation("matrix_crossover_mutate: genomes differ in size");
  const std::size_t k = a.size();
  StructureGenome c1 = a, c2 = b;
  if (bernoulli(rng, cfg.crossover_rate)) {
    if (bernoulli(rng, cfg.block_swap_rate)) swap_block(c1, c2, random_block(k, rng));
    for (std::size_t j = 0; j < k; ++j) {
      if (!bernoulli(rng, 0.5)) continue;
      const auto x = c1.combiner(j);
      c1.set_combiner(j, c2.combiner(j));
      c2.set_combiner(j, x);
    }
  }
  const double flip = cfg.bit_flip_rate.value_or(2.0 / static_cast<double>(k * k));
  const double redraw = cfg.mutation_rate.value_or(1.0 / static_cast<double>(k * k));
  for (auto* c : {&c1, &c2}) {
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t col = 0; col < k; ++col)
        if (r != col && bernoulli(rng, flip)) c->set_edge(r, col, !c->edge(r, col));
    for (std::size_t j = 0; j < k; ++j)
      if (bernoulli(rng, redraw)) c->set_combiner(j, random_combiner(rng));
  }
  return {std::move(c1), std::move(c2)};
}

StructureEncoding::Genome StructureEncoding::random(Rng& rng) const {
  Genome g(concepts);
  for (std::size_t r = 0; r < concepts; ++r)
    for (std::size_t c = 0; c < concepts; ++c)
      if (r != c && bernoulli(rng, initial_edge_density)) g.set_edge(r, c, true);
  for (std::size_t j = 0; j < concepts; ++j) g.set_combiner(j, random_combiner(rng));
  return g;
}

bool StructureEncoding::valid(const Genome& g) const {
  if (g.size() != concepts) return false;
  for (std::size_t j = 0; j < concepts; ++j)
    if (g.edge(j, j)) return false;
  return true;
}

namespace detail {

GenerationStats population_stats(std::size_t generation, std::span<const ObjectiveVector> objectives) {
  GenerationStats s{generation, {}, {}};
  if (objectives.empty()) return s;
  const std::size_t m = objectives.front().size();
  s.best.assign(m, kUnscorable);
  s.median.assign(m, kUnscorable);
  std::vector<double> vals;
  for (std::size_t j = 0; j < m; ++j) {
    vals.clear();
    for (const auto& o : objectives)
      if (!std::isnan(o[j])) vals.push_back(o[j]);
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    s.best[j] = vals.front();
    const std::size_t h = vals.size() / 2;
    s.median[j] = vals.size() % 2 ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
  }
  return s;
}

Survivors select_survivors(std::span<const ObjectiveVector> objectives, std::size_t n) {
  Survivors out;
  const auto fronts = fast_nondominated_sort(objectives);
  for (std::size_t f = 0; f < fronts.size() && out.index.size() < n; ++f) {
    const auto& front = fronts[f];
    const auto dist = crowding_distance(objectives, front);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (out.index.size() + front.size() > n)
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return dist[x] > dist[y]; });
    for (auto o : order) {
      if (out.index.size() == n) break;
      out.index.push_back(front[o]);
      out.rank.push_back(f);
      out.crowding.push_back(dist[o]);
    }
  }
  return out;
}

}  // namespace detail

}  // namespace tcnsearch::nsga2
