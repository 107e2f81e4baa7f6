#pragma once

// Monte Carlo simulation of the Markov chain x_{t+1} = T_{k_t}(x_t),
// P(k_t = k | x_t) = p_k(x_t), and estimators built on its orbits.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/rng.hpp"

namespace acimlab {

using Symbol = std::uint8_t;  // 0-based map index

struct OrbitRecord {
  std::vector<double> states;   // steps + 1 entries, states[0] = x0
  std::vector<Symbol> symbols;  // steps entries
  std::uint64_t seed = 0;

  std::size_t steps() const { return symbols.size(); }
  friend bool operator==(const OrbitRecord&, const OrbitRecord&) = default;
};

/// Index k with u in [Σ_{i<k} p_i(x), Σ_{i<=k} p_i(x)). Maps with zero
/// probability are never returned, even when rounding leaves u past the sum.
inline Symbol select_map(const RandomMapSystem& sys, double x, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    const double p = sys.prob(k, x);
    if (p <= 0.0) continue;
    last_positive = k;
    acc += p;
    if (u < acc) return static_cast<Symbol>(k);
  }
  return static_cast<Symbol>(last_positive);
}

/// Runs `steps` transitions from x0. Draw t uses counter `first_draw + t` of
/// the (seed, stream 0) generator, so a chain restarted at step t with
/// first_draw = t continues identically.
inline OrbitRecord simulate(const RandomMapSystem& sys, double x0, std::size_t steps,
                            std::uint64_t seed, std::uint64_t first_draw = 0) {
  require_unit_interval(x0, "simulate");
  if (steps == 0) throw ConfigError("simulate needs steps >= 1");
  if (sys.size() > 256) throw ConfigError("orbit symbols support at most 256 maps");
  const CounterRng rng(seed);
  OrbitRecord rec;
  rec.seed = seed;
  rec.states.resize(steps + 1);
  rec.symbols.resize(steps);
  double x = x0;
  rec.states[0] = x;
  for (std::size_t t = 0; t < steps; ++t) {
    const Symbol k = select_map(sys, x, rng.uniform_at(first_draw + t));
    x = sys.map(k)(x);
    rec.symbols[t] = k;
    rec.states[t + 1] = x;
  }
  return rec;
}

/// States obtained by applying the given symbol sequence from x0.
inline std::vector<double> replay(const RandomMapSystem& sys, double x0,
                                  const std::vector<Symbol>& symbols) {
  std::vector<double> xs{x0};
  xs.reserve(symbols.size() + 1);
  for (Symbol k : symbols) xs.push_back(sys.map(k)(xs.back()));
  return xs;
}

/// Raw cell counts; merging is plain addition so chain order never matters.
struct HistogramCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  explicit HistogramCounts(std::size_t n = 0) : counts(n, 0) {}

  void add(double x) {
    const auto n = counts.size();
    const double s = x * static_cast<double>(n);
    const std::size_t c = s > 0.0 ? std::min(static_cast<std::size_t>(s), n - 1) : 0;
    ++counts[c];
    ++total;
  }
  void merge(const HistogramCounts& other) {
    if (other.counts.size() != counts.size()) throw std::invalid_argument("histogram size mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total += other.total;
  }
  GridFunction density() const {
    if (total == 0) throw std::invalid_argument("empty histogram");
    GridFunction g(counts.size());
    const double scale = static_cast<double>(counts.size()) / static_cast<double>(total);
    for (std::size_t i = 0; i < counts.size(); ++i) g[i] = static_cast<double>(counts[i]) * scale;
    return g;
  }
};

inline std::size_t default_burn_in(std::size_t steps) { return steps / 100; }

/// Normalized histogram of states[burn_in..].
inline GridFunction empirical_density(const OrbitRecord& orbit, std::size_t n_cells,
                                      std::size_t burn_in) {
  if (n_cells == 0) throw ConfigError("empirical_density needs n_cells >= 1");
  if (burn_in >= orbit.states.size()) {
    throw std::invalid_argument("burn-in leaves no samples");
  }
  HistogramCounts h(n_cells);
  for (std::size_t t = burn_in; t < orbit.states.size(); ++t) h.add(orbit.states[t]);
  return h.density();
}

template <typename Observable>
double birkhoff_average(const OrbitRecord& orbit, Observable&& observable, std::size_t burn_in) {
  if (burn_in >= orbit.states.size()) throw std::invalid_argument("burn-in leaves no samples");
  double s = 0.0;
  for (std::size_t t = burn_in; t < orbit.states.size(); ++t) s += observable(orbit.states[t]);
  return s / static_cast<double>(orbit.states.size() - burn_in);
}

/// Streaming histogram of one chain on generator stream `stream`, without
/// storing the orbit.
inline HistogramCounts chain_histogram(const RandomMapSystem& sys, double x0, std::size_t steps,
                                       std::uint64_t seed, std::uint64_t stream,
                                       std::size_t n_cells, std::size_t burn_in) {
  require_unit_interval(x0, "chain_histogram");
  const CounterRng rng(seed, stream);
  HistogramCounts h(n_cells);
  double x = x0;
  if (burn_in == 0) h.add(x);
  for (std::size_t t = 0; t < steps; ++t) {
    x = sys.map(select_map(sys, x, rng.uniform_at(t)))(x);
    if (t + 1 >= burn_in) h.add(x);
  }
  return h;
}

/// Independent chains on streams 0..chains-1, run on up to `threads`
/// threads; counts are summed afterwards.
inline HistogramCounts parallel_chains(const RandomMapSystem& sys, double x0, std::size_t steps,
                                       std::uint64_t seed, std::size_t chains, std::size_t n_cells,
                                       std::size_t burn_in, unsigned threads = 1) {
  std::vector<HistogramCounts> per(chains, HistogramCounts(n_cells));
  threads = std::max(1u, threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t c = t; c < chains; c += threads) {
        per[c] = chain_histogram(sys, x0, steps, seed, c, n_cells, burn_in);
      }
    });
  }
  for (auto& th : pool) th.join();
  HistogramCounts total(n_cells);
  for (const auto& h : per) total.merge(h);
  return total;
}

}  // namespace acimlab
