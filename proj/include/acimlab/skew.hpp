#pragma once

// Skew product S(x, w) = (T_k(x), φ_{k,x}(w)) on the unit square, with
// φ_{1,x}(w) = w / p_1(x) on [0, p_1(x)) and
// φ_{2,x}(w) = (w - p_1(x)) / p_2(x) on [p_1(x), 1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/orbits.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/transfer.hpp"

namespace acimlab {

struct SkewState {
  double x;
  double w;

  friend bool operator==(const SkewState&, const SkewState&) = default;
};

struct SkewStep {
  SkewState next;
  Symbol branch;
};

inline void require_two_maps(const RandomMapSystem& sys) {
  if (sys.size() != 2) throw ConfigError("skew product is defined for K = 2");
}

inline SkewStep skew_step_with_branch(const RandomMapSystem& sys, SkewState s) {
  require_two_maps(sys);
  require_unit_interval(s.x, "skew_step x");
  require_unit_interval(s.w, "skew_step w");
  const double p1 = sys.prob(0, s.x);
  if (s.w < p1) return {{sys.map(0)(s.x), s.w / p1}, 0};
  const double p2 = sys.prob(1, s.x);
  if (!(p2 > 0.0)) {
    throw std::domain_error("skew_step: p_2(x) = 0 on the selected fiber branch");
  }
  return {{sys.map(1)(s.x), std::clamp((s.w - p1) / p2, 0.0, 1.0)}, 1};
}

inline SkewState skew_step(const RandomMapSystem& sys, SkewState s) {
  return skew_step_with_branch(sys, s).next;
}

struct SkewOrbit {
  std::vector<SkewState> states;  // steps + 1
  std::vector<Symbol> symbols;    // branch that fired at each step
};

inline SkewOrbit skew_orbit(const RandomMapSystem& sys, SkewState s0, std::size_t steps) {
  SkewOrbit o;
  o.states.reserve(steps + 1);
  o.symbols.reserve(steps);
  o.states.push_back(s0);
  for (std::size_t t = 0; t < steps; ++t) {
    const SkewStep st = skew_step_with_branch(sys, o.states.back());
    o.states.push_back(st.next);
    o.symbols.push_back(st.branch);
  }
  return o;
}

/// Skew state with a uniformly drawn fiber coordinate.
inline SkewState random_fiber_start(double x0, std::uint64_t seed) {
  return {x0, CounterRng(seed, 51).uniform_at(0)};
}

/// Histogram of the x-coordinate along a skew orbit (states after burn_in).
inline HistogramCounts skew_marginal_histogram(const RandomMapSystem& sys, SkewState s0,
                                               std::size_t steps, std::size_t n_cells,
                                               std::size_t burn_in) {
  HistogramCounts h(n_cells);
  SkewState s = s0;
  if (burn_in == 0) h.add(s.x);
  for (std::size_t t = 0; t < steps; ++t) {
    s = skew_step(sys, s);
    if (t + 1 >= burn_in) h.add(s.x);
  }
  return h;
}

/// Row-major n×n density of the skew orbit on the unit square (x major).
inline std::vector<double> skew_histogram_2d(const RandomMapSystem& sys, SkewState s0,
                                             std::size_t steps, std::size_t n,
                                             std::size_t burn_in) {
  std::vector<std::uint64_t> counts(n * n, 0);
  std::uint64_t total = 0;
  auto cell = [n](double v) {
    const double s = v * static_cast<double>(n);
    return s > 0.0 ? std::min(static_cast<std::size_t>(s), n - 1) : std::size_t{0};
  };
  SkewState s = s0;
  for (std::size_t t = 0; t <= steps; ++t) {
    if (t >= burn_in) {
      ++counts[cell(s.x) * n + cell(s.w)];
      ++total;
    }
    if (t < steps) s = skew_step(sys, s);
  }
  std::vector<double> dens(n * n);
  const double scale = static_cast<double>(n * n) / static_cast<double>(std::max<std::uint64_t>(total, 1));
  for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = static_cast<double>(counts[i]) * scale;
  return dens;
}

struct MarginalReport {
  double distance;
  GridFunction empirical;
  GridFunction ulam;
};

/// L¹ distance between the x-marginal of a long skew orbit (1% burn-in) and
/// the Ulam stationary density of the underlying random map.
inline MarginalReport marginal_consistency(const RandomMapSystem& sys, SkewState s0,
                                           std::size_t steps, std::size_t n_cells,
                                           const TransferConfig& cfg = {}) {
  require_two_maps(sys);
  if (!(check_condition_B(sys, 1024) > 0.0)) {
    throw ConfigError("marginal_consistency requires inf p_k > 0");
  }
  const auto hist = skew_marginal_histogram(sys, s0, steps, n_cells, default_burn_in(steps));
  auto ulam = stationary_density(build_ulam(sys, n_cells, cfg), cfg);
  MarginalReport rep{0.0, hist.density(), std::move(ulam.density)};
  rep.distance = l1_distance(rep.empirical, rep.ulam);
  return rep;
}

/// (1/steps) Σ_t log T'_{k_t}(x_t) along the skew orbit from s0.
inline double horizontal_lyapunov(const RandomMapSystem& sys, SkewState s0, std::size_t steps) {
  if (steps == 0) throw ConfigError("horizontal_lyapunov needs steps >= 1");
  double sum = 0.0;
  SkewState s = s0;
  for (std::size_t t = 0; t < steps; ++t) {
    const SkewStep st = skew_step_with_branch(sys, s);
    sum += std::log(derivative(sys.map(st.branch), s.x));
    s = st.next;
  }
  return sum / static_cast<double>(steps);
}

}  // namespace acimlab
