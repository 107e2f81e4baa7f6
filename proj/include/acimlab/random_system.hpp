#pragma once

// Random maps {T_1..T_K; p_1(x)..p_K(x)} and the sufficient conditions
// (A) and (B) for existence and uniqueness of an ACIM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acimlab/error.hpp"
#include "acimlab/maps.hpp"
#include "acimlab/probability.hpp"

namespace acimlab {

class RandomMapSystem {
 public:
  RandomMapSystem(std::vector<MapSpec> maps, ProbabilityField probs)
      : maps_(std::move(maps)), probs_(std::move(probs)) {
    if (maps_.size() != probs_.size()) {
      throw ConfigError("need one probability component per map");
    }
    // Map 1 carries the largest exponent (0 < beta <= alpha < 1).
    for (std::size_t k = 1; k < maps_.size(); ++k) {
      if (maps_[k].exponent() > maps_[0].exponent()) {
        throw ConfigError("map 1 must carry the largest exponent");
      }
    }
    const auto v = probs_.validate();
    if (!v.ok()) {
      throw ConfigError("probabilities must lie in [0,1] and sum to 1 (max error " +
                        std::to_string(v.max_sum_error) + " near x=" +
                        std::to_string(v.witness.value_or(-1.0)) + ")");
    }
  }

  std::size_t size() const { return maps_.size(); }
  const MapSpec& map(std::size_t k) const { return maps_[k]; }
  const std::vector<MapSpec>& maps() const { return maps_; }
  const ProbabilityField& probs() const { return probs_; }
  double prob(std::size_t k, double x) const { return probs_(k, x); }
  double alpha_max() const { return maps_[0].exponent(); }

  std::string describe() const {
    std::string s = "K=" + std::to_string(maps_.size());
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      s += "; map" + std::to_string(k + 1) + ": " + maps_[k].describe();
      s += "; p" + std::to_string(k + 1) + ": " + probs_[k].describe();
    }
    return s;
  }

 private:
  std::vector<MapSpec> maps_;
  ProbabilityField probs_;
};

struct Transition {
  double target;
  double weight;
};

/// P(x, ·) as the list (T_k(x), p_k(x)).
inline std::vector<Transition> transition_kernel(const RandomMapSystem& sys, double x) {
  require_unit_interval(x, "transition_kernel");
  std::vector<Transition> out;
  out.reserve(sys.size());
  for (std::size_t k = 0; k < sys.size(); ++k) out.push_back({sys.map(k)(x), sys.prob(k, x)});
  return out;
}

struct ConditionAResult {
  bool pass = true;
  std::size_t partial_length = 0;           // l of the first violation
  std::optional<std::pair<double, double>> witness;  // (x_prev, x) with S(x) > S(x_prev)
  double worst_increase = 0.0;
};

struct ConditionReport {
  std::vector<ConditionAResult> condition_A;  // one per map
  double delta = 0.0;
  bool condition_B_pass = false;

  bool condition_A_pass() const {
    return std::all_of(condition_A.begin(), condition_A.end(),
                       [](const ConditionAResult& r) { return r.pass; });
  }
  bool all_pass() const { return condition_A_pass() && condition_B_pass; }
};

inline constexpr double kConditionASlack = 1e-10;

/// Checks that x ↦ Σ_{i<=l} p_k(T_{k,i}^{-1}x) / T'_k(T_{k,i}^{-1}x) is
/// nonincreasing for l = 1, 2 and every map k, on a uniform grid of [0,1].
/// Branches with no preimage at x contribute nothing.
inline std::vector<ConditionAResult> check_condition_A(const RandomMapSystem& sys,
                                                       std::size_t grid_points) {
  if (grid_points < 64) throw ConfigError("condition (A) check needs >= 64 grid points");
  std::vector<ConditionAResult> results(sys.size());
  for (std::size_t k = 0; k < sys.size(); ++k) {
    const MapSpec& map = sys.map(k);
    auto term = [&](Side side, double x) {
      const auto y = sampling_preimage(map, side, x);
      if (!y) return 0.0;
      return sys.prob(k, *y) / map.branch(side).derivative(*y);
    };
    double prev[2] = {0.0, 0.0};
    double prev_x = 0.0;
    ConditionAResult& r = results[k];
    for (std::size_t j = 0; j < grid_points; ++j) {
      const double x = static_cast<double>(j) / static_cast<double>(grid_points - 1);
      const double s1 = term(Side::left, x);
      const double s2 = s1 + term(Side::right, x);
      const double cur[2] = {s1, s2};
      if (j > 0) {
        for (std::size_t l = 0; l < 2; ++l) {
          const double inc = cur[l] - prev[l];
          if (inc > kConditionASlack) {
            if (r.pass) {
              r.pass = false;
              r.partial_length = l + 1;
              r.witness = std::make_pair(prev_x, x);
            }
            r.worst_increase = std::max(r.worst_increase, inc);
          }
        }
      }
      prev[0] = s1;
      prev[1] = s2;
      prev_x = x;
    }
  }
  return results;
}

/// Grid infimum of p_k(x) over x and k (breakpoints included).
inline double check_condition_B(const RandomMapSystem& sys, std::size_t grid_points) {
  if (grid_points < 64) throw ConfigError("condition (B) check needs >= 64 grid points");
  std::vector<double> xs;
  for (std::size_t j = 0; j < grid_points; ++j) {
    xs.push_back(static_cast<double>(j) / static_cast<double>(grid_points - 1));
  }
  for (std::size_t k = 0; k < sys.size(); ++k) {
    for (double b : sys.probs()[k].breaks()) {
      xs.push_back(b);
      if (b > 0.0) xs.push_back(std::nextafter(b, 0.0));
    }
  }
  double delta = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    for (std::size_t k = 0; k < sys.size(); ++k) delta = std::min(delta, sys.prob(k, x));
  }
  return delta;
}

inline ConditionReport check_conditions(const RandomMapSystem& sys, std::size_t grid_points) {
  ConditionReport rep;
  rep.condition_A = check_condition_A(sys, grid_points);
  rep.delta = check_condition_B(sys, grid_points);
  rep.condition_B_pass = rep.delta > 0.0;
  return rep;
}

namespace presets {

inline MapSpec lsv_map(double exponent, double slope, double intercept) {
  return MapSpec(Branch::lsv_left(exponent), Branch::affine(slope, intercept));
}

/// The worked two-map example: T_1 = (lsv(alpha), 2x-1), T_2 = (lsv(beta),
/// 3x/2 - 3/4), p_1 = (1 + x^alpha)/3 on [0,1/2) and 1/3 on [1/2,1].
inline RandomMapSystem example4(double alpha = 0.5, double beta = 0.25) {
  if (!(beta > 0.0 && beta < alpha && alpha < 1.0)) {
    throw ConfigError("example4 requires 0 < beta < alpha < 1");
  }
  auto p1 = ProbabilityComponent::split(kPartitionPoint,
                                        ProbabilityComponent::power_affine(1.0 / 3.0, 1.0 / 3.0, alpha),
                                        ProbabilityComponent::constant(1.0 / 3.0));
  auto p2 = ProbabilityComponent::split(kPartitionPoint,
                                        ProbabilityComponent::power_affine(2.0 / 3.0, -1.0 / 3.0, alpha),
                                        ProbabilityComponent::constant(2.0 / 3.0));
  return RandomMapSystem({lsv_map(alpha, 2.0, -1.0), lsv_map(beta, 1.5, -0.75)},
                         ProbabilityField({std::move(p1), std::move(p2)}));
}

/// T_1 of the worked example alone, written as a two-map system with
/// p_1 ≡ 1 and p_2 ≡ 0.
inline RandomMapSystem pure_t1(double alpha = 0.5) {
  return RandomMapSystem({lsv_map(alpha, 2.0, -1.0), lsv_map(alpha, 2.0, -1.0)},
                         ProbabilityField({ProbabilityComponent::constant(1.0),
                                           ProbabilityComponent::constant(0.0)}));
}

}  // namespace presets

}  // namespace acimlab
