#pragma once

// Piecewise-constant densities on a uniform partition of [0,1], L¹ geometry,
// and the cone C_A = { f >= 0, f nonincreasing, ∫_0^x f <= A x^{1-α} m(f) }.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acimlab/maps.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/rng.hpp"

namespace acimlab {

class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {}

  /// Samples f at cell midpoints.
  template <typename F>
  static GridFunction sample(std::size_t n, F&& f) {
    GridFunction g(n);
    for (std::size_t i = 0; i < n; ++i) g.values_[i] = f(g.midpoint(i));
    return g;
  }

  std::size_t n() const { return values_.size(); }
  double width() const { return 1.0 / static_cast<double>(values_.size()); }
  double midpoint(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(values_.size());
  }
  double edge(std::size_t j) const {
    return static_cast<double>(j) / static_cast<double>(values_.size());
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Cell containing x; x = 1 belongs to the last cell.
  std::size_t cell_of(double x) const {
    const auto n = values_.size();
    const double s = x * static_cast<double>(n);
    if (!(s > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(s), n - 1);
  }
  double at(double x) const { return values_[cell_of(x)]; }

  /// m(f) = ∫_0^1 f = mean of the cell values.
  double integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  GridFunction normalized() const {
    const double m = integral();
    if (!(m > 0.0)) throw std::invalid_argument("cannot normalize a density of zero mass");
    return scaled(1.0 / m);
  }
  GridFunction scaled(double c) const {
    GridFunction g(*this);
    for (double& v : g.values_) v *= c;
    return g;
  }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    check_same(a, b);
    GridFunction g(a);
    for (std::size_t i = 0; i < g.n(); ++i) g.values_[i] += b.values_[i];
    return g;
  }
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    check_same(a, b);
    GridFunction g(a);
    for (std::size_t i = 0; i < g.n(); ++i) g.values_[i] -= b.values_[i];
    return g;
  }
  friend bool operator==(const GridFunction&, const GridFunction&) = default;

  static void check_same(const GridFunction& a, const GridFunction& b) {
    if (a.n() != b.n()) {
      throw std::invalid_argument("grid size mismatch: " + std::to_string(a.n()) + " vs " +
                                  std::to_string(b.n()));
    }
  }

 private:
  std::vector<double> values_;
};

inline double l1_norm(const GridFunction& f) {
  double s = 0.0;
  for (double v : f.values()) s += std::abs(v);
  return s / static_cast<double>(f.n());
}

inline double l1_distance(const GridFunction& f, const GridFunction& g) {
  GridFunction::check_same(f, g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.n(); ++i) s += std::abs(f[i] - g[i]);
  return s / static_cast<double>(f.n());
}

struct ConeParams {
  double A;
  double alpha;

  /// Smallest A for which the cone is known to be invariant: 4/(1-α).
  static double invariance_threshold(double alpha) { return 4.0 / (1.0 - alpha); }
  static ConeParams at_threshold(double alpha) { return {invariance_threshold(alpha), alpha}; }
};

struct ConeReport {
  bool nonnegative = true;
  bool nonincreasing = true;
  bool growth_bound = true;
  double margin = std::numeric_limits<double>::infinity();  // min(bound - cumulative)
  std::optional<std::size_t> witness;                        // first offending cell / edge

  bool pass() const { return nonnegative && nonincreasing && growth_bound; }
};

inline constexpr double kConeSlack = 1e-10;

/// Exact check on the piecewise-constant representation: cumulative cell
/// sums are compared with A x_j^{1-α} m(f) at every right cell edge.
inline ConeReport cone_check(const GridFunction& f, const ConeParams& cone,
                             double slack = kConeSlack) {
  if (f.n() < 2) throw std::invalid_argument("cone_check needs n >= 2");
  ConeReport rep;
  auto note = [&rep](std::size_t i) {
    if (!rep.witness) rep.witness = i;
  };
  const double m = f.integral();
  const double h = f.width();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < f.n(); ++i) {
    if (!(f[i] >= 0.0) || !std::isfinite(f[i])) {
      rep.nonnegative = false;
      note(i);
    }
    if (i > 0 && f[i] > f[i - 1] + slack) {
      rep.nonincreasing = false;
      note(i);
    }
    cumulative += f[i] * h;
    const double bound = cone.A * std::pow(f.edge(i + 1), 1.0 - cone.alpha) * m;
    rep.margin = std::min(rep.margin, bound - cumulative);
    if (cumulative > bound + slack) {
      rep.growth_bound = false;
      note(i + 1);
    }
  }
  return rep;
}

struct SuiteItem {
  bool pass = true;
  std::size_t checked = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::optional<double> witness;

  void record(double margin, double x, double slack) {
    ++checked;
    min_margin = std::min(min_margin, margin);
    if (margin < -slack && pass) {
      pass = false;
      witness = x;
    }
  }
};

struct InequalityReport {
  SuiteItem pointwise_power;   // (i)   f(x) <= A x^{-α} m(f)
  SuiteItem pointwise_mean;    // (ii)  f(x) <= m(f)/x
  SuiteItem preimage_bounds;   // (iii) y_k >= x/2 and x >= y*
  SuiteItem concavity;         // (iv)  (1-x)^{1-α} <= 1 - (1-α)x
  SuiteItem power_gap;         // (v)   x^{1-α} - y*^{1-α} >= (1-α)x/2

  bool all_pass() const {
    return pointwise_power.pass && pointwise_mean.pass && preimage_bounds.pass &&
           concavity.pass && power_gap.pass;
  }
};

/// Samples the pointwise consequences of cone membership (items i–ii at
/// random cell edges, using the left-cell value there) and the map-level
/// inequalities (items iii–v at random x in (0,1], with bisection preimages
/// under every left branch of `sys`).
inline InequalityReport lemma32_suite(const GridFunction& f, const ConeParams& cone,
                                   std::size_t samples, const RandomMapSystem& sys,
                                   std::uint64_t seed = 0, double slack = 1e-12) {
  InequalityReport rep;
  CounterRng rng(seed, 32);
  const double m = f.integral();
  const double a = cone.alpha;

  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t j = 1 + static_cast<std::size_t>(rng.below(f.n()));
    const double x = f.edge(j);
    const double fx = f[j - 1];
    rep.pointwise_power.record(cone.A * std::pow(x, -a) * m - fx, x, slack);
    rep.pointwise_mean.record(m / x - fx, x, slack);
  }

  for (std::size_t s = 0; s < samples; ++s) {
    const double x = 1.0 - rng.uniform();  // (0,1]
    double y_star = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& map : sys.maps()) {
      const double y = *map.left().inverse(x);
      y_star = std::max(y_star, y);
      worst = std::min(worst, y - 0.5 * x);
    }
    worst = std::min(worst, x - y_star);
    rep.preimage_bounds.record(worst, x, slack);

    const double xi = s == 0 ? 0.0 : rng.uniform();
    rep.concavity.record((1.0 - (1.0 - a) * xi) - std::pow(1.0 - xi, 1.0 - a), xi, slack);

    rep.power_gap.record(std::pow(x, 1.0 - a) - std::pow(y_star, 1.0 - a) - 0.5 * (1.0 - a) * x,
                         x, slack);
  }
  return rep;
}

/// Random cone element c_0 + Σ_j c_j x^{-a_j} (a_j < α) sampled at cell
/// midpoints and normalized to unit mass; redrawn until it passes cone_check.
inline GridFunction random_cone_element(std::size_t n, const ConeParams& cone, CounterRng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double c0 = rng.uniform();
    const std::size_t terms = 1 + static_cast<std::size_t>(rng.below(3));
    std::vector<std::pair<double, double>> power;
    for (std::size_t t = 0; t < terms; ++t) power.emplace_back(rng.uniform(), rng.uniform() * cone.alpha);
    auto g = GridFunction::sample(n, [&](double x) {
      double v = c0;
      for (const auto& [c, e] : power) v += c * std::pow(x, -e);
      return v;
    });
    if (!(g.integral() > 0.0)) continue;
    g = g.normalized();
    if (cone_check(g, cone).pass()) return g;
  }
  throw std::runtime_error("could not draw a cone element");
}

/// Random nonnegative nonincreasing unit-mass step density with a few jumps.
inline GridFunction random_nonincreasing_density(std::size_t n, CounterRng& rng) {
  GridFunction g(n);
  double level = rng.uniform(0.0, 0.1);
  const double jump_rate = 8.0 / static_cast<double>(n);
  for (std::size_t i = n; i-- > 0;) {
    if (rng.uniform() < jump_rate) level += rng.uniform(0.0, 2.0);
    level += rng.uniform(0.0, 1e-3);
    g[i] = level;
  }
  return g.normalized();
}

}  // namespace acimlab
