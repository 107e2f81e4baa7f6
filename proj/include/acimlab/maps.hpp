#pragma once

// Two-branch intermittent interval maps: an LSV-type left branch with an
// indifferent fixed point at 0 and an expanding right branch g with g(1/2)=0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "acimlab/error.hpp"

namespace acimlab {

inline constexpr double kPartitionPoint = 0.5;

/// Solves f(x) = y for x in [lo, hi] with f increasing. Runs until the
/// bracket collapses to adjacent doubles, then returns the better endpoint.
template <typename F>
double bisect_increasing(F&& f, double y, double lo, double hi) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (y <= f_lo) return lo;
  if (y >= f_hi) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == y) return mid;
    if (f_mid < y) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  return (y - f_lo) <= (f_hi - y) ? lo : hi;
}

struct LsvLeft {
  double exponent;
};

struct Affine {
  double slope;
  double intercept;
};

/// Monotone tabulation, linearly interpolated between knots.
struct Tabulated {
  std::vector<double> xs;
  std::vector<double> ys;
};

class Branch {
 public:
  using Kind = std::variant<LsvLeft, Affine, Tabulated>;

  /// x(1 + (2x)^a) on [0, 1/2).
  static Branch lsv_left(double exponent) {
    if (!(exponent > 0.0 && exponent < 1.0)) {
      throw ConfigError("lsv exponent must lie in (0,1), got " +
                        std::to_string(exponent));
    }
    return Branch(LsvLeft{exponent}, 0.0, kPartitionPoint);
  }

  /// slope*x + intercept on [lo, hi]; slope must be positive. Whether it
  /// exceeds 1 is a class property checked by verify_map_class.
  static Branch affine(double slope, double intercept,
                       double lo = kPartitionPoint, double hi = 1.0) {
    if (!(slope > 0.0) || !std::isfinite(intercept)) {
      throw ConfigError("affine branch needs a positive slope");
    }
    return Branch(Affine{slope, intercept}, lo, hi);
  }

  static Branch tabulated(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() < 2 || xs.size() != ys.size()) {
      throw ConfigError("tabulated branch needs >= 2 matching knots");
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1])) {
        throw ConfigError("tabulated branch must be strictly increasing");
      }
    }
    const double lo = xs.front();
    const double hi = xs.back();
    return Branch(Tabulated{std::move(xs), std::move(ys)}, lo, hi);
  }

  const Kind& kind() const { return kind_; }
  double domain_lo() const { return lo_; }
  double domain_hi() const { return hi_; }

  /// Branch formula; accepts the closed domain so that one-sided limits at
  /// the partition point are available.
  double value(double x) const {
    return std::visit(
        [x](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, LsvLeft>) {
            return x * (1.0 + std::pow(2.0 * x, k.exponent));
          } else if constexpr (std::is_same_v<T, Affine>) {
            return k.slope * x + k.intercept;
          } else {
            const std::size_t s = segment(k, x);
            const double t = (x - k.xs[s]) / (k.xs[s + 1] - k.xs[s]);
            return k.ys[s] + t * (k.ys[s + 1] - k.ys[s]);
          }
        },
        kind_);
  }

  double derivative(double x) const {
    return std::visit(
        [x](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, LsvLeft>) {
            return 1.0 + (1.0 + k.exponent) * std::pow(2.0 * x, k.exponent);
          } else if constexpr (std::is_same_v<T, Affine>) {
            return k.slope;
          } else {
            const std::size_t s = segment(k, x);
            return (k.ys[s + 1] - k.ys[s]) / (k.xs[s + 1] - k.xs[s]);
          }
        },
        kind_);
  }

  /// Closed image [value(lo), value(hi)] (the upper end is a one-sided limit
  /// for the left branch).
  std::pair<double, double> image() const { return {value(lo_), value(hi_)}; }

  /// Unique preimage in the closed domain, or nullopt when y is outside the
  /// image.
  std::optional<double> inverse(double y) const {
    const auto [img_lo, img_hi] = image();
    if (!(y >= img_lo && y <= img_hi)) return std::nullopt;
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, LsvLeft>) {
            return bisect_increasing([this](double x) { return value(x); }, y,
                                     lo_, hi_);
          } else if constexpr (std::is_same_v<T, Affine>) {
            return std::clamp((y - k.intercept) / k.slope, lo_, hi_);
          } else {
            const auto it = std::upper_bound(k.ys.begin(), k.ys.end(), y);
            std::size_t s = it == k.ys.begin()
                                ? 0
                                : static_cast<std::size_t>(it - k.ys.begin()) - 1;
            s = std::min(s, k.ys.size() - 2);
            const double t = (y - k.ys[s]) / (k.ys[s + 1] - k.ys[s]);
            return std::clamp(k.xs[s] + t * (k.xs[s + 1] - k.xs[s]), lo_, hi_);
          }
        },
        kind_);
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, LsvLeft>) {
            os << "lsv(" << k.exponent << ")";
          } else if constexpr (std::is_same_v<T, Affine>) {
            os << "affine(" << k.slope << "," << k.intercept << ")";
          } else {
            os << "table(";
            for (std::size_t i = 0; i < k.xs.size(); ++i) {
              os << (i ? "," : "") << k.xs[i] << ":" << k.ys[i];
            }
            os << ")";
          }
        },
        kind_);
    return os.str();
  }

 private:
  Branch(Kind kind, double lo, double hi) : kind_(std::move(kind)), lo_(lo), hi_(hi) {}

  static std::size_t segment(const Tabulated& t, double x) {
    const auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
    std::size_t s =
        it == t.xs.begin() ? 0 : static_cast<std::size_t>(it - t.xs.begin()) - 1;
    return std::min(s, t.xs.size() - 2);
  }

  Kind kind_;
  double lo_;
  double hi_;
};

enum class Side { left, right };

/// A map T = left on [0,1/2), right on [1/2,1].
class MapSpec {
 public:
  MapSpec(Branch left, Branch right, std::optional<double> exponent = std::nullopt)
      : left_(std::move(left)), right_(std::move(right)) {
    if (exponent) {
      exponent_ = *exponent;
    } else if (const auto* lsv = std::get_if<LsvLeft>(&left_.kind())) {
      exponent_ = lsv->exponent;
    } else {
      throw ConfigError("custom left branch requires an explicit exponent");
    }
    if (!(exponent_ > 0.0 && exponent_ < 1.0)) {
      throw ConfigError("map exponent must lie in (0,1)");
    }
    constexpr double tol = 1e-12;
    if (left_.domain_lo() != 0.0 || left_.domain_hi() != kPartitionPoint) {
      throw ConfigError("left branch must live on [0, 1/2)");
    }
    if (right_.domain_lo() != kPartitionPoint || right_.domain_hi() != 1.0) {
      throw ConfigError("right branch must live on [1/2, 1]");
    }
    if (std::abs(left_.value(0.0)) > tol) {
      throw ConfigError("left branch must fix the origin");
    }
    if (std::abs(right_.value(kPartitionPoint)) > tol) {
      throw ConfigError("right branch must vanish at 1/2");
    }
    const auto [l0, l1] = left_.image();
    const auto [r0, r1] = right_.image();
    if (l0 < -tol || l1 > 1.0 + tol || r0 < -tol || r1 > 1.0 + tol) {
      throw ConfigError("branch images must lie in [0,1]");
    }
  }

  const Branch& left() const { return left_; }
  const Branch& right() const { return right_; }
  const Branch& branch(Side s) const { return s == Side::left ? left_ : right_; }
  double exponent() const { return exponent_; }

  double operator()(double x) const {
    const Branch& b = x < kPartitionPoint ? left_ : right_;
    return std::clamp(b.value(x), 0.0, 1.0);
  }

  std::string describe() const {
    return "left=" + left_.describe() + " right=" + right_.describe();
  }

 private:
  Branch left_;
  Branch right_;
  double exponent_ = 0.0;
};

/// T(x); the right branch owns the partition point.
inline double eval_map(const MapSpec& map, double x) {
  require_unit_interval(x, "eval_map");
  return map(x);
}

/// T'(x), one-sided at 1/2 (right-branch value there).
inline double derivative(const MapSpec& map, double x) {
  require_unit_interval(x, "derivative");
  return (x < kPartitionPoint ? map.left() : map.right()).derivative(x);
}

inline std::optional<double> invert_branch(const MapSpec& map, Side which, double y) {
  require_unit_interval(y, "invert_branch");
  return map.branch(which).inverse(y);
}

/// Preimage used when sampling position-dependent quantities. The left
/// branch lives on [0,1/2), so its preimage 1/2 of y = 1 is read as the left
/// limit.
inline std::optional<double> sampling_preimage(const MapSpec& map, Side which, double y) {
  auto x = map.branch(which).inverse(y);
  if (x && which == Side::left && *x >= kPartitionPoint) x = std::nextafter(kPartitionPoint, 0.0);
  return x;
}

struct ClassCheck {
  bool pass = true;
  std::optional<double> witness;
};

struct MapClassReport {
  ClassCheck monotone;
  ClassCheck convex;
  ClassCheck expanding;
  ClassCheck displacement;
  double constant = 0.0;  // C in T(x) >= x + C x^{1+a}

  bool all_pass() const {
    return monotone.pass && convex.pass && expanding.pass && displacement.pass;
  }
};

/// Grid check of the intermittent map class: strictly increasing convex
/// branches, T' > 1 away from 0, and T(x) >= x + 2^a x^{1+a} on the left.
inline MapClassReport verify_map_class(const MapSpec& map, std::size_t grid_points) {
  if (grid_points < 16) throw ConfigError("verify_map_class needs >= 16 grid points");
  MapClassReport rep;
  rep.constant = std::pow(2.0, map.exponent());

  auto fail = [](ClassCheck& c, double x) {
    if (c.pass) {
      c.pass = false;
      c.witness = x;
    }
  };

  for (const Branch* b : {&map.left(), &map.right()}) {
    const double lo = b->domain_lo();
    const double hi = b->domain_hi();
    const double h = (hi - lo) / static_cast<double>(grid_points - 1);
    std::vector<double> xs(grid_points), vs(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
      xs[i] = i + 1 == grid_points ? hi : lo + h * static_cast<double>(i);
      vs[i] = b->value(xs[i]);
    }
    double prev_slope = -INFINITY;
    for (std::size_t i = 0; i + 1 < grid_points; ++i) {
      if (!(vs[i + 1] > vs[i])) fail(rep.monotone, xs[i + 1]);
      const double slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
      if (slope < prev_slope - 1e-9 * std::max(1.0, std::abs(prev_slope))) {
        fail(rep.convex, xs[i]);
      }
      prev_slope = slope;
    }
    for (double x : xs) {
      if (x > 0.0 && !(b->derivative(x) > 1.0)) fail(rep.expanding, x);
    }
    if (b == &map.left()) {
      for (std::size_t i = 0; i < grid_points; ++i) {
        const double x = xs[i];
        const double bound = x + rep.constant * std::pow(x, 1.0 + map.exponent());
        if (vs[i] < bound - 1e-12 * std::max(x, 1e-300)) fail(rep.displacement, x);
      }
    }
  }
  return rep;
}

}  // namespace acimlab
