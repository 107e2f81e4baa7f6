#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

namespace acimlab {

/// Gauss–Legendre rule on [-1, 1], nodes by Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
      double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
        }
        dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      nodes[i] = -z;
      nodes[n - 1 - i] = z;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  template <typename F>
  double integrate(F&& f, double a, double b) const {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
    return s * h;
  }
};

/// Adaptive bisection of [a,b] until the rule agrees with its two-halves
/// refinement to `tol`. Returns nullopt when more than `max_splits`
/// subintervals would be needed.
template <typename F>
std::optional<double> adaptive_integrate(const GaussLegendre& rule, F&& f, double a,
                                         double b, double tol, std::size_t max_splits) {
  struct Piece {
    double a, b, whole;
  };
  std::vector<Piece> stack{{a, b, rule.integrate(f, a, b)}};
  double total = 0.0;
  std::size_t splits = 0;
  while (!stack.empty()) {
    const Piece p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double l = rule.integrate(f, p.a, m);
    const double r = rule.integrate(f, m, p.b);
    const double scale = (p.b - p.a) / (b - a);
    if (std::abs(l + r - p.whole) <= tol * std::max(scale, 1e-3) || m <= p.a || m >= p.b) {
      total += l + r;
      continue;
    }
    if (++splits > max_splits) return std::nullopt;
    stack.push_back({m, p.b, r});
    stack.push_back({p.a, m, l});
  }
  return total;
}

}  // namespace acimlab
