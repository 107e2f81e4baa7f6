#pragma once

// Position-dependent probability fields p_1..p_K on [0,1].

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "acimlab/error.hpp"
#include "acimlab/quadrature.hpp"

namespace acimlab {

/// coeff * x^exponent with exponent >= 0.
struct PowerTerm {
  double coeff;
  double exponent;
};

/// Sum of power terms; covers constants and c0 + c1 x^a.
struct PowerSum {
  std::vector<PowerTerm> terms;

  double value(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.exponent == 0.0 ? t.coeff : t.coeff * std::pow(x, t.exponent);
    return s;
  }
  double antiderivative(double x) const {
    double s = 0.0;
    for (const auto& t : terms) {
      s += t.coeff * std::pow(x, t.exponent + 1.0) / (t.exponent + 1.0);
    }
    return s;
  }
};

struct LinearTable {
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t segment(double x) const {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t s = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(s, xs.size() - 2);
  }
  double value(double x) const {
    x = std::clamp(x, xs.front(), xs.back());
    const std::size_t s = segment(x);
    const double t = (x - xs[s]) / (xs[s + 1] - xs[s]);
    return ys[s] + t * (ys[s + 1] - ys[s]);
  }
  double antiderivative(double x) const {
    x = std::clamp(x, xs.front(), xs.back());
    const std::size_t s = segment(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) acc += 0.5 * (ys[i] + ys[i + 1]) * (xs[i + 1] - xs[i]);
    return acc + 0.5 * (ys[s] + value(x)) * (x - xs[s]);
  }
};

struct Callable {
  std::function<double(double)> fn;
  std::string label = "callable";
};

using ProbabilityPiece = std::variant<PowerSum, LinearTable, Callable>;

/// Settings for integrals of pieces without a closed-form antiderivative.
struct QuadratureSettings {
  std::size_t points = 32;
  double tol = 1e-14;
  std::size_t max_splits = 4096;
};

/// One probability function, piecewise over breakpoints 0 = b_0 < ... < b_m = 1.
/// Piece i applies on [b_i, b_{i+1}); the last piece also owns x = 1.
class ProbabilityComponent {
 public:
  ProbabilityComponent(std::vector<double> breaks, std::vector<ProbabilityPiece> pieces)
      : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
    if (breaks_.size() != pieces_.size() + 1 || pieces_.empty() || breaks_.front() != 0.0 ||
        breaks_.back() != 1.0) {
      throw ConfigError("probability component needs breakpoints 0 < ... < 1, one piece each");
    }
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
      if (!(breaks_[i] > breaks_[i - 1])) throw ConfigError("breakpoints must increase");
    }
  }

  static ProbabilityComponent constant(double c) {
    return ProbabilityComponent({0.0, 1.0}, {PowerSum{{{c, 0.0}}}});
  }
  /// c0 + c1 x^a on the whole interval.
  static ProbabilityComponent power_affine(double c0, double c1, double a) {
    return ProbabilityComponent({0.0, 1.0}, {PowerSum{{{c0, 0.0}, {c1, a}}}});
  }
  static ProbabilityComponent table(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() < 2 || xs.size() != ys.size() || xs.front() != 0.0 || xs.back() != 1.0) {
      throw ConfigError("probability table must span [0,1] with >= 2 knots");
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1])) throw ConfigError("table abscissae must increase");
    }
    return ProbabilityComponent({0.0, 1.0}, {LinearTable{std::move(xs), std::move(ys)}});
  }
  static ProbabilityComponent callable(std::function<double(double)> fn,
                                       std::string label = "callable") {
    return ProbabilityComponent({0.0, 1.0}, {Callable{std::move(fn), std::move(label)}});
  }
  /// `left` on [0, at), `right` on [at, 1].
  static ProbabilityComponent split(double at, const ProbabilityComponent& left,
                                    const ProbabilityComponent& right) {
    if (left.pieces_.size() != 1 || right.pieces_.size() != 1) {
      throw ConfigError("split expects single-piece components");
    }
    return ProbabilityComponent({0.0, at, 1.0}, {left.pieces_[0], right.pieces_[0]});
  }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<ProbabilityPiece>& pieces() const { return pieces_; }

  std::size_t piece_index(double x) const {
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    const auto i = static_cast<std::size_t>(it - breaks_.begin());
    return std::clamp<std::size_t>(i, 1, pieces_.size()) - 1;
  }

  double operator()(double x) const { return eval_piece(pieces_[piece_index(x)], x); }

  bool closed_form() const {
    return std::none_of(pieces_.begin(), pieces_.end(), [](const ProbabilityPiece& p) {
      return std::holds_alternative<Callable>(p);
    });
  }

  /// Integral over [a,b] ⊂ [0,1]; exact antiderivatives for closed-form
  /// pieces, adaptive Gauss–Legendre otherwise (nullopt when it gives up).
  std::optional<double> integral(double a, double b, const QuadratureSettings& q = {}) const {
    if (!(b > a)) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const double lo = std::max(a, breaks_[i]);
      const double hi = std::min(b, breaks_[i + 1]);
      if (!(hi > lo)) continue;
      const auto& piece = pieces_[i];
      if (const auto* ps = std::get_if<PowerSum>(&piece)) {
        total += ps->antiderivative(hi) - ps->antiderivative(lo);
      } else if (const auto* t = std::get_if<LinearTable>(&piece)) {
        total += t->antiderivative(hi) - t->antiderivative(lo);
      } else {
        const auto& fn = std::get<Callable>(piece).fn;
        thread_local std::unique_ptr<GaussLegendre> rule;
        if (!rule || rule->nodes.size() != q.points) rule = std::make_unique<GaussLegendre>(q.points);
        const auto v = adaptive_integrate(*rule, fn, lo, hi, q.tol, q.max_splits);
        if (!v) return std::nullopt;
        total += *v;
      }
    }
    return total;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (i) os << " | ";
      os << "[" << breaks_[i] << "," << breaks_[i + 1] << "): ";
      std::visit(
          [&os](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PowerSum>) {
              for (std::size_t j = 0; j < p.terms.size(); ++j) {
                os << (j ? " + " : "") << p.terms[j].coeff;
                if (p.terms[j].exponent != 0.0) os << "*x^" << p.terms[j].exponent;
              }
            } else if constexpr (std::is_same_v<T, LinearTable>) {
              os << "table(" << p.xs.size() << " knots)";
            } else {
              os << p.label;
            }
          },
          pieces_[i]);
    }
    return os.str();
  }

  /// 1 - Σ others, kept in closed form when every overlapping piece is a
  /// power sum (or a single table for K = 2).
  static ProbabilityComponent complement(std::span<const ProbabilityComponent> others) {
    std::vector<double> breaks{0.0, 1.0};
    for (const auto& o : others) breaks.insert(breaks.end(), o.breaks_.begin(), o.breaks_.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<ProbabilityPiece> pieces;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
      std::vector<const ProbabilityPiece*> active;
      for (const auto& o : others) active.push_back(&o.pieces_[o.piece_index(mid)]);

      const bool all_power = std::all_of(active.begin(), active.end(), [](auto* p) {
        return std::holds_alternative<PowerSum>(*p);
      });
      if (all_power) {
        PowerSum sum{{{1.0, 0.0}}};
        for (const auto* p : active) {
          for (const auto& t : std::get<PowerSum>(*p).terms) {
            auto same = std::find_if(sum.terms.begin(), sum.terms.end(),
                                     [&](const PowerTerm& s) { return s.exponent == t.exponent; });
            if (same != sum.terms.end()) {
              same->coeff -= t.coeff;
            } else {
              sum.terms.push_back({-t.coeff, t.exponent});
            }
          }
        }
        pieces.emplace_back(std::move(sum));
      } else if (active.size() == 1 && std::holds_alternative<LinearTable>(*active[0])) {
        LinearTable t = std::get<LinearTable>(*active[0]);
        for (double& y : t.ys) y = 1.0 - y;
        pieces.emplace_back(std::move(t));
      } else {
        std::vector<ProbabilityPiece> copies;
        for (const auto* p : active) copies.push_back(*p);
        pieces.emplace_back(Callable{[copies](double x) {
                                       double s = 1.0;
                                       for (const auto& p : copies) s -= eval_piece(p, x);
                                       return s;
                                     },
                                     "complement"});
      }
    }
    return ProbabilityComponent(std::move(breaks), std::move(pieces));
  }

  static double eval_piece(const ProbabilityPiece& p, double x) {
    return std::visit(
        [x](const auto& piece) -> double {
          using T = std::decay_t<decltype(piece)>;
          if constexpr (std::is_same_v<T, Callable>) {
            return piece.fn(x);
          } else {
            return piece.value(x);
          }
        },
        p);
  }

 private:
  std::vector<double> breaks_;
  std::vector<ProbabilityPiece> pieces_;
};

/// K probability components summing to one pointwise.
class ProbabilityField {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit ProbabilityField(std::vector<ProbabilityComponent> components)
      : components_(std::move(components)) {
    if (components_.size() < 2) throw ConfigError("probability field needs K >= 2");
  }

  std::size_t size() const { return components_.size(); }
  const ProbabilityComponent& operator[](std::size_t k) const { return components_[k]; }
  double operator()(std::size_t k, double x) const { return components_[k](x); }

  struct Validation {
    double max_sum_error = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    double max_value = -std::numeric_limits<double>::infinity();
    std::optional<double> witness;

    bool ok() const {
      return max_sum_error <= kSumTolerance && min_value >= -kSumTolerance &&
             max_value <= 1.0 + kSumTolerance;
    }
  };

  /// Checks Σ p_k = 1 and 0 <= p_k <= 1 on a uniform grid (plus every
  /// breakpoint and its left neighbour).
  Validation validate(std::size_t grid_points = 4097) const {
    std::vector<double> xs;
    for (std::size_t i = 0; i < grid_points; ++i) {
      xs.push_back(static_cast<double>(i) / static_cast<double>(grid_points - 1));
    }
    for (const auto& c : components_) {
      for (double b : c.breaks()) {
        xs.push_back(b);
        xs.push_back(std::nextafter(b, 0.0));
      }
    }
    Validation v;
    for (double x : xs) {
      if (x < 0.0 || x > 1.0) continue;
      double s = 0.0;
      for (const auto& c : components_) {
        const double p = c(x);
        s += p;
        v.min_value = std::min(v.min_value, p);
        v.max_value = std::max(v.max_value, p);
        if ((p < -kSumTolerance || p > 1.0 + kSumTolerance) && !v.witness) v.witness = x;
      }
      const double err = std::abs(s - 1.0);
      if (err > v.max_sum_error) {
        v.max_sum_error = err;
        if (err > kSumTolerance && !v.witness) v.witness = x;
      }
    }
    return v;
  }

 private:
  std::vector<ProbabilityComponent> components_;
};

}  // namespace acimlab
