#pragma once

// The random Perron–Frobenius operator
//   (L_T f)(x) = Σ_k Σ_{y ∈ T_k^{-1}x} p_k(y) f(y) / T_k'(y),
// its Ulam discretization, and numerical checks of its cone properties.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/maps.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/rng.hpp"

namespace acimlab {

struct TransferConfig {
  std::size_t quadrature_points_per_cell = 32;
  double power_iteration_tol = 1e-10;
  std::size_t max_iterations = 1'000'000;
  unsigned threads = 1;  // row-parallel matrix assembly

  void validate() const {
    if (quadrature_points_per_cell < 4) throw ConfigError("quadrature needs >= 4 points per cell");
    if (!(power_iteration_tol > 0.0)) throw ConfigError("power iteration tolerance must be > 0");
    if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
  }
};

/// Row-stochastic n×n matrix in compressed sparse row form. Entry (i,j) is
/// the probability that a point uniform in cell i lands in cell j.
class UlamMatrix {
 public:
  UlamMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
             std::vector<double> vals)
      : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {
    if (row_ptr_.size() != n_ + 1 || cols_.size() != vals_.size() ||
        row_ptr_.back() != cols_.size()) {
      throw std::invalid_argument("inconsistent CSR arrays");
    }
  }

  /// Builds from dense rows; used for small hand-written matrices.
  static UlamMatrix from_dense(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    std::vector<std::size_t> ptr{0}, cols;
    std::vector<double> vals;
    for (const auto& r : rows) {
      if (r.size() != n) throw std::invalid_argument("matrix must be square");
      for (std::size_t j = 0; j < n; ++j) {
        if (r[j] != 0.0) {
          cols.push_back(j);
          vals.push_back(r[j]);
        }
      }
      ptr.push_back(cols.size());
    }
    return UlamMatrix(n, std::move(ptr), std::move(cols), std::move(vals));
  }

  std::size_t n() const { return n_; }
  std::size_t nonzeros() const { return vals_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  const std::vector<double>& vals() const { return vals_; }

  double entry(std::size_t i, std::size_t j) const {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (cols_[p] == j) return vals_[p];
    }
    return 0.0;
  }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += vals_[p];
    return s;
  }

  double max_row_sum_error() const {
    double e = 0.0;
    for (std::size_t i = 0; i < n_; ++i) e = std::max(e, std::abs(row_sum(i) - 1.0));
    return e;
  }

  double min_entry() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : vals_) m = std::min(m, v);
    return m;
  }

  /// Density transport f ↦ fM. Cells have equal width, so cell masses and
  /// cell densities transform the same way. Accumulation order is fixed.
  GridFunction transport(const GridFunction& f) const {
    if (f.n() != n_) throw std::invalid_argument("density size does not match matrix");
    GridFunction out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double fi = f[i];
      if (fi == 0.0) continue;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out[cols_[p]] += fi * vals_[p];
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

namespace detail {

/// Preimages of the cell edges j/n that fall inside a branch image.
struct EdgePreimages {
  std::size_t first = 0;  // edge index of pre[0]
  std::vector<double> pre;

  EdgePreimages(const Branch& b, std::size_t n) {
    const auto [lo, hi] = b.image();
    const double dn = static_cast<double>(n);
    const auto j0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo * dn)));
    const auto j1 = static_cast<std::size_t>(std::min(dn, std::floor(hi * dn)));
    first = j0;
    for (std::size_t j = j0; j <= j1 && j <= n; ++j) {
      pre.push_back(b.inverse(static_cast<double>(j) / dn).value_or(j == j0 ? b.domain_lo() : b.domain_hi()));
    }
  }

  double operator()(std::size_t j) const { return pre.at(j - first); }
};

template <typename Fn>
void parallel_rows(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// M_ij = n Σ_k ∫_{I_i} p_k(x) 1[T_k(x) ∈ I_j] dx. Each source cell is cut at
/// the branch preimages of the target cell edges and p_k is integrated over
/// the pieces (closed-form antiderivatives where available, adaptive
/// Gauss–Legendre otherwise).
inline UlamMatrix build_ulam(const RandomMapSystem& sys, std::size_t n,
                             const TransferConfig& cfg = {}) {
  cfg.validate();
  if (n == 0) throw ConfigError("Ulam matrix needs n >= 1");
  const double dn = static_cast<double>(n);
  const QuadratureSettings quad{cfg.quadrature_points_per_cell, 1e-15, 4096};

  struct BranchRef {
    std::size_t map;
    const Branch* branch;
    detail::EdgePreimages edges;
  };
  std::vector<BranchRef> branches;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    for (const Branch* b : {&sys.map(k).left(), &sys.map(k).right()}) {
      branches.push_back({k, b, detail::EdgePreimages(*b, n)});
    }
  }

  auto cell_floor = [&](double y) {
    const double s = y * dn;
    if (!(s > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(s), n - 1);
  };
  auto cell_ceil_minus_one = [&](double y) {
    const double s = std::ceil(y * dn);
    if (!(s >= 1.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(s) - 1, n - 1);
  };

  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  detail::parallel_rows(n, cfg.threads, [&](std::size_t i) {
    const double a = static_cast<double>(i) / dn;
    const double b = static_cast<double>(i + 1) / dn;
    auto& row = rows[i];
    for (const auto& br : branches) {
      const double lo = std::max(a, br.branch->domain_lo());
      const double hi = std::min(b, br.branch->domain_hi());
      if (!(hi > lo)) continue;
      const auto& p = sys.probs()[br.map];
      const double y_lo = std::clamp(br.branch->value(lo), 0.0, 1.0);
      const double y_hi = std::clamp(br.branch->value(hi), 0.0, 1.0);
      const std::size_t j_lo = cell_floor(y_lo);
      const std::size_t j_hi = std::max(j_lo, cell_ceil_minus_one(y_hi));
      for (std::size_t j = j_lo; j <= j_hi; ++j) {
        const double s_lo = j == j_lo ? lo : std::clamp(br.edges(j), lo, hi);
        const double s_hi = j == j_hi ? hi : std::clamp(br.edges(j + 1), lo, hi);
        if (!(s_hi > s_lo)) continue;
        const auto mass = p.integral(s_lo, s_hi, quad);
        if (!mass) throw QuadratureError("probability integral did not converge", i);
        if (*mass != 0.0) row.emplace_back(j, *mass * dn);
      }
    }
    std::sort(row.begin(), row.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    std::size_t w = 0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (w > 0 && row[w - 1].first == row[r].first) {
        row[w - 1].second += row[r].second;
      } else {
        row[w++] = row[r];
      }
    }
    row.resize(w);
  });

  std::vector<std::size_t> ptr{0}, cols;
  std::vector<double> vals;
  for (const auto& row : rows) {
    for (const auto& [j, v] : row) {
      cols.push_back(j);
      vals.push_back(v);
    }
    ptr.push_back(cols.size());
  }
  return UlamMatrix(n, std::move(ptr), std::move(cols), std::move(vals));
}

struct StationaryResult {
  GridFunction density;
  bool converged = false;
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();  // ‖fM - f‖₁
};

/// Power iteration f ↦ fM with renormalization to unit mass, until the L¹
/// residual drops to cfg.power_iteration_tol. Starts from the uniform
/// density unless f0 is given.
inline StationaryResult stationary_density(const UlamMatrix& M, const TransferConfig& cfg = {},
                                           const std::optional<GridFunction>& f0 = std::nullopt) {
  cfg.validate();
  StationaryResult res;
  GridFunction f = f0 ? f0->normalized() : GridFunction(M.n(), 1.0);
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    GridFunction next = M.transport(f);
    const double m = next.integral();
    if (!(m > 0.0)) throw std::runtime_error("transported density lost all mass");
    next = next.scaled(1.0 / m);
    res.residual = l1_distance(next, f);
    res.iterations = it;
    f = std::move(next);
    if (res.residual <= cfg.power_iteration_tol) {
      res.converged = true;
      break;
    }
  }
  res.density = std::move(f);
  return res;
}

/// One preimage term of L_T evaluated at some point: weight · f(y).
struct PreimageTerm {
  std::size_t point;
  double y;
  double weight;  // p_k(y) / T_k'(y)
};

/// Precomputed preimage structure of L_T at a fixed set of points in [0,1];
/// reusable across many densities.
class ExactOperator {
 public:
  ExactOperator(const RandomMapSystem& sys, std::vector<double> points)
      : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double x = points_[i];
      require_unit_interval(x, "apply_exact");
      for (std::size_t k = 0; k < sys.size(); ++k) {
        for (Side side : {Side::left, Side::right}) {
          // At x = 0 only the fixed point at the origin contributes.
          if (x == 0.0 && side == Side::right) continue;
          const auto y = sampling_preimage(sys.map(k), side, x);
          if (!y) continue;
          const double w = sys.prob(k, *y) / sys.map(k).branch(side).derivative(*y);
          if (w != 0.0) terms_.push_back({i, *y, w});
        }
      }
    }
  }

  /// L_T f sampled at cell midpoints of an n-cell grid.
  static ExactOperator at_midpoints(const RandomMapSystem& sys, std::size_t n) {
    std::vector<double> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return ExactOperator(sys, std::move(pts));
  }

  const std::vector<double>& points() const { return points_; }
  const std::vector<PreimageTerm>& terms() const { return terms_; }

  std::vector<double> apply(const GridFunction& f) const {
    std::vector<double> out(points_.size(), 0.0);
    for (const auto& t : terms_) out[t.point] += t.weight * f.at(t.y);
    return out;
  }

 private:
  std::vector<double> points_;
  std::vector<PreimageTerm> terms_;
};

/// (L_T f)(x) with f read by cell lookup.
inline double apply_exact(const RandomMapSystem& sys, const GridFunction& f, double x) {
  return ExactOperator(sys, {x}).apply(f)[0];
}

/// L_T f sampled at the cell midpoints of f's grid.
inline GridFunction exact_image(const RandomMapSystem& sys, const GridFunction& f) {
  return GridFunction(ExactOperator::at_midpoints(sys, f.n()).apply(f));
}

struct InvarianceReport {
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> first_failure;  // trial index
  bool within_hypothesis = false;            // A >= 4/(1-α)

  double pass_rate() const { return trials ? static_cast<double>(passed) / trials : 0.0; }
  bool all_pass() const { return trials > 0 && passed == trials; }
};

inline constexpr double kInvarianceSlack = 1e-6;

/// Draws random cone elements f, evaluates L_T f at the n cell midpoints and
/// checks cone membership of the result.
inline InvarianceReport verify_cone_invariance(const RandomMapSystem& sys, const ConeParams& cone,
                                               std::size_t trials, std::size_t n,
                                               std::uint64_t seed = 0,
                                               double slack = kInvarianceSlack) {
  InvarianceReport rep;
  rep.within_hypothesis = cone.A >= ConeParams::invariance_threshold(cone.alpha);
  const auto op = ExactOperator::at_midpoints(sys, n);
  CounterRng rng(seed, 34);
  for (std::size_t t = 0; t < trials; ++t) {
    const GridFunction f = random_cone_element(n, cone, rng);
    const GridFunction image(op.apply(f));
    const ConeReport c = cone_check(image, cone, slack);
    ++rep.trials;
    rep.worst_margin = std::min(rep.worst_margin, c.margin);
    if (c.pass()) {
      ++rep.passed;
    } else if (!rep.first_failure) {
      rep.first_failure = t;
    }
  }
  return rep;
}

struct LowerBoundReport {
  double gamma = std::numeric_limits<double>::infinity();  // min over starts of min_x L^N f
  std::vector<double> per_start;

  bool positive() const { return gamma > 0.0; }
};

/// Applies the Ulam operator n_iterates times to each start (unit mass) and
/// records the smallest density value reached.
inline LowerBoundReport lower_bound_from(const UlamMatrix& M, const std::vector<GridFunction>& starts,
                                         std::size_t n_iterates) {
  LowerBoundReport rep;
  for (const auto& s : starts) {
    GridFunction f = s.normalized();
    for (std::size_t it = 0; it < n_iterates; ++it) f = M.transport(f);
    const double m = *std::min_element(f.values().begin(), f.values().end());
    rep.per_start.push_back(m);
    rep.gamma = std::min(rep.gamma, m);
  }
  return rep;
}

/// Empirical lower bound γ̂ from the uniform density and four random cone
/// elements.
inline LowerBoundReport verify_lower_bound(const RandomMapSystem& sys, const ConeParams& cone,
                                           std::size_t n_iterates, std::size_t n,
                                           const TransferConfig& cfg = {}, std::uint64_t seed = 0) {
  const UlamMatrix M = build_ulam(sys, n, cfg);
  CounterRng rng(seed, 38);
  std::vector<GridFunction> starts{GridFunction(n, 1.0)};
  for (int s = 0; s < 4; ++s) starts.push_back(random_cone_element(n, cone, rng));
  return lower_bound_from(M, starts, n_iterates);
}

}  // namespace acimlab
