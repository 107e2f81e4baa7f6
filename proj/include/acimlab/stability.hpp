#pragma once

// ε-perturbed family T_ε = {T_1, T_{1,ε}; 1 - p_{2,ε}, p_{2,ε}} where T_{1,ε}
// has left exponent α - ε, and L¹ convergence of its invariant density to
// that of T_1 as ε → 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/maps.hpp"
#include "acimlab/probability.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/transfer.hpp"

namespace acimlab {

struct EpsilonFamily {
  double alpha = 0.6;
  Branch g1 = Branch::affine(2.0, -1.0);
  Branch g1_eps = Branch::affine(2.0, -1.0);
  /// p_{2,ε}; the default is the constant ε.
  std::function<ProbabilityComponent(double)> p2_profile = [](double eps) {
    return ProbabilityComponent::constant(eps);
  };
  std::vector<double> epsilons;
  /// When false the second map keeps exponent α (only probabilities move).
  bool perturb_exponent = true;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("family alpha must lie in (0,1)");
    if (epsilons.empty()) throw ConfigError("family needs at least one epsilon");
    for (double e : epsilons) {
      if (!(e >= 0.0 && e < alpha)) {
        throw ConfigError("epsilon " + std::to_string(e) + " outside [0, alpha)");
      }
    }
  }
};

/// sup_x of a probability component on a dense grid plus its breakpoints.
inline double grid_sup(const ProbabilityComponent& p, std::size_t grid_points = 4097) {
  double s = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    s = std::max(s, p(static_cast<double>(i) / static_cast<double>(grid_points - 1)));
  }
  for (double b : p.breaks()) {
    s = std::max(s, p(b));
    if (b > 0.0) s = std::max(s, p(std::nextafter(b, 0.0)));
  }
  return s;
}

/// T_1 alone, as the two-map system {T_1, T_1; 1, 0}.
inline RandomMapSystem reference_system(const EpsilonFamily& fam) {
  const MapSpec t1(Branch::lsv_left(fam.alpha), fam.g1);
  return RandomMapSystem({t1, t1}, ProbabilityField({ProbabilityComponent::constant(1.0),
                                                     ProbabilityComponent::constant(0.0)}));
}

/// Builds T_ε. For ε > 0 the result must satisfy conditions (A) and (B);
/// ε = 0 is accepted as the degenerate control (p_2 ≡ 0).
inline RandomMapSystem make_perturbed_system(const EpsilonFamily& fam, double eps) {
  fam.validate();
  if (std::find(fam.epsilons.begin(), fam.epsilons.end(), eps) == fam.epsilons.end()) {
    throw ConfigError("epsilon " + std::to_string(eps) + " is not part of the family");
  }
  const double second_exponent = fam.perturb_exponent ? fam.alpha - eps : fam.alpha;
  ProbabilityComponent p2 = fam.p2_profile(eps);
  ProbabilityComponent p1 = ProbabilityComponent::complement(std::span(&p2, 1));
  RandomMapSystem sys({MapSpec(Branch::lsv_left(fam.alpha), fam.g1),
                       MapSpec(Branch::lsv_left(second_exponent), fam.g1_eps)},
                      ProbabilityField({std::move(p1), std::move(p2)}));
  if (eps > 0.0) {
    const ConditionReport rep = check_conditions(sys, 1024);
    if (!rep.all_pass()) {
      throw ConfigError("perturbed system at epsilon " + std::to_string(eps) +
                        " violates condition " + (rep.condition_A_pass() ? "(B)" : "(A)"));
    }
  }
  return sys;
}

struct StabilityPoint {
  double epsilon;
  double l1_distance;
  bool converged;  // both stationary solves reached tolerance
  GridFunction density;
};

struct StabilitySweep {
  GridFunction reference;  // f*
  bool reference_converged = false;
  std::vector<StabilityPoint> points;  // descending epsilon
};

/// ‖f_ε − f*‖₁ at a fixed Ulam resolution n for every ε of the family.
inline StabilitySweep stability_sweep(const EpsilonFamily& fam, std::size_t n,
                                      const TransferConfig& cfg = {}) {
  fam.validate();
  if (n < 256) throw ConfigError("stability sweep needs n >= 256");
  StabilitySweep out;
  auto ref = stationary_density(build_ulam(reference_system(fam), n, cfg), cfg);
  out.reference = std::move(ref.density);
  out.reference_converged = ref.converged;

  std::vector<double> eps = fam.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  for (double e : eps) {
    auto st = stationary_density(build_ulam(make_perturbed_system(fam, e), n, cfg), cfg);
    const double d = l1_distance(st.density, out.reference);
    out.points.push_back({e, d, st.converged && ref.converged, std::move(st.density)});
  }
  return out;
}

struct DefectReport {
  double defect;  // ‖L_{T_ε} f − P_{T_1} f‖₁
  double bound;   // 2 sup p_{2,ε} m(f)
  bool holds;
};

inline constexpr double kDefectSlack = 1e-6;

/// Defect between the perturbed and the unperturbed Ulam operators applied
/// to f, compared against 2 sup_x p_{2,ε}(x) m(f).
inline DefectReport operator_defect(const UlamMatrix& perturbed, const UlamMatrix& reference,
                                    double sup_p2, const GridFunction& f) {
  const double d = l1_distance(perturbed.transport(f), reference.transport(f));
  const double bound = 2.0 * sup_p2 * f.integral();
  return {d, bound, d <= bound + kDefectSlack};
}

inline DefectReport operator_defect(const EpsilonFamily& fam, double eps, const GridFunction& f,
                                    std::size_t n, const TransferConfig& cfg = {}) {
  if (f.n() != n) throw std::invalid_argument("density grid does not match n");
  const auto perturbed = build_ulam(make_perturbed_system(fam, eps), n, cfg);
  const auto reference = build_ulam(reference_system(fam), n, cfg);
  return operator_defect(perturbed, reference, grid_sup(fam.p2_profile(eps)), f);
}

}  // namespace acimlab
