// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "acimlab/acimlab.hpp"

using namespace acimlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

GridFunction random_density(std::size_t n, CounterRng& rng) {
  GridFunction g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    g[i] = u < 0.05 ? rng.uniform(0.0, 50.0) : u;  // occasional spikes
  }
  return g.normalized();
}

Outcome stochasticity() {
  double worst = 0.0;
  for (const auto& sys : {presets::example4(), presets::pure_t1()}) {
    for (std::size_t n : {64, 256, 1024}) worst = std::max(worst, build_ulam(sys, n).max_row_sum_error());
  }
  return {worst <= 1e-10, "max |row sum - 1| = " + num(worst)};
}

Outcome operator_axioms() {
  const std::size_t n = 512;
  const UlamMatrix M = build_ulam(presets::example4(), n);
  CounterRng rng(2);
  double lin = 0.0, mass = 0.0, contraction = -INFINITY, min_image = INFINITY;
  for (int t = 0; t < 100; ++t) {
    const GridFunction f = random_density(n, rng), g = random_density(n, rng);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    const GridFunction pf = M.transport(f), pg = M.transport(g);
    lin = std::max(lin, l1_distance(M.transport(f.scaled(a) + g.scaled(b)), pf.scaled(a) + pg.scaled(b)));
    min_image = std::min({min_image, *std::min_element(pf.values().begin(), pf.values().end()),
                          *std::min_element(pg.values().begin(), pg.values().end())});
    mass = std::max({mass, std::abs(pf.integral() - f.integral()), std::abs(pg.integral() - g.integral())});
    contraction = std::max(contraction, l1_distance(pf, pg) - l1_distance(f, g));
  }
  const bool ok = lin <= 1e-12 && min_image >= 0.0 && mass <= 1e-8 && contraction <= 1e-10;
  return {ok, "linearity " + num(lin) + ", min image " + num(min_image) + ", mass drift " + num(mass) +
                  ", max(|Pf-Pg| - |f-g|) " + num(contraction)};
}

Outcome lemma_suite() {
  const auto sys = presets::example4(0.5, 0.25);
  const ConeParams cone = ConeParams::at_threshold(0.5);
  CounterRng rng(3);
  const GridFunction f = random_cone_element(1024, cone, rng);
  const InequalityReport rep = lemma32_suite(f, cone, 10'000, sys, 3);
  double residual = 0.0;
  for (int i = 0; i < 10'000; ++i) {
    const double y = rng.uniform();
    for (const auto& m : sys.maps()) {
      residual = std::max(residual, std::abs(m.left().value(*m.left().inverse(y)) - y));
    }
  }
  const bool ok = rep.all_pass() && residual <= 1e-13;
  return {ok, std::string("items ") + (rep.pointwise_power.pass ? "P" : "F") +
                  (rep.pointwise_mean.pass ? "P" : "F") + (rep.preimage_bounds.pass ? "P" : "F") +
                  (rep.concavity.pass ? "P" : "F") + (rep.power_gap.pass ? "P" : "F") +
                  ", inversion residual " + num(residual)};
}

Outcome cone_invariance() {
  const auto rep = verify_cone_invariance(presets::example4(), ConeParams::at_threshold(0.5), 100, 1024, 4);
  return {rep.all_pass(), std::to_string(rep.passed) + "/" + std::to_string(rep.trials) +
                              " in cone, worst margin " + num(rep.worst_margin)};
}

Outcome monotone_image() {
  const auto sys = presets::example4();
  const auto op = ExactOperator::at_midpoints(sys, 1024);
  CounterRng rng(5);
  std::size_t ok = 0;
  double worst_rise = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto img = op.apply(random_nonincreasing_density(1024, rng));
    double rise = 0.0;
    for (std::size_t i = 1; i < img.size(); ++i) rise = std::max(rise, img[i] - img[i - 1]);
    worst_rise = std::max(worst_rise, rise);
    if (rise <= 1e-8) ++ok;
  }
  return {ok == 100, std::to_string(ok) + "/100 nonincreasing, largest rise " + num(worst_rise)};
}

Outcome uniqueness() {
  const std::size_t n = 1024;
  TransferConfig cfg;
  cfg.power_iteration_tol = 1e-13;
  const UlamMatrix M = build_ulam(presets::example4(), n, cfg);
  const auto a = stationary_density(M, cfg);
  GridFunction spike(n, 0.0);
  spike[0] = spike[1] = n / 2.0;
  const auto b = stationary_density(M, cfg, spike);
  const double d = l1_distance(a.density, b.density);
  const double residual = l1_distance(M.transport(a.density), a.density);
  const double fmin = *std::min_element(a.density.values().begin(), a.density.values().end());
  const bool dec = cone_check(a.density, {1e300, 0.5}).nonincreasing;
  const bool ok = a.converged && b.converged && d <= 1e-8 && residual <= 1e-10 && dec && fmin > 0.0;
  return {ok, "L1 between starts " + num(d) + ", residual " + num(residual) + ", min " + num(fmin) +
                  (dec ? ", nonincreasing" : ", NOT nonincreasing")};
}

Outcome simulation() {
  const auto sys = presets::example4();
  const std::size_t steps = 10'000'000;
  const auto hist = chain_histogram(sys, 0.3, steps, 42, 0, 512, default_burn_in(steps));
  const auto h = stationary_density(build_ulam(sys, 512)).density;
  const double d = l1_distance(hist.density(), h);
  return {d <= 0.05, "L1 to Ulam density " + num(d)};
}

Outcome skew() {
  const auto sys = presets::example4();
  const bool fixed = skew_step(sys, {0.0, 0.0}) == SkewState{0.0, 0.0};
  const double lyap0 = horizontal_lyapunov(sys, {0.0, 0.0}, 100'000);
  const auto mc = marginal_consistency(sys, random_fiber_start(0.3, 42), 10'000'000, 512);
  const auto o = skew_orbit(sys, random_fiber_start(0.3, 43), 100'000);
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < o.symbols.size(); ++t) {
    if (o.states[t + 1].x != sys.map(o.symbols[t])(o.states[t].x)) ++mismatches;
  }
  const bool ok = fixed && lyap0 == 0.0 && mc.distance <= 0.05 && mismatches == 0;
  return {ok, std::string(fixed ? "S(0,0)=(0,0)" : "S(0,0) moved") + ", Lyapunov at origin " + num(lyap0) +
                  ", marginal L1 " + num(mc.distance) + ", projection mismatches " +
                  std::to_string(mismatches)};
}

Outcome stability() {
  EpsilonFamily fam;
  fam.alpha = 0.6;
  fam.epsilons = {0.2, 0.1, 0.05, 0.025, 0.0};
  TransferConfig cfg;
  cfg.threads = 4;
  const std::size_t n = 2048;
  const auto sweep = stability_sweep(fam, n, cfg);
  bool monotone = true;
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    monotone = monotone && sweep.points[i].l1_distance <= sweep.points[i - 1].l1_distance + 1e-3;
  }
  bool converged = sweep.reference_converged;
  for (const auto& p : sweep.points) converged = converged && p.converged;
  const double control = sweep.points.back().l1_distance;

  const auto ref = build_ulam(reference_system(fam), n, cfg);
  CounterRng rng(9);
  bool defect_ok = true;
  double worst = -INFINITY;
  for (double e : fam.epsilons) {
    const auto pert = build_ulam(make_perturbed_system(fam, e), n, cfg);
    const double sup = grid_sup(fam.p2_profile(e));
    for (int t = 0; t < 100; ++t) {
      const auto f = random_cone_element(n, ConeParams::at_threshold(fam.alpha), rng);
      const auto r = operator_defect(pert, ref, sup, f);
      defect_ok = defect_ok && r.holds && r.defect <= 2 * e + 1e-6;
      worst = std::max(worst, r.defect - 2 * e);
    }
  }
  std::string dists;
  for (const auto& p : sweep.points) dists += (dists.empty() ? "" : " ") + num(p.l1_distance);
  const bool ok = monotone && converged && control <= cfg.power_iteration_tol && defect_ok;
  return {ok, "distances [" + dists + "], control " + num(control) + ", max(defect - 2eps) " + num(worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "acimlab_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"simulate --set steps=1000000 --set cells=512 --set dump_orbit=true",
       {"empirical_density.csv", "orbit.csv"}},
      {"simulate --set steps=1000000 --set chains=8", {"empirical_density.csv"}},
      {"invariant-density --set n=1024", {"invariant_density.csv"}},
      {"ulam --set n=512", {"ulam_matrix.csv"}},
      {"skew-simulate --set steps=1000000", {"skew_marginal.csv", "skew_hist2d.csv"}},
      {"stability-sweep --set n=512", {"sweep.csv", "f_star.csv"}},
  };
  std::size_t compared = 0, identical = 0;
  std::string failed;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const fs::path a = root / (std::to_string(r) + "a"), b = root / (std::to_string(r) + "b");
    for (const auto& [dir, threads] : {std::pair{a, 1}, std::pair{b, 4}}) {
      const std::string cmd = std::string(ACIMLAB_CLI) + " " + runs[r].first + " --seed 7 --threads " +
                              std::to_string(threads) + " --out " + dir.string() + " >/dev/null 2>&1";
      const int raw = std::system(cmd.c_str());
      if (!WIFEXITED(raw) || WEXITSTATUS(raw) != 0) failed += " [exit " + runs[r].first + "]";
    }
    for (const auto& f : runs[r].second) {
      ++compared;
      const std::string x = slurp(a / f);
      if (!x.empty() && x == slurp(b / f)) {
        ++identical;
      } else {
        failed += " " + f;
      }
    }
  }
  fs::remove_all(root);
  return {identical == compared && failed.empty(),
          std::to_string(identical) + "/" + std::to_string(compared) + " files byte-identical" + failed};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;  // 0: no runtime requirement
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"stochasticity", 10, stochasticity},
      {"operator axioms", 0, operator_axioms},
      {"pointwise and preimage inequalities", 5, lemma_suite},
      {"cone invariance", 0, cone_invariance},
      {"monotone image", 0, monotone_image},
      {"existence and uniqueness", 60, uniqueness},
      {"simulation cross-validation", 60, simulation},
      {"skew product", 0, skew},
      {"stochastic stability", 300, stability},
      {"determinism", 0, determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += ", over the " + num(c.budget_seconds) + " s budget";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %2zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
