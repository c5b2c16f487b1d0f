#pragma once

// Property checks that report tallies instead of asserting, so that both the
// unit tests and the acceptance runner can use them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "sigpick/evaluator.hpp"
#include "sigpick/solver.hpp"
#include "support/oracles.hpp"

namespace props {

using namespace sigpick;

struct Tally {
  std::size_t checks = 0, failures = 0;
  double worst = 0.0;  // largest excess over tolerance
  std::string first;

  // `excess` > 0 means failure by that amount.
  void record(double excess, const std::string& what) {
    ++checks;
    if (excess > 0.0 || std::isnan(excess)) {
      if (!failures++) first = what;
      worst = std::max(worst, std::isnan(excess) ? std::numeric_limits<double>::infinity() : excess);
    }
  }
  void merge(const Tally& o) {
    if (!failures && o.failures) first = o.first;
    checks += o.checks;
    failures += o.failures;
    worst = std::max(worst, o.worst);
  }
  bool ok() const { return failures == 0 && checks > 0; }
};

inline std::vector<Vec> coords_of(const std::vector<SimplexPoint>& ps) {
  std::vector<Vec> out;
  for (const auto& p : ps) out.push_back(p.coords());
  return out;
}

inline std::string at(const char* what, std::size_t t) { return std::string(what) + " at stage " + std::to_string(t + 1); }

inline Tally barycentric_mean(const EquilibriumSolution& sol, std::uint64_t seed, int per_stage = 1000) {
  Tally tally;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < sol.stages.size(); ++t) {
    const auto& tri = *sol.stages[t].triangulation;
    for (int i = 0; i < per_stage; ++i) {
      const auto x = oracle::random_point(tri.n_states(), rng);
      const auto eta = barycentric(tri, x);
      tally.record(max_abs_diff(eta.mean(), x.coords()) - 1e-12, at("barycentric mean", t));
      tally.record(std::abs(eta.total_weight() - 1.0) - 1e-12, at("barycentric mass", t));
    }
  }
  return tally;
}

inline Experiment random_experiment(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  Experiment e;
  for (std::size_t x = 0; x < n; ++x) e.rows.push_back(oracle::random_point(m, rng).coords());
  return e;
}

inline Tally martingale(std::uint64_t seed, int trials = 1000) {
  Tally tally;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < trials; ++i) {
    const std::size_t n = 2 + i % 3;
    const auto pi = oracle::random_point(n, rng);
    const auto eta = induced_distribution(pi, random_experiment(n, 1 + i % 5, rng));
    tally.record(max_abs_diff(eta.mean(), pi.coords()) - 1e-9, "martingale");
  }
  return tally;
}

inline Tally split_round_trip(std::uint64_t seed, int trials = 1000) {
  Tally tally;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < trials; ++i) {
    const std::size_t n = 2 + i % 3;
    const std::size_t k = 1 + i % n;
    SupportMeasure eta;
    const auto w = oracle::random_point(k, rng);
    for (std::size_t a = 0; a < k; ++a) eta.atoms.push_back({oracle::random_point(n, rng), w[a]});
    const auto pi = SimplexPoint::clamped(eta.mean());
    const auto back = induced_distribution(pi, split_experiment(pi, eta)).canonical(1e-12);
    const auto want = eta.canonical(1e-12);
    if (back.atoms.size() != want.atoms.size()) {
      tally.record(1.0, "split round trip: atom count");
      continue;
    }
    double err = 0.0;
    for (std::size_t a = 0; a < want.atoms.size(); ++a) {
      err = std::max(err, max_abs_diff(back.atoms[a].point.coords(), want.atoms[a].point.coords()));
      err = std::max(err, std::abs(back.atoms[a].weight - want.atoms[a].weight));
    }
    tally.record(err - 1e-12, "split round trip");
  }
  return tally;
}

// Receiver value from raw game data and the next stage's vertex values, with
// brute-force interpolation.
inline double bellman_receiver(const EquilibriumSolution& sol, std::size_t t, const SimplexPoint& pi) {
  const auto& g = sol.spec;
  const auto& s = g.stage(t);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < s.n_actions(); ++u) {
    double q = 0.0;
    for (std::size_t x = 0; x < s.n_states(); ++x) q += s.reward_B[x][u] * pi[x];
    if (t + 1 < g.horizon && !s.terminating[u]) {
      Vec nb(g.stage(t + 1).n_states(), 0.0);
      for (std::size_t x = 0; x < s.n_states(); ++x)
        for (std::size_t y = 0; y < nb.size(); ++y) nb[y] += pi[x] * s.kernel[x][u][y];
      const auto& next = sol.stages[t + 1];
      q += oracle::interpolate(coords_of(next.vertices()), next.triangulation->simplices(), next.valuesB, nb);
    }
    best = std::max(best, q);
  }
  return best;
}

struct StageTallies {
  Tally concavity, majorization, touching, bellman;
};

inline StageTallies stage_properties(const EquilibriumSolution& sol, std::uint64_t seed) {
  StageTallies out;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < sol.stages.size(); ++t) {
    const auto& st = sol.stages[t];
    const std::size_t n = sol.spec.stage(t).n_states();
    const auto psi = receiver_objective(st.objective, sol.tol.tie);
    for (int i = 0; i < 1000; ++i) {
      const auto a = oracle::random_point(n, rng), b = oracle::random_point(n, rng);
      Vec m(n);
      for (std::size_t r = 0; r < n; ++r) m[r] = 0.5 * (a[r] + b[r]);
      out.concavity.record(0.5 * (st.value_A(a) + st.value_A(b)) - st.value_A(SimplexPoint::clamped(m)) - 1e-9,
                           at("concavity", t));
    }
    for (const auto& x : oracle::lattice(n, n == 2 ? 1000 : 40)) {
      const auto p = SimplexPoint::clamped(x);
      const auto pick = psi.evaluate(p);
      out.majorization.record(pick.value - st.value_A(p) - 1e-9, at("majorization", t));
      out.bellman.record(std::abs(pick.best_score - bellman_receiver(sol, t, p)) - 1e-9, at("receiver Bellman", t));
    }
    for (const auto& v : st.vertices()) {
      const auto pick = psi.evaluate(v);
      out.touching.record(std::abs(st.value_A(v) - pick.value) - 1e-9, at("vertex touching (principal)", t));
      out.touching.record(std::abs(st.value_B(v) - pick.best_score) - 1e-9, at("vertex touching (receiver)", t));
    }
  }
  return out;
}

inline Tally deviations(const EquilibriumSolution& sol, std::uint64_t seed) {
  Tally tally;
  ProbeSpec probes;
  probes.seed = seed;
  const auto rep = one_shot_deviation_check(sol, probes);
  const std::size_t total = rep.receiver_checks + rep.principal_checks;
  tally.checks = total > rep.violations.size() ? total - rep.violations.size() : 0;
  for (const auto& v : rep.violations)
    tally.record(v.magnitude, at(v.player == Violation::Player::principal ? "principal deviation" : "receiver deviation",
                                 v.stage));
  return tally;
}

}  // namespace props
