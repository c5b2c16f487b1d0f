#pragma once

// Verification of a solved game: exact expected payoffs over the finite tree
// of reachable beliefs, seeded Monte Carlo play of the underlying game, and
// one-shot deviation checks for both players.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sigpick/common.hpp"
#include "sigpick/game.hpp"
#include "sigpick/solver.hpp"
#include "sigpick/strategy.hpp"

namespace sigpick {

struct BeliefChild {
  std::size_t vertex = 0;  // index into the stage triangulation
  double probability = 0.0;
  std::size_t action = 0;
  std::optional<std::size_t> next;  // node index, empty when the game ends
};

struct BeliefNode {
  std::size_t stage = 0;
  SimplexPoint belief;  // public belief before the experiment
  double reach = 0.0;   // probability of reaching this node
  std::vector<BeliefChild> children;
  double value_A = 0.0, value_B = 0.0;  // expected payoff-to-go
};

struct BeliefTree {
  std::vector<BeliefNode> nodes;  // nodes[0] is the root
};

namespace detail {

inline std::vector<long long> belief_key(std::size_t t, const SimplexPoint& p) {
  std::vector<long long> k{static_cast<long long>(t)};
  for (double v : p.coords()) k.push_back(std::llround(v * 1e9));
  return k;
}

}  // namespace detail

/// Expands every belief reachable under the equilibrium strategies, merging
/// nodes with equal stage and belief (to 9 decimals).
inline BeliefTree belief_tree(const EquilibriumSolution& sol, std::size_t node_cap = 1000000) {
  const auto& g = sol.spec;
  BeliefTree tree;
  std::map<std::vector<long long>, std::size_t> index;
  auto node_for = [&](std::size_t t, const SimplexPoint& p) {
    auto key = detail::belief_key(t, p);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    if (tree.nodes.size() >= node_cap)
      throw ResourceError("belief tree exceeds the node cap of " + std::to_string(node_cap) + " (reached stage " +
                          std::to_string(t + 1) + " with " + std::to_string(tree.nodes.size()) + " nodes)");
    tree.nodes.push_back(BeliefNode{t, p, 0.0, {}, 0.0, 0.0});
    index.emplace(std::move(key), tree.nodes.size() - 1);
    return tree.nodes.size() - 1;
  };

  node_for(0, SimplexPoint(g.prior));
  // Stages only move forward, so creation order is a topological order.
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const std::size_t t = tree.nodes[i].stage;
    const auto& st = sol.stages[t];
    const SimplexPoint pi = tree.nodes[i].belief;
    std::vector<BeliefChild> children;
    for (const auto& [v, w] : barycentric_weights(*st.triangulation, pi, sol.tol.geom)) {
      BeliefChild c{v, w, st.receiver_action[v], std::nullopt};
      if (!g.stage(t).terminating[c.action] && t + 1 < g.horizon)
        c.next = node_for(t + 1, push_forward(g, t, st.vertices()[v], c.action));
      children.push_back(c);
    }
    tree.nodes[i].children = std::move(children);
  }

  tree.nodes[0].reach = 1.0;
  for (auto& n : tree.nodes)
    for (const auto& c : n.children)
      if (c.next) tree.nodes[*c.next].reach += n.reach * c.probability;
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    auto& n = tree.nodes[i];
    const auto& s = g.stage(n.stage);
    const auto& verts = sol.stages[n.stage].vertices();
    n.value_A = n.value_B = 0.0;
    for (const auto& c : n.children) {
      double a = 0.0, b = 0.0;
      for (std::size_t x = 0; x < s.n_states(); ++x) {
        a += s.reward_A[x][c.action] * verts[c.vertex][x];
        b += s.reward_B[x][c.action] * verts[c.vertex][x];
      }
      if (c.next) {
        a += tree.nodes[*c.next].value_A;
        b += tree.nodes[*c.next].value_B;
      }
      n.value_A += c.probability * a;
      n.value_B += c.probability * b;
    }
  }
  return tree;
}

/// Expected total payoffs (principal, receiver) under the equilibrium.
inline std::pair<double, double> exact_value(const EquilibriumSolution& sol, std::size_t node_cap = 1000000) {
  const auto tree = belief_tree(sol, node_cap);
  return {tree.nodes[0].value_A, tree.nodes[0].value_B};
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct SimulationReport {
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
  double mean_A = 0.0, mean_B = 0.0;
  double se_A = 0.0, se_B = 0.0;

  bool operator==(const SimulationReport&) const = default;
};

/// Engine for trajectory `index`, independent of how trajectories are
/// scheduled.
inline std::mt19937_64 trajectory_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Plays one trajectory of the game under the equilibrium strategies and
/// returns the realised payoffs.
inline std::pair<double, double> play(const EquilibriumSolution& sol, std::mt19937_64& rng) {
  const auto& g = sol.spec;
  const PrincipalPolicy principal(sol);
  const ReceiverPolicy receiver(sol);
  std::discrete_distribution<std::size_t> draw_x(g.prior.begin(), g.prior.end());
  std::size_t x = draw_x(rng);
  SimplexPoint pi(g.prior);
  double a = 0.0, b = 0.0;
  for (std::size_t t = 0; t < g.horizon; ++t) {
    const auto& s = g.stage(t);
    const Experiment sigma = principal(t, pi);
    std::discrete_distribution<std::size_t> draw_m(sigma.rows[x].begin(), sigma.rows[x].end());
    const std::size_t m = draw_m(rng);
    const SimplexPoint post = bayes_update(pi, sigma, m, sol.tol.geom);
    const std::size_t u = receiver(t, post);
    a += s.reward_A[x][u];
    b += s.reward_B[x][u];
    if (s.terminating[u] || t + 1 == g.horizon) break;
    std::discrete_distribution<std::size_t> draw_next(s.kernel[x][u].begin(), s.kernel[x][u].end());
    x = draw_next(rng);
    pi = push_forward(g, t, post, u);
  }
  return {a, b};
}

inline SimulationReport simulate(const EquilibriumSolution& sol, std::uint64_t seed, std::size_t n,
                                 unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("simulate needs at least one trajectory");
  std::vector<double> pa(n), pb(n);
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto rng = trajectory_engine(seed, i);
      std::tie(pa[i], pb[i]) = play(sol, rng);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(run, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  // Fixed-order reduction keeps the report independent of the thread count.
  auto stats = [n](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return std::pair{mean, sd / std::sqrt(static_cast<double>(n))};
  };
  SimulationReport r;
  r.trajectories = n;
  r.seed = seed;
  std::tie(r.mean_A, r.se_A) = stats(pa);
  std::tie(r.mean_B, r.se_B) = stats(pb);
  return r;
}

// ---------------------------------------------------------------------------
// One-shot deviations

struct ProbeSpec {
  std::size_t random_beliefs = 25;  // per stage, on top of vertices/reachable beliefs
  std::size_t deviations = 20;      // random experiments per checked belief
  std::uint64_t seed = 7;
  double slack = 1e-9;
};

struct Violation {
  enum class Player { principal, receiver } player;
  std::size_t stage = 0;
  Vec belief;
  double magnitude = 0.0;
  std::string detail;
};

struct DeviationReport {
  std::size_t receiver_checks = 0;
  std::size_t principal_checks = 0;
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
};

namespace detail {

inline SimplexPoint random_belief(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> gam(1.0, 1.0);
  Vec v(n);
  double s = 0.0;
  for (double& x : v) s += (x = gam(rng));
  for (double& x : v) x /= s;
  return SimplexPoint::clamped(std::move(v));
}

// Random experiment with 2..n+1 messages and Dirichlet rows; occasionally
// sparse so that boundary posteriors are exercised.
inline Experiment random_experiment(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(2, n + 1);
  const std::size_t m = count(rng);
  std::bernoulli_distribution sparse(0.3);
  Experiment e;
  for (std::size_t x = 0; x < n; ++x) {
    Vec row = random_belief(m, rng).coords();
    if (sparse(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      row.assign(m, 0.0);
      row[pick(rng)] = 1.0;
    }
    e.rows.push_back(std::move(row));
  }
  return e;
}

}  // namespace detail

inline DeviationReport one_shot_deviation_check(const EquilibriumSolution& sol, const ProbeSpec& probes = {},
                                                std::size_t node_cap = 1000000) {
  const auto& g = sol.spec;
  const ReceiverPolicy receiver(sol);
  DeviationReport rep;
  std::mt19937_64 rng(probes.seed);

  std::vector<std::vector<SimplexPoint>> reachable(g.horizon);
  for (const auto& n : belief_tree(sol, node_cap).nodes) reachable[n.stage].push_back(n.belief);

  for (std::size_t t = 0; t < g.horizon; ++t) {
    const auto& st = sol.stages[t];
    const std::size_t nx = g.stage(t).n_states();
    std::vector<SimplexPoint> probe;
    for (std::size_t k = 0; k < probes.random_beliefs; ++k) probe.push_back(detail::random_belief(nx, rng));

    // Receiver: the prescribed action is a best response at every vertex
    // (a superset of the reachable posteriors) and at every probe.
    std::vector<SimplexPoint> rcheck = st.vertices();
    rcheck.insert(rcheck.end(), probe.begin(), probe.end());
    for (const auto& pi : rcheck) {
      const std::size_t u = receiver(t, pi);
      const QValues q = evaluate(st.objective, pi);
      ++rep.receiver_checks;
      for (std::size_t alt = 0; alt < q.B.size(); ++alt) {
        const double gain = q.B[alt] - q.B[u];
        if (gain > probes.slack)
          rep.violations.push_back({Violation::Player::receiver, t, pi.coords(), gain,
                                    "action " + g.stage(t).actions[alt] + " beats prescribed " + g.stage(t).actions[u]});
      }
    }

    // Principal: no inducible split of the belief beats the equilibrium value.
    std::vector<SimplexPoint> pcheck = reachable[t];
    pcheck.insert(pcheck.end(), probe.begin(), probe.end());
    for (const auto& pi : pcheck) {
      const double v = st.value_A(pi);
      std::vector<Experiment> devs;
      devs.push_back(Experiment{std::vector<Vec>(nx, Vec{1.0}), {}});
      {
        Experiment reveal;
        for (std::size_t x = 0; x < nx; ++x) {
          Vec row(nx, 0.0);
          row[x] = 1.0;
          reveal.rows.push_back(row);
        }
        devs.push_back(std::move(reveal));
      }
      for (std::size_t k = 0; k < probes.deviations; ++k) devs.push_back(detail::random_experiment(nx, rng));
      for (const auto& sigma : devs) {
        const SupportMeasure eta = induced_distribution(pi, sigma, sol.tol.geom);
        double dev = 0.0;
        for (const auto& atom : eta.atoms) {
          const QValues q = evaluate(st.objective, atom.point);
          dev += atom.weight * q.A[receiver(t, atom.point)];
        }
        ++rep.principal_checks;
        if (dev - v > probes.slack)
          rep.violations.push_back({Violation::Player::principal, t, pi.coords(), dev - v,
                                    "split into " + std::to_string(eta.atoms.size()) + " posteriors gains"});
      }
    }
  }
  return rep;
}

}  // namespace sigpick
