#pragma once

// Backward induction over belief space. At each stage the receiver's
// per-action values q^B and the principal's q^A are piecewise linear in the
// public belief; the principal's tie-broken value is concavified and both
// value functions are interpolated on the resulting triangulation.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "sigpick/argcav.hpp"
#include "sigpick/common.hpp"
#include "sigpick/game.hpp"
#include "sigpick/geometry.hpp"

namespace sigpick {

/// q^i(pi, u) = sum_x r^i(x, u) pi(x) + V^i_{t+1}(l(pi, u)), continuation
/// dropped for terminating actions and at the last stage.
struct StageObjective {
  std::size_t stage = 0;
  std::vector<PiecewiseLinear> qA, qB;  // per action
  std::vector<bool> terminating;

  std::size_t n_actions() const { return qA.size(); }
};

struct QValues {
  Vec A, B;  // per action
};

inline QValues evaluate(const StageObjective& obj, const SimplexPoint& pi) {
  QValues q{Vec(obj.n_actions()), Vec(obj.n_actions())};
  for (std::size_t u = 0; u < obj.n_actions(); ++u) {
    q.A[u] = obj.qA[u](pi);
    q.B[u] = obj.qB[u](pi);
  }
  return q;
}

struct StageSolution {
  std::size_t stage = 0;
  std::shared_ptr<const Triangulation> triangulation;
  Vec valuesA, valuesB;  // per vertex
  std::vector<std::size_t> receiver_action;
  StageObjective objective;
  std::shared_ptr<const VertexInterpolant> VA, VB;

  double value_A(const SimplexPoint& pi) const { return (*VA)(pi); }
  double value_B(const SimplexPoint& pi) const { return (*VB)(pi); }
  const std::vector<SimplexPoint>& vertices() const { return triangulation->vertices(); }
};

struct EquilibriumSolution {
  GameSpec spec;
  Tolerances tol;
  std::vector<StageSolution> stages;  // stages[t], t = 0..T-1
  double value_A = 0.0, value_B = 0.0;  // at the prior
};

/// Receiver's tie-tolerant best responses at one belief: `tied` is the
/// argmax set, `best_score` the receiver value, `value` the principal value.
inline Selection receiver_best(const QValues& q, double tie = Tolerances{}.tie) {
  return select_best(q.B, q.A, tie);
}

/// Direct evaluation of the per-action values at `pi`, with `next` the
/// following stage's solution (null past the horizon).
inline QValues q_values(const GameSpec& g, std::size_t t, const SimplexPoint& pi, const StageSolution* next) {
  const auto& s = g.stage(t);
  if (pi.size() != s.n_states()) throw DomainError("belief does not match stage state count");
  if (next && next->stage != t + 1) throw DomainError("continuation is not the following stage");
  if (!next && t + 1 < g.horizon) throw DomainError("missing continuation before the horizon");
  QValues q{Vec(s.n_actions(), 0.0), Vec(s.n_actions(), 0.0)};
  for (std::size_t u = 0; u < s.n_actions(); ++u) {
    for (std::size_t x = 0; x < s.n_states(); ++x) {
      q.A[u] += s.reward_A[x][u] * pi[x];
      q.B[u] += s.reward_B[x][u] * pi[x];
    }
    if (next && !s.terminating[u]) {
      const SimplexPoint nb = push_forward(g, t, pi, u);
      q.A[u] += next->value_A(nb);
      q.B[u] += next->value_B(nb);
    }
  }
  return q;
}

inline StageObjective build_objective(const GameSpec& g, std::size_t t, const StageSolution* next) {
  const auto& s = g.stage(t);
  StageObjective obj;
  obj.stage = t;
  obj.terminating = s.terminating;
  for (std::size_t u = 0; u < s.n_actions(); ++u) {
    AffineFunctional rA{Vec(s.n_states()), 0.0}, rB{Vec(s.n_states()), 0.0};
    for (std::size_t x = 0; x < s.n_states(); ++x) {
      rA.weights[x] = s.reward_A[x][u];
      rB.weights[x] = s.reward_B[x][u];
    }
    if (next && !s.terminating[u]) {
      const AffineMap l = transition_map(g, t, u);
      obj.qA.emplace_back(rA, next->VA, l);
      obj.qB.emplace_back(rB, next->VB, l);
    } else {
      obj.qA.emplace_back(rA);
      obj.qB.emplace_back(rB);
    }
  }
  return obj;
}

inline ArgmaxObjective receiver_objective(const StageObjective& obj, double tie) {
  return ArgmaxObjective{obj.qB, obj.qA, tie};
}

inline StageSolution stage_backup(const GameSpec& g, std::size_t t, const StageSolution* next,
                                  const Tolerances& tol = {}) {
  StageSolution sol;
  sol.stage = t;
  sol.objective = build_objective(g, t, next);
  const ArgmaxObjective psi = receiver_objective(sol.objective, tol.tie);
  const ConcaveEnvelope env = argcav(psi, psi.arrangement(), tol);
  sol.triangulation = env.triangulation;
  for (const auto& v : sol.triangulation->vertices()) {
    const Selection pick = psi.evaluate(v);
    sol.valuesA.push_back(pick.value);
    sol.valuesB.push_back(pick.best_score);
    sol.receiver_action.push_back(pick.chosen);
  }
  sol.VA = std::make_shared<const VertexInterpolant>(sol.triangulation, sol.valuesA);
  sol.VB = std::make_shared<const VertexInterpolant>(sol.triangulation, sol.valuesB);
  return sol;
}

inline EquilibriumSolution solve(const GameSpec& g, const Tolerances& tol = {}) {
  require_valid(g);
  EquilibriumSolution out;
  out.spec = g;
  out.tol = tol;
  out.stages.resize(g.horizon);
  for (std::size_t t = g.horizon; t-- > 0;) {
    const StageSolution* next = t + 1 < g.horizon ? &out.stages[t + 1] : nullptr;
    out.stages[t] = stage_backup(g, t, next, tol);
  }
  const SimplexPoint prior(g.prior);
  out.value_A = out.stages[0].value_A(prior);
  out.value_B = out.stages[0].value_B(prior);
  return out;
}

}  // namespace sigpick
