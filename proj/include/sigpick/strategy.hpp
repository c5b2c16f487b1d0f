#pragma once

// Belief-based strategies read off a solved game. The principal splits the
// public belief into the vertices of its stage triangulation; the receiver best
// responds to the posterior, breaking ties toward the principal.

#include <cstddef>
#include <limits>

#include "sigpick/game.hpp"
#include "sigpick/geometry.hpp"
#include "sigpick/solver.hpp"

namespace sigpick {

class PrincipalPolicy {
 public:
  explicit PrincipalPolicy(const EquilibriumSolution& sol) : sol_(&sol) {}

  /// Experiment inducing the barycentric measure of `pi` on the stage
  /// triangulation; message labels are vertex indices.
  Experiment operator()(std::size_t t, const SimplexPoint& pi) const {
    const auto& tri = *sol_->stages.at(t).triangulation;
    const auto weights = barycentric_weights(tri, pi, sol_->tol.geom);
    SupportMeasure eta;
    std::vector<std::size_t> labels;
    for (const auto& [i, w] : weights) {
      eta.atoms.push_back({tri.vertices()[i], w});
      labels.push_back(i);
    }
    // The barycentric weights reproduce pi up to round-off; split against
    // their exact mean so the experiment is well defined.
    Experiment sigma = split_experiment(SimplexPoint::clamped(eta.mean()), eta, sol_->tol.geom);
    sigma.labels = std::move(labels);
    return sigma;
  }

 private:
  const EquilibriumSolution* sol_;
};

class ReceiverPolicy {
 public:
  explicit ReceiverPolicy(const EquilibriumSolution& sol) : sol_(&sol) {}

  /// Stored action when `pi` is a triangulation vertex, otherwise the
  /// principal-preferred best response.
  std::size_t operator()(std::size_t t, const SimplexPoint& pi) const {
    const auto& st = sol_->stages.at(t);
    if (auto v = nearest_vertex(st, pi)) return st.receiver_action[*v];
    return receiver_best(evaluate(st.objective, pi), sol_->tol.tie).chosen;
  }

  /// Vertex of the stage triangulation within `snap` of `pi`, if any.
  static std::optional<std::size_t> nearest_vertex(const StageSolution& st, const SimplexPoint& pi,
                                                   double snap = 1e-10) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    const auto& vs = st.vertices();
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const double d = max_abs_diff(vs[i].coords(), pi.coords());
      if (d <= snap && d < best_d) {
        best = i;
        best_d = d;
      }
    }
    return best;
  }

 private:
  const EquilibriumSolution* sol_;
};

inline Experiment principal_action(const EquilibriumSolution& sol, std::size_t t, const SimplexPoint& pi) {
  return PrincipalPolicy(sol)(t, pi);
}

inline std::size_t receiver_action(const EquilibriumSolution& sol, std::size_t t, const SimplexPoint& pi) {
  return ReceiverPolicy(sol)(t, pi);
}

}  // namespace sigpick
