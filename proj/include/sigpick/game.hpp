#pragma once

// Game specification and belief kinematics: Bayes update after an experiment,
// push-forward through the controlled kernel, the distribution of posteriors an
// experiment induces, and the experiment that induces a given distribution.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "sigpick/common.hpp"
#include "sigpick/geometry.hpp"
#include "sigpick/linalg.hpp"

namespace sigpick {

struct StageData {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::vector<bool> terminating;  // per action
  // kernel[x][u] is the next-stage state distribution. Rows of terminating
  // actions and of the last stage are never read and may be empty.
  std::vector<std::vector<Vec>> kernel;
  std::vector<Vec> reward_A;  // [x][u]
  std::vector<Vec> reward_B;

  std::size_t n_states() const { return states.size(); }
  std::size_t n_actions() const { return actions.size(); }

  bool operator==(const StageData&) const = default;
};

struct GameSpec {
  std::size_t horizon = 0;
  std::vector<StageData> stages;  // stages[t] for t = 0..horizon-1
  Vec prior;

  const StageData& stage(std::size_t t) const { return stages.at(t); }

  bool operator==(const GameSpec&) const = default;
};

/// Observation kernel: rows[x][m] = probability of message m in state x.
/// `labels[m]` optionally names message m (e.g. a triangulation vertex).
struct Experiment {
  std::vector<Vec> rows;
  std::vector<std::size_t> labels;

  std::size_t n_states() const { return rows.size(); }
  std::size_t n_messages() const { return rows.empty() ? 0 : rows[0].size(); }
};

/// Every violated invariant of `g`, each naming its stage and row. Stages are
/// reported 1-based.
inline std::vector<std::string> validate_spec(const GameSpec& g) {
  std::vector<std::string> errs;
  auto at = [](std::size_t t) { return "stage " + std::to_string(t + 1); };
  if (g.horizon == 0) errs.push_back("horizon must be positive");
  if (g.stages.size() != g.horizon) {
    errs.push_back("expected " + std::to_string(g.horizon) + " stages, found " + std::to_string(g.stages.size()));
    return errs;
  }
  for (std::size_t t = 0; t < g.stages.size(); ++t) {
    const auto& s = g.stages[t];
    const std::size_t nx = s.n_states(), nu = s.n_actions();
    if (nx == 0) errs.push_back(at(t) + ": no states");
    if (nu == 0) errs.push_back(at(t) + ": no actions");
    if (s.terminating.size() != nu) errs.push_back(at(t) + ": terminating flags do not match the action count");
    for (const auto* name : {"reward_A", "reward_B"}) {
      const auto& r = std::string(name) == "reward_A" ? s.reward_A : s.reward_B;
      if (r.size() != nx) {
        errs.push_back(at(t) + ": " + name + " has " + std::to_string(r.size()) + " rows, expected " + std::to_string(nx));
        continue;
      }
      for (std::size_t x = 0; x < nx; ++x) {
        if (r[x].size() != nu)
          errs.push_back(at(t) + ": " + name + " row " + std::to_string(x) + " has wrong length");
        for (double v : r[x])
          if (!std::isfinite(v)) errs.push_back(at(t) + ": " + name + " row " + std::to_string(x) + " is not finite");
      }
    }
    if (t + 1 == g.stages.size()) continue;
    const std::size_t next = g.stages[t + 1].n_states();
    if (s.kernel.size() != nx) {
      errs.push_back(at(t) + ": kernel has " + std::to_string(s.kernel.size()) + " state rows, expected " + std::to_string(nx));
      continue;
    }
    for (std::size_t x = 0; x < nx; ++x) {
      if (s.kernel[x].size() != nu) {
        errs.push_back(at(t) + ": kernel state " + std::to_string(x) + " has wrong action count");
        continue;
      }
      for (std::size_t u = 0; u < nu; ++u) {
        if (u < s.terminating.size() && s.terminating[u]) continue;
        const auto& row = s.kernel[x][u];
        const std::string where = at(t) + ": kernel row (state " + std::to_string(x) + ", action " + std::to_string(u) + ")";
        if (row.size() != next) {
          errs.push_back(where + " has length " + std::to_string(row.size()) + ", expected " + std::to_string(next));
          continue;
        }
        double sum = 0.0;
        bool ok = true;
        for (double v : row) {
          ok = ok && std::isfinite(v) && v >= 0.0;
          sum += v;
        }
        if (!ok) errs.push_back(where + " has a negative or non-finite entry");
        if (std::abs(sum - 1.0) > 1e-12) errs.push_back(where + " sums to " + std::to_string(sum));
      }
    }
  }
  if (!g.stages.empty()) {
    if (g.prior.size() != g.stages[0].n_states()) {
      errs.push_back("prior has length " + std::to_string(g.prior.size()) + ", expected " +
                     std::to_string(g.stages[0].n_states()));
    } else {
      try {
        SimplexPoint p(g.prior);
      } catch (const DomainError& e) {
        errs.push_back(std::string("prior: ") + e.what());
      }
    }
  }
  return errs;
}

inline void require_valid(const GameSpec& g) {
  auto errs = validate_spec(g);
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

/// Posterior after observing message `m`; uniform when `m` has (numerically)
/// zero probability.
inline SimplexPoint bayes_update(const SimplexPoint& pi, const Experiment& sigma, std::size_t m,
                                 double eps = Tolerances{}.geom) {
  if (sigma.n_states() != pi.size()) throw DomainError("experiment does not match the belief dimension");
  if (m >= sigma.n_messages()) throw DomainError("message id " + std::to_string(m) + " out of range");
  Vec post(pi.size());
  double den = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) {
    post[x] = pi[x] * sigma.rows[x][m];
    den += post[x];
  }
  if (den <= eps) return SimplexPoint::uniform(pi.size());
  for (double& v : post) v /= den;
  return SimplexPoint::clamped(std::move(post));
}

inline double message_probability(const SimplexPoint& pi, const Experiment& sigma, std::size_t m) {
  double s = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) s += pi[x] * sigma.rows[x][m];
  return s;
}

/// pi -> next-stage distribution under action u, as an affine map.
inline AffineMap transition_map(const GameSpec& g, std::size_t t, std::size_t u) {
  const auto& s = g.stage(t);
  if (u >= s.n_actions()) throw DomainError("action out of range");
  if (s.terminating[u]) throw DomainError("terminating action has no successor belief");
  if (t + 1 >= g.horizon) throw DomainError("no stage after the horizon");
  const std::size_t next = g.stage(t + 1).n_states();
  Matrix m(next, s.n_states());
  for (std::size_t x = 0; x < s.n_states(); ++x)
    for (std::size_t y = 0; y < next; ++y) m(y, x) = s.kernel[x][u][y];
  return {m, Vec(next, 0.0)};
}

inline SimplexPoint push_forward(const GameSpec& g, std::size_t t, const SimplexPoint& pi, std::size_t u) {
  if (pi.size() != g.stage(t).n_states()) throw DomainError("belief does not match stage state count");
  return transition_map(g, t, u)(pi);
}

/// Distribution of posteriors induced by `sigma` at prior `pi`. Messages with
/// equal posteriors (to 12 decimals) are merged; null messages are dropped.
inline SupportMeasure induced_distribution(const SimplexPoint& pi, const Experiment& sigma,
                                           double eps = Tolerances{}.geom) {
  if (sigma.n_states() != pi.size()) throw DomainError("experiment does not match the belief dimension");
  std::map<std::vector<long long>, std::size_t> index;
  SupportMeasure out;
  double total = 0.0;
  for (std::size_t m = 0; m < sigma.n_messages(); ++m) {
    const double pr = message_probability(pi, sigma, m);
    if (pr <= eps) continue;
    SimplexPoint post = bayes_update(pi, sigma, m, eps);
    std::vector<long long> key;
    for (double v : post.coords()) key.push_back(std::llround(v * 1e12));
    auto [it, fresh] = index.emplace(key, out.atoms.size());
    if (fresh)
      out.atoms.push_back({std::move(post), pr});
    else
      out.atoms[it->second].weight += pr;
    total += pr;
  }
  for (auto& a : out.atoms) a.weight /= total;
  return out;
}

/// Experiment with one message per atom of `eta` that induces exactly `eta`.
inline Experiment split_experiment(const SimplexPoint& pi, const SupportMeasure& eta,
                                   double eps = Tolerances{}.geom) {
  if (eta.atoms.empty()) throw InducibilityError("empty posterior distribution");
  const Vec mean = eta.mean();
  if (mean.size() != pi.size()) throw InducibilityError("posterior dimension does not match the prior");
  const double gap = max_abs_diff(mean, pi.coords());
  if (gap > eps) throw InducibilityError("posterior mean differs from the prior by " + std::to_string(gap));
  const std::size_t k = eta.atoms.size();
  Experiment sigma;
  sigma.rows.assign(pi.size(), Vec(k, 1.0 / static_cast<double>(k)));
  for (std::size_t x = 0; x < pi.size(); ++x) {
    if (pi[x] <= 0.0) continue;
    Vec row(k);
    double sum = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      row[m] = eta.atoms[m].weight * eta.atoms[m].point[x] / pi[x];
      sum += row[m];
    }
    if (sum <= 0.0) continue;
    for (double& v : row) v /= sum;
    sigma.rows[x] = std::move(row);
  }
  return sigma;
}

}  // namespace sigpick
