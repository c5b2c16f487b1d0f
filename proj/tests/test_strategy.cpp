#include <gtest/gtest.h>

#include <random>

#include "sigpick/builtin.hpp"
#include "sigpick/strategy.hpp"
#include "support/oracles.hpp"

using namespace sigpick;

namespace {

SimplexPoint bin(double p) { return SimplexPoint({p, 1.0 - p}); }

}  // namespace

TEST(PrincipalPolicy, SplitsBetweenNeighbouringVertices) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  const auto e = principal_action(sol, 0, bin(0.05));
  EXPECT_EQ(e.n_messages(), 2u);
  const auto eta = induced_distribution(bin(0.05), e).canonical(1e-12);
  ASSERT_EQ(eta.atoms.size(), 2u);
  EXPECT_NEAR(eta.atoms[0].point[0], 0.0, 1e-12);
  EXPECT_NEAR(eta.atoms[0].weight, 0.45, 1e-12);
  EXPECT_NEAR(eta.atoms[1].point[0], 1.0 / 11, 1e-12);
  EXPECT_NEAR(eta.atoms[1].weight, 0.55, 1e-12);
}

TEST(PrincipalPolicy, VertexGetsOneMessage) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  const auto e = principal_action(sol, 0, bin(1.0 / 11));
  EXPECT_EQ(e.n_messages(), 1u);
  EXPECT_EQ(e.labels, (std::vector<std::size_t>{1}));
}

TEST(PrincipalPolicy, LabelsAreVertexIndices) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  const SimplexPoint pi = bin(0.05);
  const auto e = principal_action(sol, 0, pi);
  for (std::size_t m = 0; m < e.n_messages(); ++m) {
    const auto post = bayes_update(pi, e, m);
    EXPECT_LE(max_abs_diff(post.coords(), sol.stages[0].vertices()[e.labels[m]].coords()), 1e-12);
  }
}

TEST(PrincipalPolicy, OutsideSimplexIsDomainError) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  EXPECT_THROW(principal_action(sol, 0, SimplexPoint({0.5, 0.5, 0.0})), DomainError);
}

TEST(ReceiverPolicy, LastStageActions) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  EXPECT_EQ(receiver_action(sol, 0, bin(0.5)), 0u);
  EXPECT_EQ(receiver_action(sol, 0, bin(0.0)), 1u);
  EXPECT_EQ(receiver_action(sol, 0, bin(1.0 / 11)), 0u);
  EXPECT_EQ(receiver_action(sol, 0, bin(0.05)), 1u);
}

TEST(ReceiverPolicy, NearestVertexSnap) {
  const auto sol = solve(quickest_detection(0.2, 0.1, 1));
  EXPECT_EQ(ReceiverPolicy::nearest_vertex(sol.stages[0], bin(1.0 / 11 + 1e-11)), std::optional<std::size_t>(1));
  EXPECT_FALSE(ReceiverPolicy::nearest_vertex(sol.stages[0], bin(1.0 / 11 + 1e-8)).has_value());
}

// Every posterior the principal induces is a vertex, and the receiver's
// action there attains both stage values.
void expect_policy_properties(const EquilibriumSolution& sol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < sol.spec.horizon; ++t) {
    const auto& st = sol.stages[t];
    const std::size_t n = sol.spec.stage(t).n_states();
    for (int i = 0; i < 200; ++i) {
      const auto pi = oracle::random_point(n, rng);
      const auto e = principal_action(sol, t, pi);
      const auto eta = induced_distribution(pi, e);
      for (const auto& a : eta.atoms) {
        bool on_vertex = false;
        for (const auto& v : st.vertices()) on_vertex |= max_abs_diff(v.coords(), a.point.coords()) <= 1e-12;
        EXPECT_TRUE(on_vertex);
      }
      const auto back = induced_distribution(pi, e);
      EXPECT_LE(max_abs_diff(back.mean(), pi.coords()), 1e-9);

      const auto q = evaluate(st.objective, pi);
      const auto pick = receiver_best(q, sol.tol.tie);
      const std::size_t u = receiver_action(sol, t, pi);
      EXPECT_NEAR(q.B[u], pick.best_score, 1e-9);
      EXPECT_NEAR(q.A[u], pick.value, 1e-9);
    }
    for (std::size_t v = 0; v < st.vertices().size(); ++v) {
      const auto q = evaluate(st.objective, st.vertices()[v]);
      const std::size_t u = receiver_action(sol, t, st.vertices()[v]);
      EXPECT_NEAR(q.B[u], st.valuesB[v], 1e-9);
      EXPECT_NEAR(q.A[u], st.valuesA[v], 1e-9);
    }
  }
}

TEST(PolicyProperties, Builtins) {
  expect_policy_properties(solve(quickest_detection(0.2, 0.1, 10)), 1);
  expect_policy_properties(solve(detector(0.2, 0.15, 10)), 2);
}

TEST(PolicyProperties, RandomGames) {
  for (std::uint64_t seed = 40; seed < 55; ++seed) {
    SCOPED_TRACE(seed);
    expect_policy_properties(solve(oracle::random_game(seed, 2 + seed % 2, 2 + (seed / 2) % 2, 1 + seed % 3)), seed);
  }
}
