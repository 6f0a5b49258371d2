// SPDX-License-Identifier: Apache-2.0
#include "lorentz/maximal.hpp"
#include "lorentz/spacetimes.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace lorentz;

namespace {

MetricField flat() { return minkowski(make_chart(cube(2, -3.0, 3.0))); }

MetricField bubble() { return bubble_metric(make_chart(Box(make_vec({-1.5, -2.0}), make_vec({1.5, 2.0})))); }

MetricField slit() {
  return minkowski(make_chart(Box(make_vec({-1.0, -2.0}), make_vec({3.0, 2.0})), {},
                              {Box(make_vec({1.0, -0.5}), make_vec({1.0, 0.5}))}));
}

CausalCurve chord(const Vec& a, const Vec& b) { return canonicalize(CausalCurve::polyline({a, b})); }

const Vec kBubbleP = make_vec({-1.0, -0.75});
const Vec kBubbleQ = make_vec({1.0, 0.75});

}  // namespace

TEST(TimeSeparation, MinkowskiChord) {
  const auto g = flat();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = time_separation(make_vec({0, 0}), make_vec({2, 1}), g, 64, 8, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(r.tau, std::sqrt(3.0), 0.01 * std::sqrt(3.0));
  EXPECT_LE(sup_distance(r.curve, chord(make_vec({0, 0}), make_vec({2, 1}))), 0.02);
  EXPECT_LT(secs, 5.0);
  EXPECT_EQ(r.start, "chord");
  EXPECT_TRUE(r.converged);
}

TEST(TimeSeparation, NullRelatedGivesZero) {
  const auto r = time_separation(make_vec({0, 0}), make_vec({1, 1}), flat(), 8, 3, 1);
  EXPECT_EQ(r.tau, 0.0);
  EXPECT_LE(sup_distance(r.curve, chord(make_vec({0, 0}), make_vec({1, 1}))), 1e-6);
  EXPECT_TRUE(is_causal(r.curve, flat()).causal());
}

TEST(TimeSeparation, SpacelikeIsAnError) {
  EXPECT_THROW(time_separation(make_vec({0, 0}), make_vec({0.2, 1}), flat(), 8, 1, 1), NotCausallyRelated);
  EXPECT_THROW(time_separation(make_vec({0, 0}), make_vec({1, 1}), flat(), 1, 1, 1), InvalidArgument);
  EXPECT_THROW(time_separation(make_vec({0, 0}), make_vec({9, 1}), flat(), 8, 1, 1), DomainError);
}

TEST(TimeSeparation, BubbleMatchesLongestPathOracle) {
  const auto g = bubble();
  const auto r = time_separation(kBubbleP, kBubbleQ, g, 64, 2, 1);
  const auto dag = oracle::bubble_dag(kBubbleP, kBubbleQ, 0.5, 0.5, 512, -2.0, 2.0);
  EXPECT_NEAR(r.tau, dag.tau, 0.02 * dag.tau);
  // The chord is feasible, and not optimal here.
  EXPECT_GT(r.tau, lorentz_length(chord(kBubbleP, kBubbleQ), g));
  EXPECT_EQ(is_causal(r.curve, g, kNullTolerance, 4).kind, CausalKind::CausalFuture);
}

TEST(TimeSeparation, DominatesTheChord) {
  const auto g = bubble();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int tried = 0;
  while (tried < 6) {
    const Vec p = make_vec({-1.2 + 0.2 * u(rng), 0.8 * u(rng)});
    const Vec q = p + make_vec({1.5, 1.2 * u(rng)});
    const CausalCurve c = chord(p, q);
    if (is_causal(c, g, kNullTolerance, 16).kind != CausalKind::CausalFuture) continue;
    ++tried;
    const auto r = time_separation(p, q, g, 8, 1, 3);
    EXPECT_GE(r.tau, lorentz_length(c, g) - 1e-12);
  }
}

TEST(TimeSeparation, RefinementDoesNotLoseLength) {
  const auto r = time_separation(kBubbleP, kBubbleQ, bubble(), 16, 1, 1);
  ASSERT_GE(r.levels.size(), 2U);
  for (std::size_t i = 1; i < r.levels.size(); ++i)
    EXPECT_GE(r.levels[i].tau, r.levels[i - 1].tau * (1.0 - 1e-4)) << r.levels[i].segments;
}

TEST(TimeSeparation, IteratesPassUsc) {
  const auto g = bubble();
  const auto r = time_separation(kBubbleP, kBubbleQ, g, 32, 1, 1);
  ASSERT_GE(r.trace.size(), 8U);
  double quad = 0.0;
  for (const auto& c : r.trace) quad = std::max(quad, quadrature_error(c, g));
  const auto rep = verify_usc(g, r.trace, r.curve, 1e-6 + quad);
  EXPECT_TRUE(rep.holds) << rep.margin;
}

TEST(TimeSeparation, Deterministic) {
  const auto g = bubble();
  const auto a = time_separation(kBubbleP, kBubbleQ, g, 8, 3, 11);
  const auto b = time_separation(kBubbleP, kBubbleQ, g, 8, 3, 11);
  EXPECT_EQ(a.tau, b.tau);
  EXPECT_TRUE(a.curve == b.curve);
  EXPECT_EQ(a.winning_seed, b.winning_seed);
}

TEST(TimeSeparation, GoesAroundTheSlit) {
  // Around either tip: two timelike legs of length sqrt(2).
  const auto g = slit();
  const Vec p = make_vec({-0.5, 0.0}), q = make_vec({2.5, 0.0});
  const auto r = time_separation(p, q, g, 16, 2, 1);
  EXPECT_EQ(r.start, "lattice");
  EXPECT_LE(r.tau, 2.0 * std::sqrt(2.0) + 1e-9);
  EXPECT_GE(r.tau, 2.0 * std::sqrt(2.0) - 1e-2);
  const auto& v = r.curve.vertices();
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    EXPECT_FALSE(g.chart().segment_blocked(v[i], v[i + 1], ObstacleRule::Strict));
}

TEST(Maximality, ChordIsMaximal) {
  const auto c = maximality_certificate(CausalCurve::polyline({make_vec({0, 0}), make_vec({2, 1})}), flat(), 0.1,
                                        500, 1);
  // Shortcuts and cut corners of a straight chord are the chord itself and do not count.
  EXPECT_GT(c.perturbations, 200);
  EXPECT_TRUE(c.certified(1e-12)) << c.margin;
}

TEST(Maximality, NullZigzagIsNot) {
  const auto c = maximality_certificate(
      CausalCurve::polyline({make_vec({0, 0}), make_vec({0.5, 0.5}), make_vec({1, 0})}), flat(), 0.2, 200, 1);
  ASSERT_FALSE(c.degenerate);
  EXPECT_LT(c.margin, 0.0);
  EXPECT_EQ(c.length, 0.0);
  ASSERT_TRUE(c.best_rival);
  EXPECT_TRUE(is_causal(*c.best_rival, flat()).causal());
  EXPECT_LE(sup_distance(*c.best_rival, canonicalize(c.curve)), 0.2);
}

TEST(Maximality, NullChordIsRigid) {
  const auto c = maximality_certificate(CausalCurve::polyline({make_vec({0, 0}), make_vec({1, 1})}), flat(), 0.1,
                                        100, 1);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.perturbations, 0);
  EXPECT_FALSE(c.certified(1.0));
}

TEST(Maximality, BubbleSolverOutput) {
  const auto g = bubble();
  const auto r = time_separation(kBubbleP, kBubbleQ, g, 32, 2, 1);
  const auto dag = oracle::bubble_dag(kBubbleP, kBubbleQ, 0.5, 0.5, 512, -2.0, 2.0);
  const auto c = maximality_certificate(r.curve, g, 0.05, 200, 1, {CausalCurve::polyline(dag.path)});
  EXPECT_GT(c.perturbations, 0);
  EXPECT_GE(c.margin, -1e-3);
}

TEST(Maximality, Preconditions) {
  EXPECT_THROW(maximality_certificate(chord(make_vec({0, 0}), make_vec({2, 1})), flat(), 0.0, 10, 1), InvalidArgument);
  EXPECT_THROW(maximality_certificate(chord(make_vec({0, 0}), make_vec({1, 2})), flat(), 0.1, 10, 1), InvalidArgument);
}

TEST(LimitMaximizer, MinkowskiClosedForm) {
  // widen(eta, d) = diag(-1-d, 1-d): the chord to (2,1) has length sqrt(3 + 5d).
  const auto g = flat();
  const Vec p = make_vec({0, 0}), q = make_vec({2, 1});
  const auto alpha = chord(p, q);
  const auto rep = limit_maximizer_check(g, {0.1, 0.01}, p, q, alpha);
  ASSERT_EQ(rep.rows.size(), 2U);
  for (const auto& row : rep.rows) {
    EXPECT_NEAR(row.widened_alpha, std::sqrt(3.0 + 5.0 * row.delta), 1e-12);
    EXPECT_NEAR(row.widened_maximizer, std::sqrt(3.0 + 5.0 * row.delta), 1e-9);
    EXPECT_GT(row.bound - row.length_alpha, 0.1 * std::sqrt(row.delta));
    EXPECT_TRUE(row.first_holds && row.second_holds);
  }
  EXPECT_TRUE(rep.holds());
  ASSERT_TRUE(rep.limit);
  EXPECT_NEAR(rep.limit_length, std::sqrt(3.0), 1e-9);
}

TEST(LimitMaximizer, NullZigzag) {
  const auto g = flat();
  const Vec p = make_vec({0, 0}), q = make_vec({1, 0});
  const auto alpha = canonicalize(CausalCurve::polyline({p, make_vec({0.5, 0.5}), q}));
  const auto rep = limit_maximizer_check(g, {0.1, 0.01, 0.001}, p, q, alpha);
  EXPECT_TRUE(rep.holds());
  for (const auto& row : rep.rows) EXPECT_EQ(row.length_alpha, 0.0);
}

TEST(LimitMaximizer, BubbleLimitMatchesDirect) {
  const auto g = bubble();
  const auto alpha = chord(kBubbleP, kBubbleQ);
  const auto rep = limit_maximizer_check(g, {0.1, 0.03, 0.01, 0.003}, kBubbleP, kBubbleQ, alpha);
  EXPECT_TRUE(rep.holds());
  ASSERT_TRUE(rep.limit) << rep.note;
  const auto dag = oracle::bubble_dag(kBubbleP, kBubbleQ, 0.5, 0.5, 512, -2.0, 2.0);
  EXPECT_NEAR(rep.limit_length, rep.direct_tau, 0.02 * rep.direct_tau);
  EXPECT_NEAR(rep.direct_tau, dag.tau, 0.02 * dag.tau);
}

TEST(LimitMaximizer, RejectsBadLadder) {
  const auto alpha = chord(make_vec({0, 0}), make_vec({2, 1}));
  EXPECT_THROW(limit_maximizer_check(flat(), {0.01, 0.1}, make_vec({0, 0}), make_vec({2, 1}), alpha), InvalidArgument);
  EXPECT_THROW(limit_maximizer_check(flat(), {0.1}, make_vec({0, 0}), make_vec({2, 2}), alpha), InvalidArgument);
}
