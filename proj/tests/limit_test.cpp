// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lorentz/limit.hpp"
#include "oracles.hpp"

using namespace lorentz;

namespace {

Vec P(double t, double x) { return make_vec({t, x}); }

MetricField eta() { return minkowski(make_chart(cube(2, -3, 3))); }

/// Single-bump polyline (0,0) -> (0.5,0.5) + side (1/k)(1,-1)/sqrt2 -> (1,1).
CausalCurve bump(int k) {
  const double a = (k % 2 ? 1.0 : -1.0) / (k * std::sqrt(2.0));
  return canonicalize(CausalCurve::polyline({P(0, 0), P(0.5 + a, 0.5 - a), P(1, 1)}));
}

/// Null sawtooth with n teeth approximating the chord (0,0) -> (2,1).
CausalCurve null_sawtooth(int n) {
  std::vector<Vec> v{P(0, 0)};
  const double dt = 2.0 / n;
  for (int i = 0; i < n; ++i) {
    const Vec a = v.back();
    v.push_back(a + P(0.75 * dt, 0.75 * dt));
    v.push_back(a + P(dt, 0.5 * dt));
  }
  return canonicalize(CausalCurve::polyline(v));
}

}  // namespace

TEST(ExtractLimit, ZigzagFamilyConvergesToDiagonal) {
  std::vector<CausalCurve> fam;
  for (int k = 2; k <= 64; ++k) fam.push_back(bump(k));
  const auto g = eta();
  LimitOptions opt;
  opt.metric = &g;
  const auto r = extract_limit_curve(fam, LimitMode::FixedInterval, 2.0, 1e-9, opt);
  const auto diag = canonicalize(CausalCurve::polyline({P(0, 0), P(1, 1)}));
  EXPECT_LE(sup_distance(r.limit, diag), 1e-3);
  ASSERT_EQ(r.subsequence.size(), r.sup_gaps.size());
  for (std::size_t i = 0; i < r.subsequence.size(); ++i) {
    const int k = static_cast<int>(r.subsequence[i]) + 2;
    // The bump amplitude bounds the distance to the diagonal.
    EXPECT_LE(r.sup_gaps[i], 1.0 / k + sup_distance(r.limit, diag) + 1e-12);
    EXPECT_EQ(r.sup_gaps[i], sup_distance(fam[r.subsequence[i]], r.limit));
    if (i) EXPECT_LE(r.sup_gaps[i], r.sup_gaps[i - 1]);
  }
  ASSERT_EQ(r.causality.size(), 3u);
  EXPECT_TRUE(r.limit_causal());
}

TEST(ExtractLimit, ConstantFamily) {
  const auto c = canonicalize(CausalCurve::polyline({P(0, 0), P(0.7, 0.2), P(1.5, 0.1)}));
  const std::vector<CausalCurve> fam(10, c);
  const auto r = extract_limit_curve(fam, LimitMode::FixedInterval, 10.0, 1e-9);
  EXPECT_EQ(r.subsequence.size(), 10u);
  EXPECT_LE(sup_distance(r.limit, c), 1e-15);
}

TEST(ExtractLimit, Errors) {
  std::vector<CausalCurve> fam;
  for (int k = 0; k < 10; ++k) {
    const double x0 = k % 2 ? 0.5 : -0.5;
    fam.push_back(canonicalize(CausalCurve::polyline({P(0, x0), P(1, x0)})));
  }
  EXPECT_THROW(extract_limit_curve(fam, LimitMode::FixedInterval, 2.0, 1e-3), NoAccumulation);
  try {
    extract_limit_curve({bump(2), canonicalize(CausalCurve::polyline({P(0, 0), P(3, 0)}))}, LimitMode::FixedInterval,
                        2.0, 1e-3);
    FAIL();
  } catch (const LipschitzUnbounded& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  EXPECT_THROW(extract_limit_curve({CausalCurve::polyline({P(0, 0), P(1, 0), P(2, 0)})}, LimitMode::FixedInterval,
                                   5.0, 1e-3),
               InvalidArgument);
}

TEST(ExtractLimit, InextendibleRaysTruncateToCommonLength) {
  // Timelike rays from points accumulating at the origin to the top of the
  // chart [-3,3]^2.
  const auto g = eta();
  std::vector<CausalCurve> fam;
  for (int k = 1; k <= 40; ++k) {
    const Vec p = P(0, 1.0 / k);
    fam.push_back(CausalCurve::polyline({p, P(3, 1.0 / k + 1.5)}));
  }
  LimitOptions opt;
  opt.metric = &g;
  const auto r = extract_limit_curve(fam, LimitMode::Inextendible, 10.0, 0.05, opt);
  const double len = std::hypot(3.0, 1.5);
  EXPECT_NEAR(r.truncation_length, len, 1e-12);
  const auto ray = canonicalize(CausalCurve::polyline({P(0, 0), P(3, 1.5)}));
  EXPECT_LE(sup_distance(r.limit, ray), 0.05);
  EXPECT_TRUE(r.limit_causal());
  // Curves that stop inside the chart are not inextendible.
  EXPECT_THROW(extract_limit_curve({CausalCurve::polyline({P(0, 0), P(1, 0)})}, LimitMode::Inextendible, 10.0, 0.05,
                                   opt),
               InvalidArgument);
}

TEST(VerifyUsc, NullZigzagsToNullDiagonal) {
  // Staircases of null legs along the null diagonal are null too.
  std::vector<CausalCurve> fam;
  for (int n = 1; n <= 20; ++n) {
    std::vector<Vec> v;
    for (int i = 0; i <= n; ++i) v.push_back(P(double(i) / n, double(i) / n));
    fam.push_back(canonicalize(CausalCurve::polyline(v)));
  }
  const auto diag = canonicalize(CausalCurve::polyline({P(0, 0), P(1, 1)}));
  const auto r = verify_usc(eta(), fam, diag, 1e-9);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.limit_length, 0.0);
  EXPECT_EQ(r.limsup, 0.0);
}

TEST(VerifyUsc, NullSawtoothToTimelikeChord) {
  std::vector<CausalCurve> fam;
  for (int n = 4; n <= 200; n += 4) fam.push_back(null_sawtooth(n));
  const auto chord = canonicalize(CausalCurve::polyline({P(0, 0), P(2, 1)}));
  const auto r = verify_usc(eta(), fam, chord, 1e-9);
  EXPECT_TRUE(r.holds);
  // Rounded null legs leave sqrt-amplified residues of about 1e-9 each.
  EXPECT_NEAR(r.margin, std::sqrt(3.0), 1e-6);
  EXPECT_TRUE(r.chain_dominates);
  // The extracted limit agrees with the chord.
  const auto lim = extract_limit_curve(fam, LimitMode::FixedInterval, 5.0, 1e-9);
  EXPECT_LE(sup_distance(lim.limit, chord), 0.02);
}

TEST(VerifyUsc, ChainMatchesClosedForm) {
  // Chord (0,0)->(2,1) in widen(eta, d): sqrt(4(1+d) - (1-d)).
  std::vector<CausalCurve> fam;
  const auto chord = canonicalize(CausalCurve::polyline({P(0, 0), P(2, 1)}));
  for (int k = 0; k < 4; ++k) fam.push_back(chord);
  const auto r = verify_usc(eta(), fam, chord, 1e-9);
  for (const auto& [d, v] : r.chain) EXPECT_NEAR(v, std::sqrt(3.0 + 5.0 * d) + std::sqrt(5.0) * std::sqrt(d), 1e-12);
}

TEST(VerifyUsc, NonConvergentFamily) {
  std::vector<CausalCurve> fam;
  for (int k = 0; k < 10; ++k) fam.push_back(k % 2 ? bump(4) : bump(5));
  const auto diag = canonicalize(CausalCurve::polyline({P(0, 0), P(1, 1)}));
  EXPECT_THROW(verify_usc(widen(eta(), 0.9), fam, diag, 1e-9, UscOptions{0.25, 0.05, {}, 8}), NotConvergent);
}
