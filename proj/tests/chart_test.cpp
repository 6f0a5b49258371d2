// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lorentz/chart.hpp"

using namespace lorentz;

TEST(Box, RejectsEmptyInterval) {
  EXPECT_THROW(Box(make_vec({0, 1}), make_vec({1, 0})), InvalidArgument);
  EXPECT_NO_THROW(Box(make_vec({1, 0}), make_vec({1, 0})));
}

TEST(Box, ClipSegment) {
  const Box b(make_vec({0, 0}), make_vec({1, 1}));
  auto r = b.clip(make_vec({-1, 0.5}), make_vec({2, 0.5}));
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->first, 1.0 / 3, 1e-15);
  EXPECT_NEAR(r->second, 2.0 / 3, 1e-15);
  EXPECT_FALSE(b.clip(make_vec({-1, 2}), make_vec({2, 2})));
}

TEST(Box, GrazingTheTipOfASlitIsNotInterior) {
  const Box slit(make_vec({1, -0.5}), make_vec({1, 0.5}));
  // Null segment through the tip (1, 0.5).
  EXPECT_TRUE(slit.meets_segment(make_vec({0.5, 1.0}), make_vec({1.5, 0.0})));
  EXPECT_FALSE(slit.meets_segment_interior(make_vec({0.5, 1.0}), make_vec({1.5, 0.0})));
  // Straight through the middle.
  EXPECT_TRUE(slit.meets_segment_interior(make_vec({0.5, 0.0}), make_vec({1.5, 0.1})));
}

TEST(ChartDomain, Validation) {
  EXPECT_THROW(ChartDomain(Box(make_vec({0}), make_vec({1}))), InvalidArgument);
  EXPECT_THROW(ChartDomain(Box(make_vec({0, 0}), make_vec({1, 0}))), InvalidArgument);
  EXPECT_THROW(ChartDomain(Box(make_vec({0, 0}), make_vec({1, 1})), {}, {Box(make_vec({0, 0}), make_vec({2, 2}))}),
               InvalidArgument);
}

TEST(ChartDomain, PeriodicWrapAndDisplacement) {
  const ChartDomain c(Box(make_vec({0, -1}), make_vec({1, 1})), {true, false});
  EXPECT_NEAR(c.wrap(make_vec({2.25, 0.3}))[0], 0.25, 1e-15);
  EXPECT_NEAR(c.wrap(make_vec({-0.25, 0.3}))[0], 0.75, 1e-15);
  EXPECT_NEAR(c.displacement(make_vec({0.9, 0}), make_vec({0.1, 0}))[0], 0.2, 1e-15);
  EXPECT_TRUE(c.in_bounds(make_vec({5.0, 0.5})));
  EXPECT_FALSE(c.in_bounds(make_vec({0.5, 1.5})));
}

TEST(ChartDomain, SegmentBlockedAcrossPeriodicSeam) {
  const ChartDomain c(Box(make_vec({0, -1}), make_vec({1, 1})), {true, false},
                      {Box(make_vec({0.05, -0.1}), make_vec({0.1, 0.1}))});
  // Lifted segment from t = 0.9 to t = 1.2 wraps through the obstacle.
  EXPECT_TRUE(c.segment_blocked(make_vec({0.9, 0}), make_vec({1.2, 0})));
  EXPECT_FALSE(c.segment_blocked(make_vec({0.2, 0}), make_vec({0.8, 0})));
}

TEST(Region, ClosestPointAndDistance) {
  const Region r(std::vector<Box>{Box(make_vec({0, 0}), make_vec({1, 1})), Box(make_vec({3, 3}), make_vec({4, 4}))});
  EXPECT_TRUE(r.contains(make_vec({3.5, 3.5})));
  EXPECT_NEAR(r.distance(make_vec({2, 0.5})), 1.0, 1e-15);
  EXPECT_TRUE(r.closest_point(make_vec({5, 5})).isApprox(make_vec({4, 4})));
}

TEST(SamplingSpec, PointsIncludeCorners) {
  const SamplingSpec s{Box(make_vec({0, 0}), make_vec({1, 2})), 3, 64};
  const auto pts = s.points();
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_TRUE(pts.front().isApprox(make_vec({0, 0})));
  EXPECT_TRUE(pts.back().isApprox(make_vec({1, 2})));
  EXPECT_DOUBLE_EQ(s.spacing(), 1.0);
}
