#include <gtest/gtest.h>

#include "splitroa/geom.hpp"

using namespace splitroa;

TEST(Box, VolumeAndContainment) {
  const Box b{{-1.0, 1.0}, {0.0, 3.0}};
  EXPECT_DOUBLE_EQ(volume(b), 6.0);
  EXPECT_TRUE(contains(b, std::vector<double>{1.0, 3.0}));
  EXPECT_FALSE(contains(b, std::vector<double>{1.0 + 1e-12, 0.0}));
  Box out;
  EXPECT_TRUE(intersect(b, Box{{0.5, 2.0}, {-1.0, 1.0}}, &out));
  EXPECT_EQ(out, (Box{{0.5, 1.0}, {0.0, 1.0}}));
  EXPECT_FALSE(intersect(b, Box{{2.0, 3.0}, {0.0, 1.0}}, &out));
}

TEST(SemialgebraicSet, ToleranceOnMembership) {
  const SemialgebraicSet s({Polynomial(1.0) - Polynomial::var(1) * Polynomial::var(1)});
  EXPECT_TRUE(s.contains(std::vector<double>{0.0, 1.0}));
  EXPECT_FALSE(s.contains(std::vector<double>{0.0, 1.001}));
  EXPECT_TRUE(s.contains(std::vector<double>{0.0, 1.001}, 0.01));
  EXPECT_THROW(SemialgebraicSet(std::vector<Polynomial>{}), std::invalid_argument);
}

TEST(Partition, TwoByTwoGridHasFourFacets) {
  // Hand enumeration: 4 cells, two shared vertical and two horizontal edges,
  // the diagonal pairs touch in a point only.
  const auto cells = split_box(Box{{-1, 1}, {-1, 1}}, CutPlan{{{0.0}, {0.0}}});
  ASSERT_EQ(cells.size(), 4u);
  const auto facets = neighbor_facets(cells);
  ASSERT_EQ(facets.size(), 4u);
  for (const auto& f : facets) {
    EXPECT_LT(f.a, f.b);
    EXPECT_EQ(f.value, 0.0);
    EXPECT_EQ(f.box[f.axis].lo, f.box[f.axis].hi);
  }
}

TEST(Partition, AxisZeroVariesSlowest) {
  const auto cells = split_box(Box{{0, 2}, {0, 2}}, CutPlan{{{1.0}, {1.0}}});
  EXPECT_EQ(cells[1].box, (Box{{0, 1}, {1, 2}}));
  EXPECT_EQ(cells[2].box, (Box{{1, 2}, {0, 1}}));
}

TEST(Partition, CutsAtGivenPositions) {
  const auto cells = split_box(Box{{-1, 1}}, CutPlan{{{-0.5, 0.5}}});
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[1].box[0], (Interval{-0.5, 0.5}));
  EXPECT_EQ(neighbor_facets(cells).size(), 2u);
}

TEST(Partition, UniformSplitCounts) {
  const std::vector<std::size_t> cuts{2, 1, 0};
  const auto cells = split_box_uniform(Box{{0, 3}, {0, 1}, {0, 1}}, cuts);
  EXPECT_EQ(cells.size(), 6u);
  // Facets: along axis 0: 2 * 2, along axis 1: 3 * 1.
  EXPECT_EQ(neighbor_facets(cells).size(), 7u);
}

TEST(Partition, HalvingTilesAndIsSeeded) {
  const Box X{{-0.7, 0.7}, {-1.2, 1.2}};
  for (std::size_t n : {1u, 2u, 5u, 16u}) {
    const auto cells = halving_split_sequence(X, n, 7);
    ASSERT_EQ(cells.size(), n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(cells[i].id, i);
      total += volume(cells[i].box);
    }
    EXPECT_NEAR(total, volume(X), 1e-12);
  }
  const auto a = halving_split_sequence(X, 8, 7);
  const auto b = halving_split_sequence(X, 8, 7);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].box, b[i].box);
  // One more cell halves exactly one cell of the shorter run.
  const auto c = halving_split_sequence(X, 9, 7);
  int changed = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    Box meet;
    ASSERT_TRUE(intersect(a[i].box, c[i].box, &meet));
    EXPECT_EQ(meet, c[i].box);
    changed += a[i].box == c[i].box ? 0 : 1;
  }
  EXPECT_EQ(changed, 1);
  EXPECT_THROW(halving_split_sequence(X, 0, 1), std::invalid_argument);
}

TEST(Partition, LocateTiesGoToLowestId) {
  const auto cells = split_box(Box{{-1, 1}}, CutPlan{{{0.0}}});
  EXPECT_EQ(locate_cell(cells, std::vector<double>{0.0}), 0u);
  EXPECT_EQ(locate_cell(cells, std::vector<double>{0.1}), 1u);
  EXPECT_EQ(locate_cell(cells, std::vector<double>{1.5}), 2u);
}

TEST(TimeGridTest, LocateTiesGoToLowerInterval) {
  const TimeGrid g({0.0, 0.5, 1.0});
  EXPECT_EQ(g.intervals(), 2u);
  EXPECT_EQ(g.locate(0.0), 0u);
  EXPECT_EQ(g.locate(0.5), 0u);
  EXPECT_EQ(g.locate(0.75), 1u);
  EXPECT_EQ(g.locate(1.0), 1u);
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(TimeGrid({0.1, 1.0}), std::invalid_argument);
  EXPECT_EQ(TimeGrid::uniform(2.0, 4).knots(), (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
}
