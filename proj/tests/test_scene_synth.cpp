// Copyright 2026 The DSLA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "dsla/scene_synth.hpp"

namespace dsla {
namespace {

constexpr double kPi = std::numbers::pi;

bool outside_image(Vec2 p) {
  return p.x < 0 || p.x >= kReferenceSide || p.y < 0 || p.y >= kReferenceSide;
}

Grid<std::uint8_t> dilate(const Grid<std::uint8_t>& g, int r) {
  Grid<std::uint8_t> out(g.height(), g.width(), 0);
  for (int i = 0; i < g.height(); ++i)
    for (int j = 0; j < g.width(); ++j) {
      if (!g(i, j)) continue;
      for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj)
          if (out.in_bounds(i + di, j + dj)) out(i + di, j + dj) = 1;
    }
  return out;
}

TEST(GenerateLayout, LaneCounts) {
  EXPECT_EQ(generate_layout(LayoutKind::kIntersection).lanes.size(), 12u);
  EXPECT_EQ(generate_layout(LayoutKind::kStraight).lanes.size(), 2u);
  EXPECT_EQ(generate_layout(LayoutKind::kTIntersection).lanes.size(), 6u);
  EXPECT_EQ(generate_layout(LayoutKind::kRoundabout).lanes.size(), 12u);
}

TEST(GenerateLayout, LaneCountMatchesEntryExitCombinatorics) {
  for (const auto& spec : standard_corpus()) {
    const RoadLayout L = spec.build();
    std::size_t expected = 0;
    for (std::size_t a = 0; a < L.arms.size(); ++a)
      for (std::size_t b = 0; b < L.arms.size(); ++b)
        if (a != b && L.arms[b].lanes_out > 0) expected += L.arms[a].lanes_in;
    EXPECT_EQ(L.lanes.size(), expected) << spec.name;
  }
}

TEST(GenerateLayout, NoUTurns) {
  const RoadLayout L = generate_layout(LayoutKind::kIntersection);
  for (const auto& lane : L.lanes) EXPECT_NE(lane.from_arm, lane.to_arm);
}

TEST(GenerateLayout, LanesStartAndEndOutsideImage) {
  for (const auto& spec : standard_corpus())
    for (const auto& lane : spec.build().lanes) {
      EXPECT_TRUE(outside_image(lane.path.front())) << spec.name;
      EXPECT_TRUE(outside_image(lane.path.back())) << spec.name;
    }
}

TEST(GenerateLayout, DeterministicForFixedSeed) {
  GeometryParams p;
  p.angle_jitter_deg = 5.0;
  p.center_jitter = 6.0;
  const RoadLayout a = generate_layout(LayoutKind::kTIntersection, p, 42);
  const RoadLayout b = generate_layout(LayoutKind::kTIntersection, p, 42);
  const RoadLayout c = generate_layout(LayoutKind::kTIntersection, p, 43);
  ASSERT_EQ(a.lanes.size(), b.lanes.size());
  for (std::size_t k = 0; k < a.lanes.size(); ++k) {
    ASSERT_EQ(a.lanes[k].path.size(), b.lanes[k].path.size());
    for (std::size_t m = 0; m < a.lanes[k].path.size(); ++m) {
      EXPECT_EQ(a.lanes[k].path.points[m].x, b.lanes[k].path.points[m].x);
      EXPECT_EQ(a.lanes[k].path.points[m].y, b.lanes[k].path.points[m].y);
    }
  }
  EXPECT_NE(a.center.x, c.center.x);
}

TEST(GenerateLayout, InfeasibleGeometryIsRejected) {
  GeometryParams close;
  close.arms = {{0, 1, 1}, {10, 1, 1}, {180, 1, 1}, {270, 1, 1}};
  EXPECT_THROW(generate_layout(LayoutKind::kIntersection, close), GenerationError);

  GeometryParams wide;
  wide.arms = {{0, 3, 3}, {180, 3, 3}};
  wide.lane_width = 14.0;  // 84 cells
  EXPECT_THROW(generate_layout(LayoutKind::kStraight, wide), ContractError);

  GeometryParams wrong_count;
  wrong_count.arms = {{0, 1, 1}, {180, 1, 1}};
  EXPECT_THROW(generate_layout(LayoutKind::kTIntersection, wrong_count), ContractError);
}

TEST(GenerateLayout, EveryLaneInsideDrivableRegion) {
  for (const auto& spec : standard_corpus()) {
    const RoadLayout L = spec.build();
    for (int side : {128, 32})
      for (const auto& lane : L.lanes)
        EXPECT_NO_THROW(rasterize_label(L, lane.path, side)) << spec.name << " @" << side;
  }
}

TEST(RasterizeSample, ShapesAndValueRange) {
  const RoadLayout L = generate_layout(LayoutKind::kIntersection);
  const auto traj = sample_trajectory(L, 1);
  const auto [ctx, lab] = rasterize_sample(L, traj.path);
  EXPECT_EQ(ctx.side(), 256);
  EXPECT_EQ(lab.side(), 128);
  for (float v : ctx.drivable.flat()) EXPECT_TRUE(v == 0.0f || v == 0.5f || v == 1.0f);
  for (float v : ctx.markings.flat()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
  EXPECT_GT(lab.count(), 0u);
  EXPECT_LT(lab.count(), lab.mask.size());
}

TEST(RasterizeSample, HorizontalTrajectoryTangent) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  Polyline p;
  append_line(p.points, {-20.0, 123.0}, {276.0, 123.0}, 2.0);
  p.points.insert(p.points.begin(), Vec2{-20.0, 123.0});
  const auto lab = rasterize_label(L, p, 128);
  ASSERT_GT(lab.count(), 0u);
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j)
      if (lab.mask(i, j)) {
        EXPECT_NEAR(lab.nx(i, j), 1.0f, 1e-6);
        EXPECT_NEAR(lab.ny(i, j), 0.0f, 1e-6);
      }
}

TEST(RasterizeSample, VerticalTrajectoryPointsUp) {
  GeometryParams p;
  p.arms = {{90, 1, 1}, {270, 1, 1}};
  const RoadLayout L = generate_layout(LayoutKind::kStraight, p);
  Polyline line{{{133.0, -20.0}, {133.0, 276.0}}};
  const auto lab = rasterize_label(L, line, 128);
  ASSERT_GT(lab.count(), 0u);
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j)
      if (lab.mask(i, j)) {
        EXPECT_NEAR(lab.nx(i, j), 0.0f, 1e-6);
        EXPECT_NEAR(lab.ny(i, j), 1.0f, 1e-6);
      }
}

TEST(RasterizeSample, StrokeIsThreeCellsWideAtLabelResolution) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  Polyline line{{{-20.0, 123.0}, {276.0, 123.0}}};
  const auto lab = rasterize_label(L, line, 128);
  for (int j = 10; j < 118; ++j) {
    int column = 0;
    for (int i = 0; i < 128; ++i) column += lab.mask(i, j);
    EXPECT_EQ(column, 3) << j;
  }
}

TEST(RasterizeSample, LeavingDrivableRegionIsAnError) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  Polyline line{{{-20.0, 20.0}, {276.0, 20.0}}};
  EXPECT_THROW(rasterize_label(L, line, 128), RasterizationError);
}

TEST(RasterizeSample, UnitDirectionsEverywhere) {
  for (const auto& spec : standard_corpus()) {
    const RoadLayout L = spec.build();
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto lab = rasterize_label(L, sample_trajectory(L, s).path, 128);
      for (std::size_t k = 0; k < lab.mask.size(); ++k)
        if (lab.mask.flat()[k])
          ASSERT_NEAR(std::hypot(lab.nx.flat()[k], lab.ny.flat()[k]), 1.0, 1e-6);
    }
  }
}

TEST(SampleTrajectory, Deterministic) {
  const RoadLayout L = generate_layout(LayoutKind::kRoundabout);
  const auto a = sample_trajectory(L, 99), b = sample_trajectory(L, 99);
  EXPECT_EQ(a.lane_index, b.lane_index);
  ASSERT_EQ(a.path.size(), b.path.size());
  for (std::size_t k = 0; k < a.path.size(); ++k) {
    EXPECT_EQ(a.path.points[k].x, b.path.points[k].x);
    EXPECT_EQ(a.path.points[k].y, b.path.points[k].y);
  }
}

TEST(SampleTrajectory, UniformOverLanes) {
  const RoadLayout L = generate_layout(LayoutKind::kIntersection);
  std::map<std::size_t, int> hist;
  const int n = 10000;
  for (int s = 0; s < n; ++s) hist[sample_trajectory(L, s).lane_index]++;
  ASSERT_EQ(hist.size(), 12u);
  for (const auto& [lane, count] : hist) EXPECT_NEAR(count / double(n), 1.0 / 12, 0.01);
}

TEST(SampleTrajectory, EndpointsOutsideAndJitterBounded) {
  for (const auto& spec : standard_corpus()) {
    const RoadLayout L = spec.build();
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto t = sample_trajectory(L, s);
      EXPECT_TRUE(outside_image(t.path.front()));
      EXPECT_TRUE(outside_image(t.path.back()));
      const auto& base = L.lanes[t.lane_index].path.points;
      ASSERT_EQ(base.size(), t.path.size());
      for (std::size_t k = 0; k < base.size(); ++k)
        EXPECT_LE((base[k] - t.path.points[k]).norm(), kMaxJitter + 1e-9);
    }
  }
}

TEST(BuildEvalSample, TwoWayStraightHasOpposingSingleModes) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  const EvaluationSample ev = build_eval_sample(L);
  std::set<long> seen;
  int cells = 0;
  for (int i = 0; i < 128; ++i)
    for (int j = 16; j < 112; ++j) {
      const auto& m = ev.modes[i * 128 + j];
      if (m.empty()) continue;
      ++cells;
      ASSERT_EQ(m.size(), 1u);
      const double a = wrap_angle(m[0]);
      EXPECT_TRUE(angular_distance(a, 0.0) < 1e-6 || angular_distance(a, kPi) < 1e-6) << a;
      seen.insert(angular_distance(a, 0.0) < 1e-6 ? 0 : 1);
    }
  EXPECT_GT(cells, 0);
  EXPECT_EQ(seen.size(), 2u);
}

TEST(BuildEvalSample, IntersectionCentreHasAtMostThreeModes) {
  const EvaluationSample ev = build_eval_sample(generate_layout(LayoutKind::kIntersection));
  std::size_t most = 0;
  for (int i = 48; i < 80; ++i)
    for (int j = 48; j < 80; ++j) most = std::max(most, ev.modes[i * 128 + j].size());
  EXPECT_GE(most, 2u);
  EXPECT_LE(most, 3u);
}

TEST(BuildEvalSample, ModesWellFormed) {
  for (const auto& spec : standard_corpus()) {
    const EvaluationSample ev = build_eval_sample(spec.build());
    for (std::size_t k = 0; k < ev.modes.size(); ++k) {
      const auto& m = ev.modes[k];
      if (m.empty()) continue;
      EXPECT_TRUE(ev.lanes.flat()[k]);
      for (std::size_t a = 0; a < m.size(); ++a) {
        EXPECT_GE(m[a], 0.0);
        EXPECT_LT(m[a], kTwoPi);
        for (std::size_t b = a + 1; b < m.size(); ++b)
          EXPECT_GE(angular_distance(m[a], m[b]), kModeMergeRadians - 1e-12);
      }
    }
  }
}

TEST(BuildEvalSample, LanesAreUnionOfLaneMasks) {
  const RoadLayout L = generate_layout(LayoutKind::kTIntersection);
  const EvaluationSample ev = build_eval_sample(L);
  Grid<std::uint8_t> uni(128, 128, 0);
  for (const auto& lane : L.lanes) {
    const auto lab = rasterize_label(L, lane.path, 128);
    for (std::size_t k = 0; k < uni.size(); ++k) uni.flat()[k] |= lab.mask.flat()[k];
  }
  EXPECT_TRUE(uni == ev.lanes);
}

TEST(BuildEvalSample, CoversJitteredTrajectories) {
  const RoadLayout L = generate_layout(LayoutKind::kIntersection);
  const EvaluationSample ev = build_eval_sample(L);
  const auto grown = dilate(ev.lanes, int(std::ceil(kMaxJitter / 2.0)));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto lab = rasterize_label(L, sample_trajectory(L, s).path, 128);
    for (std::size_t k = 0; k < lab.mask.size(); ++k)
      if (lab.mask.flat()[k]) ASSERT_TRUE(grown.flat()[k]) << "draw " << s;
  }
}

TEST(BuildEvalSample, Deterministic) {
  const RoadLayout L = generate_layout(LayoutKind::kRoundabout);
  const auto a = build_eval_sample(L), b = build_eval_sample(L);
  EXPECT_TRUE(a.lanes == b.lanes);
  EXPECT_EQ(a.modes, b.modes);
}

TEST(MergeModes, ClosePairsCollapse) {
  const auto m = merge_modes({0.0, 5.0 * kPi / 180.0, kPi});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(merge_modes({kTwoPi - 0.05, 0.05}).size(), 1u);
  EXPECT_EQ(merge_modes({0.0, 20.0 * kPi / 180.0}).size(), 2u);
}

TEST(Corpus, Composition) {
  const auto all = standard_corpus();
  const auto train = corpus_split(all, Split::kTrain);
  const auto test = corpus_split(all, Split::kTest);
  EXPECT_EQ(train.size(), 13u);
  EXPECT_EQ(test.size(), 8u);
  std::map<LayoutKind, int> kinds;
  for (const auto& l : train) kinds[l.kind]++;
  EXPECT_EQ(kinds[LayoutKind::kIntersection], 2);
  EXPECT_EQ(kinds[LayoutKind::kStraight], 3);
  EXPECT_EQ(kinds[LayoutKind::kCurve], 1);
  EXPECT_EQ(kinds[LayoutKind::kTIntersection], 3);
  EXPECT_EQ(kinds[LayoutKind::kOneWayIntersection], 2);
  EXPECT_EQ(kinds[LayoutKind::kYIntersection], 1);
  EXPECT_EQ(kinds[LayoutKind::kRoundabout], 1);
  std::set<std::string> names;
  for (const auto& l : all) names.insert(l.name);
  EXPECT_EQ(names.size(), all.size());
  EXPECT_TRUE(find_layout(all, "roundabout_three_arm"));
  EXPECT_FALSE(find_layout(all, "nope"));
}

TEST(LayoutKindNames, RoundTrip) {
  for (auto k : {LayoutKind::kIntersection, LayoutKind::kStraight, LayoutKind::kCurve,
                 LayoutKind::kTIntersection, LayoutKind::kOneWayIntersection,
                 LayoutKind::kYIntersection, LayoutKind::kRoundabout})
    EXPECT_EQ(layout_kind_from_string(to_string(k)), k);
  EXPECT_THROW(layout_kind_from_string("bridge"), ContractError);
}

}  // namespace
}  // namespace dsla
