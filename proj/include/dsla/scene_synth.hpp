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

#ifndef DSLA_SCENE_SYNTH_HPP_
#define DSLA_SCENE_SYNTH_HPP_

// Procedural top-down road layouts, single-trajectory training samples and
// all-feasible-lane evaluation samples.
//
// Geometry lives in a 256 x 256 reference frame (x right, y up) and is
// rasterized at any grid side. Traffic drives on the right; roundabouts
// circulate counter-clockwise. Direction angles use the same convention as
// circular_stats: 0 along +x, counter-clockwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsla/circular_stats.hpp"
#include "dsla/geometry.hpp"
#include "dsla/random.hpp"
#include "dsla/tensor.hpp"

namespace dsla {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RasterizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayoutKind {
  kIntersection,
  kStraight,
  kCurve,
  kTIntersection,
  kOneWayIntersection,
  kYIntersection,
  kRoundabout,
};

inline std::string to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::kIntersection: return "intersection";
    case LayoutKind::kStraight: return "straight";
    case LayoutKind::kCurve: return "curve";
    case LayoutKind::kTIntersection: return "t_intersection";
    case LayoutKind::kOneWayIntersection: return "one_way_intersection";
    case LayoutKind::kYIntersection: return "y_intersection";
    case LayoutKind::kRoundabout: return "roundabout";
  }
  return "unknown";
}

inline LayoutKind layout_kind_from_string(const std::string& s) {
  for (auto k : {LayoutKind::kIntersection, LayoutKind::kStraight,
                 LayoutKind::kCurve, LayoutKind::kTIntersection,
                 LayoutKind::kOneWayIntersection, LayoutKind::kYIntersection,
                 LayoutKind::kRoundabout})
    if (to_string(k) == s) return k;
  throw ContractError("unknown layout kind: " + s);
}

/// One road arm leaving the junction. `angle_deg` is the outward heading.
/// Inbound lanes carry traffic toward the junction; a one-way arm has zero
/// lanes in one direction.
struct ArmSpec {
  double angle_deg = 0.0;
  int lanes_in = 1;
  int lanes_out = 1;
};

struct MarkingStyle {
  bool center_line = true;
  bool lane_dividers = true;
  bool stop_lines = true;
};

struct GeometryParams {
  std::vector<ArmSpec> arms;  // empty selects the default arms of the kind
  double lane_width = 20.0;   // reference cells
  double ring_radius = 48.0;  // roundabout centre-lane radius
  MarkingStyle markings;
  double angle_jitter_deg = 0.0;  // seeded per-arm heading perturbation
  double center_jitter = 0.0;     // seeded junction-centre offset
};

inline constexpr double kArmWidthMin = 20.0;
inline constexpr double kArmWidthMax = 60.0;
inline constexpr double kLaneWidthMin = 14.0;
inline constexpr double kLaneWidthMax = 30.0;
inline constexpr int kMaxLanesPerDirection = 3;
/// Lane polylines start and end this far from the junction centre, which is
/// outside the image for any heading.
inline constexpr double kFarRadius = 200.0;
inline constexpr double kSampleStep = 2.0;
/// Lateral jitter bound for sampled trajectories: 2 cells at 128 resolution.
inline constexpr double kMaxJitter = 4.0;
/// Mode merge threshold for evaluation samples.
inline constexpr double kModeMergeRadians = 15.0 * std::numbers::pi / 180.0;

struct ArmGeometry {
  Vec2 dir;           // outward unit heading
  double angle = 0;   // radians
  int lanes_in = 1;
  int lanes_out = 1;
  double width = 40;  // lanes * lane width
  double start = 0;   // strip starts this far from the centre

  /// Signed offset along dir.right() of a lane centre. Inbound lanes sit on
  /// the negative side, outbound on the positive side; k counts from the curb.
  double inbound_offset(int k, double lw) const {
    return -0.5 * width + (k + 0.5) * lw;
  }
  double outbound_offset(int k, double lw) const {
    return 0.5 * width - (k + 0.5) * lw;
  }
  double divider_offset(double lw) const { return -0.5 * width + lanes_in * lw; }
};

struct LanePath {
  int from_arm = 0;
  int to_arm = 0;
  int lane_in = 0;
  int lane_out = 0;
  Polyline path;
};

struct MarkingSegment {
  Vec2 a, b;
};

struct RoadLayout {
  LayoutKind kind = LayoutKind::kStraight;
  GeometryParams params;
  std::uint64_t seed = 0;
  Vec2 center{128.0, 128.0};
  double junction_radius = 0.0;
  std::vector<ArmGeometry> arms;
  std::vector<LanePath> lanes;
  std::vector<MarkingSegment> markings;

  double lane_width() const { return params.lane_width; }
  bool is_roundabout() const { return kind == LayoutKind::kRoundabout; }
  bool has_junction_disk() const { return !is_roundabout() && arms.size() >= 3; }
  double ring_inner() const {
    return params.ring_radius - 0.5 * lane_width() - 2.0;
  }
  double ring_outer() const {
    return params.ring_radius + 0.5 * lane_width() + 2.0;
  }
};

inline std::vector<ArmSpec> default_arms(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::kIntersection:
    case LayoutKind::kRoundabout:
      return {{0, 1, 1}, {90, 1, 1}, {180, 1, 1}, {270, 1, 1}};
    case LayoutKind::kStraight: return {{0, 1, 1}, {180, 1, 1}};
    case LayoutKind::kCurve: return {{270, 1, 1}, {0, 1, 1}};
    case LayoutKind::kTIntersection: return {{0, 1, 1}, {180, 1, 1}, {270, 1, 1}};
    case LayoutKind::kOneWayIntersection:
      // North-south street is one-way southbound.
      return {{0, 1, 1}, {90, 1, 0}, {180, 1, 1}, {270, 0, 1}};
    case LayoutKind::kYIntersection: return {{270, 1, 1}, {30, 1, 1}, {150, 1, 1}};
  }
  return {};
}

namespace detail {

inline void validate_params(LayoutKind kind, const GeometryParams& p,
                            const std::vector<ArmSpec>& arms) {
  const std::size_t n = arms.size();
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ContractError(std::string("generate_layout: ") + what);
  };
  switch (kind) {
    case LayoutKind::kStraight:
    case LayoutKind::kCurve: need(n == 2, "kind requires exactly 2 arms"); break;
    case LayoutKind::kTIntersection:
    case LayoutKind::kYIntersection: need(n == 3, "kind requires exactly 3 arms"); break;
    case LayoutKind::kIntersection:
    case LayoutKind::kOneWayIntersection: need(n >= 4, "kind requires >= 4 arms"); break;
    case LayoutKind::kRoundabout: need(n >= 3, "roundabout requires >= 3 arms"); break;
  }
  need(p.lane_width >= kLaneWidthMin && p.lane_width <= kLaneWidthMax,
       "lane width out of range [14, 30]");
  bool any_in = false, any_out = false;
  for (const auto& a : arms) {
    need(a.lanes_in >= 0 && a.lanes_in <= kMaxLanesPerDirection &&
             a.lanes_out >= 0 && a.lanes_out <= kMaxLanesPerDirection,
         "lanes per direction must be in [0, 3]");
    need(a.lanes_in + a.lanes_out >= 1, "arm without lanes");
    const double w = (a.lanes_in + a.lanes_out) * p.lane_width;
    need(w >= kArmWidthMin - 1e-9 && w <= kArmWidthMax + 1e-9,
         "arm width out of range [20, 60]");
    any_in |= a.lanes_in > 0;
    any_out |= a.lanes_out > 0;
  }
  need(any_in && any_out, "layout has no entry or no exit");
  if (kind == LayoutKind::kRoundabout)
    need(p.ring_radius >= 24.0 && p.ring_radius <= 80.0,
         "ring radius out of range [24, 80]");
}

// Smallest radius around the centre beyond which adjacent arm strips no
// longer overlap, padded so lane entry points exist on the circle.
inline double junction_radius(const std::vector<ArmGeometry>& arms) {
  std::vector<std::size_t> order(arms.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return wrap_angle(arms[a].angle) < wrap_angle(arms[b].angle);
  });
  double r = 0.0;
  for (const auto& a : arms) r = std::max(r, 0.5 * a.width + 6.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& a = arms[order[k]];
    const auto& b = arms[order[(k + 1) % order.size()]];
    double gap = wrap_angle(b.angle - a.angle);
    if (order.size() == 1) gap = kTwoPi;
    if (gap < 20.0 * std::numbers::pi / 180.0)
      throw GenerationError("arms closer than 20 degrees overlap");
    const double s = gap >= std::numbers::pi ? 1.0 : std::sin(0.5 * gap);
    r = std::max(r, 0.25 * (a.width + b.width) / s + 4.0);
  }
  return r;
}

inline LanePath junction_lane(const RoadLayout& L, int a, int k, int b) {
  const auto& A = L.arms[a];
  const auto& B = L.arms[b];
  const double lw = L.lane_width();
  const int kout = std::min(k, B.lanes_out - 1);
  const double t_in = A.inbound_offset(k, lw);
  const double t_out = B.outbound_offset(kout, lw);
  const double r = L.junction_radius;
  const double s_in = std::sqrt(r * r - t_in * t_in);
  const double s_out = std::sqrt(r * r - t_out * t_out);

  const Vec2 c = L.center;
  const Vec2 start = c + A.dir * kFarRadius + A.dir.right() * t_in;
  const Vec2 p0 = c + A.dir * s_in + A.dir.right() * t_in;
  const Vec2 p3 = c + B.dir * s_out + B.dir.right() * t_out;
  const Vec2 end = c + B.dir * kFarRadius + B.dir.right() * t_out;
  const double h = 0.5 * std::min(s_in, s_out);

  LanePath lp{a, b, k, kout, {}};
  auto& pts = lp.path.points;
  pts.push_back(start);
  append_line(pts, start, p0, kSampleStep);
  append_cubic(pts, p0, p0 - A.dir * h, p3 - B.dir * h, p3, kSampleStep);
  append_line(pts, p3, end, kSampleStep);
  return lp;
}

inline LanePath roundabout_lane(const RoadLayout& L, int a, int k, int b) {
  const auto& A = L.arms[a];
  const auto& B = L.arms[b];
  const double lw = L.lane_width();
  const int kout = std::min(k, B.lanes_out - 1);
  const double t_in = A.inbound_offset(k, lw);
  const double t_out = B.outbound_offset(kout, lw);
  const double rc = L.params.ring_radius;
  const double re = rc + lw;
  const Vec2 c = L.center;

  const double s_in = std::sqrt(re * re - t_in * t_in);
  const double s_out = std::sqrt(re * re - t_out * t_out);
  const Vec2 start = c + A.dir * kFarRadius + A.dir.right() * t_in;
  const Vec2 e_in = c + A.dir * s_in + A.dir.right() * t_in;
  const Vec2 e_out = c + B.dir * s_out + B.dir.right() * t_out;
  const Vec2 end = c + B.dir * kFarRadius + B.dir.right() * t_out;

  const double a_in = (e_in - c).angle() + 0.3;
  double a_out = (e_out - c).angle() - 0.3;
  while (a_out <= a_in + 0.2) a_out += kTwoPi;
  const Vec2 q_in = c + unit_from_angle(a_in) * rc;
  const Vec2 q_out = c + unit_from_angle(a_out) * rc;
  const Vec2 tan_in = unit_from_angle(a_in).left();
  const Vec2 tan_out = unit_from_angle(a_out).left();
  const double h_in = 0.5 * (q_in - e_in).norm();
  const double h_out = 0.5 * (q_out - e_out).norm();

  LanePath lp{a, b, k, kout, {}};
  auto& pts = lp.path.points;
  pts.push_back(start);
  append_line(pts, start, e_in, kSampleStep);
  append_cubic(pts, e_in, e_in - A.dir * h_in, q_in - tan_in * h_in, q_in,
               kSampleStep);
  append_arc(pts, c, rc, a_in, a_out, kSampleStep);
  append_cubic(pts, q_out, q_out + tan_out * h_out, e_out - B.dir * h_out,
               e_out, kSampleStep);
  append_line(pts, e_out, end, kSampleStep);
  return lp;
}

inline void add_dashed(std::vector<MarkingSegment>& out, Vec2 a, Vec2 b,
                       double dash) {
  const double len = (b - a).norm();
  const Vec2 d = (b - a).normalized();
  for (double s = 0.0; s < len; s += 2.0 * dash)
    out.push_back({a + d * s, a + d * std::min(len, s + dash)});
}

inline void build_markings(RoadLayout& L) {
  const auto& style = L.params.markings;
  const double lw = L.lane_width();
  const Vec2 c = L.center;
  double r0 = 0.0;
  if (L.has_junction_disk() || L.kind == LayoutKind::kCurve)
    r0 = L.junction_radius;
  if (L.is_roundabout()) r0 = L.ring_outer();
  for (const auto& A : L.arms) {
    const Vec2 n = A.dir.right();
    auto along = [&](double t, double r) { return c + A.dir * r + n * t; };
    if (style.center_line && A.lanes_in > 0 && A.lanes_out > 0) {
      const double t = A.divider_offset(lw);
      L.markings.push_back({along(t, r0), along(t, kFarRadius)});
    }
    if (style.lane_dividers) {
      for (int k = 1; k < A.lanes_in; ++k) {
        const double t = -0.5 * A.width + k * lw;
        add_dashed(L.markings, along(t, r0), along(t, kFarRadius), 8.0);
      }
      for (int k = 1; k < A.lanes_out; ++k) {
        const double t = 0.5 * A.width - k * lw;
        add_dashed(L.markings, along(t, r0), along(t, kFarRadius), 8.0);
      }
    }
    if (style.stop_lines && A.lanes_in > 0 &&
        (L.has_junction_disk() || L.is_roundabout())) {
      const double stop_r = L.is_roundabout() ? r0 + 2.0 : r0;
      L.markings.push_back(
          {along(-0.5 * A.width, stop_r), along(A.divider_offset(lw), stop_r)});
    }
  }
  if (L.is_roundabout() && style.center_line) {
    std::vector<Vec2> ring;
    const double ri = L.ring_inner();
    ring.push_back(c + Vec2{ri, 0.0});
    append_arc(ring, c, ri, 0.0, kTwoPi, 4.0);
    for (std::size_t k = 1; k < ring.size(); ++k)
      L.markings.push_back({ring[k - 1], ring[k]});
  }
}

}  // namespace detail

/// Builds a layout and its lane graph. Deterministic for (kind, params, seed);
/// the seed only matters when params request angle or centre jitter.
inline RoadLayout generate_layout(LayoutKind kind, GeometryParams params = {},
                                  std::uint64_t seed = 0) {
  if (params.arms.empty()) params.arms = default_arms(kind);
  detail::validate_params(kind, params, params.arms);

  RoadLayout L;
  L.kind = kind;
  L.params = params;
  L.seed = seed;
  Rng rng(derive_seed(seed, {0x1a40u}));
  if (params.center_jitter > 0.0) {
    L.center.x += rng.uniform(-1.0, 1.0) * params.center_jitter;
    L.center.y += rng.uniform(-1.0, 1.0) * params.center_jitter;
  }
  for (const auto& spec : params.arms) {
    double deg = spec.angle_deg;
    if (params.angle_jitter_deg > 0.0)
      deg += rng.uniform(-1.0, 1.0) * params.angle_jitter_deg;
    ArmGeometry a;
    a.angle = wrap_angle(deg * std::numbers::pi / 180.0);
    a.dir = unit_from_angle(a.angle);
    a.lanes_in = spec.lanes_in;
    a.lanes_out = spec.lanes_out;
    a.width = (spec.lanes_in + spec.lanes_out) * params.lane_width;
    a.start = L.is_roundabout() ? params.ring_radius : 0.0;
    L.arms.push_back(a);
  }
  L.junction_radius = detail::junction_radius(L.arms);
  if (L.junction_radius > 100.0)
    throw GenerationError("arms overlap beyond tolerance");
  if (L.is_roundabout()) {
    double widest = 0.0;
    for (const auto& a : L.arms) widest = std::max(widest, a.width);
    if (L.params.ring_radius < widest)
      throw GenerationError("ring radius smaller than the widest arm");
  }

  const int n = static_cast<int>(L.arms.size());
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < L.arms[a].lanes_in; ++k)
      for (int b = 0; b < n; ++b) {
        if (b == a || L.arms[b].lanes_out == 0) continue;
        L.lanes.push_back(L.is_roundabout() ? detail::roundabout_lane(L, a, k, b)
                                            : detail::junction_lane(L, a, k, b));
      }
  if (L.lanes.empty()) throw GenerationError("empty lane graph");
  detail::build_markings(L);
  return L;
}

// ---------------------------------------------------------------------------
// Rasterization

/// Half stroke width of a trajectory in reference units: 1.5 cells at 128
/// label resolution, never thinner than 0.75 cells of the actual grid so the
/// stroke stays 8-connected.
inline double stroke_half_width(int label_side) {
  return std::max(3.0, 0.75 * kReferenceSide / label_side);
}

/// Worst-case stroke assumed when bounding trajectory jitter (label side 32).
inline constexpr double kStrokeBudget = 6.0;

inline double jitter_bound(const RoadLayout& L) {
  return std::clamp(0.5 * L.lane_width() - kStrokeBudget - 0.5, 0.0, kMaxJitter);
}

/// Two-layer top-down context: drivable region and road markings.
struct RoadContext {
  Grid<float> drivable;
  Grid<float> markings;

  int side() const { return drivable.height(); }
  Tensor<float> as_tensor() const {
    Tensor<float> t(2, side(), side());
    std::copy(drivable.flat().begin(), drivable.flat().end(), t.data());
    std::copy(markings.flat().begin(), markings.flat().end(),
              t.data() + t.plane());
    return t;
  }
  static RoadContext from_tensor(const Tensor<float>& t) {
    if (t.channels() != 2) throw ContractError("RoadContext: need 2 layers");
    RoadContext c{Grid<float>(t.height(), t.width()),
                  Grid<float>(t.height(), t.width())};
    std::copy(t.data(), t.data() + t.plane(), c.drivable.data());
    std::copy(t.data() + t.plane(), t.data() + 2 * t.plane(), c.markings.data());
    return c;
  }
};

/// Single-trajectory supervision at label resolution.
struct TrajectoryLabel {
  Grid<std::uint8_t> mask;
  Grid<float> nx, ny;

  int side() const { return mask.height(); }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : mask.flat()) n += v != 0;
    return n;
  }
};

/// Per-cell list of direction modes (radians), row-major.
using ModeField = std::vector<std::vector<double>>;

struct EvaluationSample {
  RoadContext context;
  Grid<std::uint8_t> lanes;
  ModeField modes;
  std::string layout_name;
  LayoutKind kind = LayoutKind::kStraight;

  int side() const { return lanes.height(); }
  std::size_t mode_cells() const {
    std::size_t n = 0;
    for (const auto& m : modes) n += !m.empty();
    return n;
  }
};

inline bool inside_arm(const RoadLayout& L, const ArmGeometry& a, Vec2 p) {
  const Vec2 d = p - L.center;
  const double along = d.dot(a.dir);
  return along >= a.start && std::fabs(d.dot(a.dir.right())) <= 0.5 * a.width;
}

/// Drivable region at the given side: arm strips, the junction disk or ring,
/// and every lane corridor dilated by half a lane plus a small margin.
inline Grid<float> rasterize_drivable(const RoadLayout& L, int side) {
  RasterFrame f{side};
  Grid<float> g(side, side, 0.0f);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const Vec2 p = f.cell_center(i, j);
      const double r = (p - L.center).norm();
      bool in = false;
      if (L.has_junction_disk() && r <= L.junction_radius) in = true;
      if (L.is_roundabout() && r >= L.ring_inner() && r <= L.ring_outer())
        in = true;
      for (std::size_t a = 0; !in && a < L.arms.size(); ++a)
        in = inside_arm(L, L.arms[a], p);
      if (in) g(i, j) = 1.0f;
    }
  const double radius = 0.5 * L.lane_width() + 2.0;
  for (const auto& lane : L.lanes) {
    const auto& pts = lane.path.points;
    for (std::size_t k = 1; k < pts.size(); ++k)
      stamp_segment(f, pts[k - 1], pts[k], radius,
                    [&](int i, int j, double, double) { g(i, j) = 1.0f; });
  }
  return g;
}

inline Grid<float> rasterize_markings(const RoadLayout& L, int side) {
  RasterFrame f{side};
  Grid<float> g(side, side, 0.0f);
  const double radius = std::max(1.0, 0.5 * f.cell());
  for (const auto& m : L.markings)
    stamp_segment(f, m.a, m.b, radius,
                  [&](int i, int j, double, double) { g(i, j) = 1.0f; });
  return g;
}

inline RoadContext rasterize_context(const RoadLayout& L, int side = 256) {
  return {rasterize_drivable(L, side), rasterize_markings(L, side)};
}

namespace detail {

// Stamps a polyline stroke, recording for every covered cell the distance
// and unit tangent of the nearest segment.
template <typename F>
void stamp_polyline(const Polyline& line, int side, double half_width, F&& f) {
  RasterFrame frame{side};
  const auto& pts = line.points;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const Vec2 t = (pts[k] - pts[k - 1]).normalized();
    if (t.norm() == 0.0) continue;
    stamp_segment(frame, pts[k - 1], pts[k], half_width,
                  [&](int i, int j, double d, double) { f(i, j, d, t); });
  }
}

}  // namespace detail

/// Rasterizes a trajectory at label resolution. Each masked cell stores the
/// unit tangent of the polyline at its nearest point.
inline TrajectoryLabel rasterize_label(const RoadLayout& L, const Polyline& traj,
                                       int label_side) {
  TrajectoryLabel lab{Grid<std::uint8_t>(label_side, label_side, 0),
                      Grid<float>(label_side, label_side, 0.0f),
                      Grid<float>(label_side, label_side, 0.0f)};
  Grid<double> best(label_side, label_side, 1e300);
  detail::stamp_polyline(traj, label_side, stroke_half_width(label_side),
                         [&](int i, int j, double d, Vec2 t) {
                           if (d < best(i, j)) {
                             best(i, j) = d;
                             lab.mask(i, j) = 1;
                             lab.nx(i, j) = static_cast<float>(t.x);
                             lab.ny(i, j) = static_cast<float>(t.y);
                           }
                         });
  if (lab.count() == 0)
    throw RasterizationError("trajectory does not cross the grid");
  const Grid<float> drivable = rasterize_drivable(L, label_side);
  for (int i = 0; i < label_side; ++i)
    for (int j = 0; j < label_side; ++j)
      if (lab.mask(i, j) && drivable(i, j) < 0.5f)
        throw RasterizationError("trajectory leaves the drivable region at (" +
                                 std::to_string(i) + ", " + std::to_string(j) +
                                 ")");
  return lab;
}

/// (context at `context_side`, label at `context_side / 2`).
inline std::pair<RoadContext, TrajectoryLabel> rasterize_sample(
    const RoadLayout& L, const Polyline& traj, int context_side = 256) {
  if (context_side < 2 || context_side % 2 != 0)
    throw ContractError("rasterize_sample: context side must be even");
  return {rasterize_context(L, context_side),
          rasterize_label(L, traj, context_side / 2)};
}

struct SampledTrajectory {
  std::size_t lane_index = 0;
  Polyline path;
};

/// Draws one lane uniformly and perturbs it with a smooth lateral offset no
/// larger than jitter_bound(L).
inline SampledTrajectory sample_trajectory(const RoadLayout& L,
                                           std::uint64_t seed) {
  if (L.lanes.empty()) throw ContractError("sample_trajectory: empty layout");
  Rng rng(derive_seed(seed, {0x7a1u}));
  SampledTrajectory out;
  out.lane_index = rng.index(L.lanes.size());
  const auto& pts = L.lanes[out.lane_index].path.points;
  const double amp = rng.uniform() * jitter_bound(L);
  const double wavelength = rng.uniform(80.0, 160.0);
  const double phase = rng.uniform(0.0, kTwoPi);
  out.path.points.reserve(pts.size());
  double s = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k > 0) s += (pts[k] - pts[k - 1]).norm();
    const Vec2 prev = pts[k == 0 ? 0 : k - 1];
    const Vec2 next = pts[std::min(k + 1, pts.size() - 1)];
    const Vec2 normal = (next - prev).normalized().left();
    const double off = amp * std::sin(kTwoPi * s / wavelength + phase);
    out.path.points.push_back(pts[k] + normal * off);
  }
  return out;
}

/// Merges angles closer than `radius` into their circular means.
inline std::vector<double> merge_modes(std::vector<double> angles,
                                       double radius = kModeMergeRadians) {
  for (auto& a : angles) a = wrap_angle(a);
  std::sort(angles.begin(), angles.end());
  struct Cluster {
    double sx = 0, sy = 0;
    double mean() const { return wrap_angle(std::atan2(sy, sx)); }
  };
  std::vector<Cluster> clusters;
  for (double a : angles) {
    if (!clusters.empty() &&
        angular_distance(clusters.back().mean(), a) < radius) {
      clusters.back().sx += std::cos(a);
      clusters.back().sy += std::sin(a);
    } else {
      clusters.push_back({std::cos(a), std::sin(a)});
    }
  }
  if (clusters.size() > 1 &&
      angular_distance(clusters.front().mean(), clusters.back().mean()) <
          radius) {
    clusters.front().sx += clusters.back().sx;
    clusters.front().sy += clusters.back().sy;
    clusters.pop_back();
  }
  std::vector<double> out;
  for (const auto& c : clusters) out.push_back(c.mean());
  std::sort(out.begin(), out.end());
  return out;
}

/// Union of every lane (no jitter) with per-cell merged direction modes.
inline EvaluationSample build_eval_sample(const RoadLayout& L,
                                          int context_side = 256) {
  const int side = context_side / 2;
  EvaluationSample ev;
  ev.context = rasterize_context(L, context_side);
  ev.lanes = Grid<std::uint8_t>(side, side, 0);
  ev.modes.assign(static_cast<std::size_t>(side) * side, {});
  ev.kind = L.kind;
  ev.layout_name = to_string(L.kind);
  const double hw = stroke_half_width(side);
  for (const auto& lane : L.lanes) {
    Grid<double> best(side, side, 1e300);
    Grid<float> ang(side, side, 0.0f);
    detail::stamp_polyline(lane.path, side, hw,
                           [&](int i, int j, double d, Vec2 t) {
                             if (d < best(i, j)) {
                               best(i, j) = d;
                               ang(i, j) = static_cast<float>(t.angle());
                             }
                           });
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j)
        if (best(i, j) < 1e300) {
          ev.lanes(i, j) = 1;
          ev.modes[static_cast<std::size_t>(i) * side + j].push_back(ang(i, j));
        }
  }
  for (auto& m : ev.modes)
    if (!m.empty()) m = merge_modes(std::move(m));
  return ev;
}

// ---------------------------------------------------------------------------
// Corpus

enum class Split { kTrain, kTest };

inline std::string to_string(Split s) {
  return s == Split::kTrain ? "train" : "test";
}

struct LayoutSpec {
  std::string name;
  LayoutKind kind;
  GeometryParams params;
  Split split = Split::kTrain;

  RoadLayout build(std::uint64_t seed = 0) const {
    return generate_layout(kind, params, seed);
  }
};

namespace detail {
inline GeometryParams arms_params(std::vector<ArmSpec> arms, double lw = 20.0) {
  GeometryParams p;
  p.arms = std::move(arms);
  p.lane_width = lw;
  return p;
}
}  // namespace detail

/// Thirteen training layouts (2 intersections, 3 straights, 1 curve,
/// 3 T-intersections, 2 one-way intersections, 1 Y, 1 roundabout) and eight
/// held-out variations with altered lane or connection counts.
inline std::vector<LayoutSpec> standard_corpus() {
  using K = LayoutKind;
  using detail::arms_params;
  std::vector<LayoutSpec> c;
  auto train = [&](std::string n, K k, GeometryParams p) {
    c.push_back({std::move(n), k, std::move(p), Split::kTrain});
  };
  auto test = [&](std::string n, K k, GeometryParams p) {
    c.push_back({std::move(n), k, std::move(p), Split::kTest});
  };

  train("intersection", K::kIntersection, {});
  train("intersection_skewed", K::kIntersection,
        arms_params({{10, 1, 1}, {95, 1, 1}, {190, 1, 1}, {280, 1, 1}}, 22.0));
  train("straight", K::kStraight, {});
  train("straight_diagonal", K::kStraight, arms_params({{45, 1, 1}, {225, 1, 1}}));
  {
    auto p = arms_params({{90, 1, 1}, {270, 1, 1}}, 24.0);
    p.markings.center_line = false;
    train("straight_unmarked", K::kStraight, p);
  }
  train("curve", K::kCurve, {});
  train("t_intersection", K::kTIntersection, {});
  train("t_intersection_left", K::kTIntersection,
        arms_params({{90, 1, 1}, {270, 1, 1}, {180, 1, 1}}));
  train("t_intersection_up", K::kTIntersection,
        arms_params({{0, 1, 1}, {180, 1, 1}, {90, 1, 1}}));
  train("one_way_intersection", K::kOneWayIntersection, {});
  train("one_way_intersection_ew", K::kOneWayIntersection,
        arms_params({{0, 0, 1}, {90, 1, 1}, {180, 1, 0}, {270, 1, 1}}));
  train("y_intersection", K::kYIntersection, {});
  train("roundabout", K::kRoundabout, {});

  test("intersection_two_lane", K::kIntersection,
       arms_params({{0, 2, 2}, {90, 2, 2}, {180, 2, 2}, {270, 2, 2}}, 15.0));
  test("t_intersection_two_lane", K::kTIntersection,
       arms_params({{0, 2, 2}, {180, 2, 2}, {270, 1, 1}}, 15.0));
  test("intersection_five_arm", K::kIntersection,
       arms_params({{0, 1, 1}, {72, 1, 1}, {144, 1, 1}, {216, 1, 1}, {288, 1, 1}}));
  {
    auto p = arms_params({{0, 1, 1}, {120, 1, 1}, {240, 1, 1}});
    p.ring_radius = 44.0;
    test("roundabout_three_arm", K::kRoundabout, p);
  }
  test("y_intersection_one_way", K::kYIntersection,
       arms_params({{270, 1, 1}, {30, 0, 1}, {150, 1, 0}}));
  test("straight_two_lane", K::kStraight,
       arms_params({{0, 2, 2}, {180, 2, 2}}, 15.0));
  test("intersection_oblique", K::kIntersection,
       arms_params({{0, 1, 1}, {60, 1, 1}, {180, 1, 1}, {240, 1, 1}}));
  test("t_intersection_one_way", K::kTIntersection,
       arms_params({{0, 0, 2}, {180, 2, 0}, {270, 1, 1}}, 15.0));
  return c;
}

inline std::vector<LayoutSpec> corpus_split(const std::vector<LayoutSpec>& all,
                                            Split s) {
  std::vector<LayoutSpec> out;
  for (const auto& l : all)
    if (l.split == s) out.push_back(l);
  return out;
}

inline std::optional<LayoutSpec> find_layout(const std::vector<LayoutSpec>& all,
                                             const std::string& name) {
  for (const auto& l : all)
    if (l.name == name) return l;
  return std::nullopt;
}

}  // namespace dsla

#endif  // DSLA_SCENE_SYNTH_HPP_
