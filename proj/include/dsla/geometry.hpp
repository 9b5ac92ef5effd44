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

#ifndef DSLA_GEOMETRY_HPP_
#define DSLA_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

namespace dsla {

/// Side length of the reference frame all layout geometry is expressed in.
/// A grid of side S samples this frame with cells of 256/S units.
inline constexpr double kReferenceSide = 256.0;

/// Point or vector in the reference frame: x to the right, y up.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
  }
  /// Rotated 90 degrees clockwise.
  Vec2 right() const { return {y, -x}; }
  /// Rotated 90 degrees counter-clockwise.
  Vec2 left() const { return {-y, x}; }
  double angle() const { return std::atan2(y, x); }
};

inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

struct Polyline {
  std::vector<Vec2> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec2 front() const { return points.front(); }
  Vec2 back() const { return points.back(); }

  double length() const {
    double l = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k)
      l += (points[k] - points[k - 1]).norm();
    return l;
  }
};

/// Distance from p to segment [a, b] and the clamped segment parameter.
inline double segment_distance(Vec2 p, Vec2 a, Vec2 b, double* t_out = nullptr) {
  const Vec2 d = b - a;
  const double len2 = d.dot(d);
  double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (t_out) *t_out = t;
  return (p - (a + d * t)).norm();
}

/// Appends points of segment [a, b] (excluding a) spaced at most `step`.
inline void append_line(std::vector<Vec2>& out, Vec2 a, Vec2 b, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
  for (int k = 1; k <= n; ++k) out.push_back(a + (b - a) * (double(k) / n));
}

/// Appends samples of a cubic Bezier (excluding p0).
inline void append_cubic(std::vector<Vec2>& out, Vec2 p0, Vec2 p1, Vec2 p2,
                         Vec2 p3, double step) {
  const double approx =
      (p1 - p0).norm() + (p2 - p1).norm() + (p3 - p2).norm();
  const int n = std::max(4, static_cast<int>(std::ceil(approx / step)));
  for (int k = 1; k <= n; ++k) {
    const double t = double(k) / n, s = 1.0 - t;
    out.push_back(p0 * (s * s * s) + p1 * (3 * s * s * t) +
                  p2 * (3 * s * t * t) + p3 * (t * t * t));
  }
}

/// Appends a counter-clockwise arc (excluding the start point).
inline void append_arc(std::vector<Vec2>& out, Vec2 center, double radius,
                       double a0, double a1, double step) {
  const int n =
      std::max(2, static_cast<int>(std::ceil(radius * (a1 - a0) / step)));
  for (int k = 1; k <= n; ++k) {
    const double a = a0 + (a1 - a0) * double(k) / n;
    out.push_back(center + unit_from_angle(a) * radius);
  }
}

/// Maps between reference-frame points and cells of a side x side grid.
struct RasterFrame {
  int side = 256;

  double cell() const { return kReferenceSide / side; }
  Vec2 cell_center(int i, int j) const {
    return {(j + 0.5) * cell(), kReferenceSide - (i + 0.5) * cell()};
  }
  /// Continuous column coordinate (cell centers at integer + 0.5).
  double col_of(double x) const { return x / cell(); }
  double row_of(double y) const { return (kReferenceSide - y) / cell(); }
};

/// Calls f(i, j, distance, t) for every cell whose center lies within
/// `radius` of segment [a, b].
template <typename F>
void stamp_segment(const RasterFrame& frame, Vec2 a, Vec2 b, double radius,
                   F&& f) {
  const double c = frame.cell();
  const double xmin = std::min(a.x, b.x) - radius,
               xmax = std::max(a.x, b.x) + radius;
  const double ymin = std::min(a.y, b.y) - radius,
               ymax = std::max(a.y, b.y) + radius;
  const int j0 = std::max(0, static_cast<int>(std::floor(xmin / c - 0.5)));
  const int j1 = std::min(frame.side - 1, static_cast<int>(std::ceil(xmax / c - 0.5)));
  const int i0 = std::max(
      0, static_cast<int>(std::floor((kReferenceSide - ymax) / c - 0.5)));
  const int i1 = std::min(frame.side - 1, static_cast<int>(std::ceil(
                                              (kReferenceSide - ymin) / c - 0.5)));
  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j) {
      double t;
      const double d = segment_distance(frame.cell_center(i, j), a, b, &t);
      if (d <= radius) f(i, j, d, t);
    }
}

}  // namespace dsla

#endif  // DSLA_GEOMETRY_HPP_
