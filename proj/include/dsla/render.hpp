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

#ifndef DSLA_RENDER_HPP_
#define DSLA_RENDER_HPP_

// Static visualization: drivable region and markings as background, SLA as a
// heatmap overlay, and one arrow per retained mixture component.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "dsla/checkpoint.hpp"
#include "dsla/circular_stats.hpp"
#include "dsla/nn/network.hpp"
#include "dsla/scene_synth.hpp"

namespace dsla {

struct RenderSpec {
  std::string colormap = "heat";  // heat | gray | viridis
  int stride = 4;
  double arrow_scale = 1.0;  // arrow length in strides at weight 1
  double threshold = 0.1;
  double min_weight = 0.2;
  int image_size = 512;

  void validate() const {
    if (stride < 1) throw ContractError("RenderSpec: stride must be >= 1");
    if (!(threshold >= 0.0 && threshold < 1.0))
      throw ContractError("RenderSpec: threshold must be in [0, 1)");
    if (image_size < 1) throw ContractError("RenderSpec: image_size must be >= 1");
    if (!(arrow_scale > 0.0)) throw ContractError("RenderSpec: arrow_scale must be > 0");
    if (colormap != "heat" && colormap != "gray" && colormap != "viridis")
      throw ContractError("RenderSpec: unknown colormap " + colormap);
  }
};

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}
  std::uint8_t* px(int x, int y) { return &rgb[(std::size_t(y) * width + x) * 3]; }
  const std::uint8_t* px(int x, int y) const {
    return &rgb[(std::size_t(y) * width + x) * 3];
  }
};

struct Arrow {
  int i = 0, j = 0;
  double mu = 0.0;
  double w = 0.0;
};

struct Rendering {
  Image image;
  std::vector<Arrow> arrows;
  std::size_t arrow_count() const { return arrows.size(); }
};

namespace detail {

using Rgb = std::array<double, 3>;

inline Rgb colormap(const std::string& name, double v) {
  v = std::clamp(v, 0.0, 1.0);
  static const std::vector<Rgb> heat{{0, 0, 0}, {180, 20, 0}, {255, 140, 0}, {255, 255, 120}};
  static const std::vector<Rgb> viridis{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  if (name == "gray") return {255 * v, 255 * v, 255 * v};
  const auto& lut = name == "viridis" ? viridis : heat;
  const double x = v * double(lut.size() - 1);
  const std::size_t k = std::min(lut.size() - 2, static_cast<std::size_t>(x));
  const double t = x - double(k);
  Rgb c;
  for (int ch = 0; ch < 3; ++ch) c[ch] = (1 - t) * lut[k][ch] + t * lut[k + 1][ch];
  return c;
}

inline void plot(Image& img, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.px(x, y);
  for (int ch = 0; ch < 3; ++ch) p[ch] = static_cast<std::uint8_t>(std::lround(c[ch]));
}

inline void draw_line(Image& img, double x0, double y0, double x1, double y1,
                      const Rgb& c) {
  int xa = int(std::lround(x0)), ya = int(std::lround(y0));
  const int xb = int(std::lround(x1)), yb = int(std::lround(y1));
  const int dx = std::abs(xb - xa), dy = -std::abs(yb - ya);
  const int sx = xa < xb ? 1 : -1, sy = ya < yb ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    plot(img, xa, ya, c);
    if (xa == xb && ya == yb) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; xa += sx; }
    if (e2 <= dx) { err += dx; ya += sy; }
  }
}

}  // namespace detail

/// Renders a network output over its input context. Arrows are placed at
/// cells whose row and column are multiples of the stride.
template <typename T>
Rendering render(const RoadContext& context, const Tensor<T>& output,
                 const RenderSpec& spec = {}, const CircularConstants& consts = {}) {
  spec.validate();
  const int M = (output.channels() - 1) / 3;
  if (M < 1 || output.channels() != 1 + 3 * M)
    throw ContractError("render: output must have 1 + 3M layers");
  if (output.height() != output.width())
    throw ContractError("render: output must be square");
  const int n = output.height();
  const int S = spec.image_size;
  const int cs = context.side();

  Rendering r;
  r.image = Image(S, S);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const int ci = std::min(cs - 1, y * cs / S), cj = std::min(cs - 1, x * cs / S);
      const double d = context.drivable(ci, cj), mk = context.markings(ci, cj);
      double base = 24.0 + 72.0 * d;
      base = base + (235.0 - base) * std::clamp(mk, 0.0, 1.0);
      detail::Rgb c{base, base, base};
      const int oi = std::min(n - 1, y * n / S), oj = std::min(n - 1, x * n / S);
      const double s = std::clamp(static_cast<double>(output(0, oi, oj)), 0.0, 1.0);
      if (s > 0.0) {
        const auto h = detail::colormap(spec.colormap, s);
        for (int ch = 0; ch < 3; ++ch) c[ch] = (1.0 - s) * c[ch] + s * h[ch];
      }
      detail::plot(r.image, x, y, c);
    }

  const double cell = double(S) / n;
  std::vector<RawDirectional> raw(M);
  const detail::Rgb arrow_color{80, 200, 255};
  for (int i = 0; i < n; i += spec.stride)
    for (int j = 0; j < n; j += spec.stride) {
      if (!(static_cast<double>(output(0, i, j)) > spec.threshold)) continue;
      nn::directional_at(output, M, i, j, raw);
      const Mixture mix = params_from_raw(raw, consts);
      const double cx = (j + 0.5) * cell, cy = (i + 0.5) * cell;
      for (const auto& comp : mix.components()) {
        if (!(comp.w > spec.min_weight)) continue;
        r.arrows.push_back({i, j, comp.mu, comp.w});
        const double len = spec.arrow_scale * comp.w * spec.stride * cell;
        const double ex = cx + len * std::cos(comp.mu), ey = cy - len * std::sin(comp.mu);
        detail::draw_line(r.image, cx, cy, ex, ey, arrow_color);
        const double head = 0.35 * len;
        for (double side : {+1.0, -1.0}) {
          const double a = comp.mu + std::numbers::pi + side * 0.5;
          detail::draw_line(r.image, ex, ey, ex + head * std::cos(a), ey - head * std::sin(a),
                            arrow_color);
        }
      }
    }
  return r;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.px(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("write failed: " + path.string());
}

}  // namespace dsla

#endif  // DSLA_RENDER_HPP_
