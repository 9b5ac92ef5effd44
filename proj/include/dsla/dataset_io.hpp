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

#ifndef DSLA_DATASET_IO_HPP_
#define DSLA_DATASET_IO_HPP_

// Dataset container. One directory per split; each sample is stored as
// flat layer arrays plus a JSON sidecar.
//
// Layer array file (little-endian):
//   u32 layers, u32 H, u32 W, u32 version, then f32 data[layers][H][W]
//
// Training sample <stem>:   <stem>.context.bin (2 layers: drivable, markings)
//                           <stem>.label.bin   (3 layers: mask, nx, ny)
//                           <stem>.json
// Evaluation sample <stem>: <stem>.context.bin, <stem>.lanes.bin (1 layer),
//                           <stem>.modes.json  [[i, j, [angles...]], ...]
//                           <stem>.json

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dsla/augmentation.hpp"
#include "dsla/checkpoint.hpp"
#include "dsla/scene_synth.hpp"
#include "dsla/tensor.hpp"

namespace dsla {

inline constexpr std::uint32_t kLayerFileVersion = 1;

inline void write_layers(const std::filesystem::path& path, const Tensor<float>& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  const std::uint32_t header[4] = {static_cast<std::uint32_t>(t.channels()),
                                   static_cast<std::uint32_t>(t.height()),
                                   static_cast<std::uint32_t>(t.width()),
                                   kLayerFileVersion};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!os) throw IoError("write failed: " + path.string());
}

inline Tensor<float> read_layers(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::uint32_t header[4];
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is) throw IoError("truncated layer file: " + path.string());
  if (header[3] != kLayerFileVersion)
    throw IoError("unsupported layer file version " + std::to_string(header[3]));
  Tensor<float> t(static_cast<int>(header[0]), static_cast<int>(header[1]),
                  static_cast<int>(header[2]));
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!is) throw IoError("truncated layer file: " + path.string());
  return t;
}

inline Tensor<float> label_tensor(const TrajectoryLabel& lab) {
  const int n = lab.side();
  Tensor<float> t(3, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      t(0, i, j) = lab.mask(i, j) ? 1.0f : 0.0f;
      t(1, i, j) = lab.nx(i, j);
      t(2, i, j) = lab.ny(i, j);
    }
  return t;
}

inline TrajectoryLabel label_from_tensor(const Tensor<float>& t) {
  if (t.channels() != 3) throw IoError("label file must have 3 layers");
  const int n = t.height();
  TrajectoryLabel lab{Grid<std::uint8_t>(n, n, 0), Grid<float>(n, n, 0.0f),
                      Grid<float>(n, n, 0.0f)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      lab.mask(i, j) = t(0, i, j) > 0.5f;
      lab.nx(i, j) = t(1, i, j);
      lab.ny(i, j) = t(2, i, j);
    }
  return lab;
}

inline nlohmann::json geometry_json(const GeometryParams& p) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : p.arms)
    arms.push_back({{"angle_deg", a.angle_deg}, {"lanes_in", a.lanes_in},
                    {"lanes_out", a.lanes_out}});
  return {{"arms", arms},
          {"lane_width", p.lane_width},
          {"ring_radius", p.ring_radius},
          {"markings",
           {{"center_line", p.markings.center_line},
            {"lane_dividers", p.markings.lane_dividers},
            {"stop_lines", p.markings.stop_lines}}},
          {"angle_jitter_deg", p.angle_jitter_deg},
          {"center_jitter", p.center_jitter}};
}

inline nlohmann::json warp_json(const WarpParams& w) {
  return {{"i0_prime", w.i0_prime}, {"j0_prime", w.j0_prime}, {"i0", w.i0},
          {"j0", w.j0},             {"i_max", w.i_max},       {"rotation", w.rotation}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  return nlohmann::json::parse(is);
}

inline void write_training_sample(const std::filesystem::path& dir,
                                  const std::string& stem, const RoadContext& ctx,
                                  const TrajectoryLabel& label,
                                  const nlohmann::json& sidecar) {
  write_layers(dir / (stem + ".context.bin"), ctx.as_tensor());
  write_layers(dir / (stem + ".label.bin"), label_tensor(label));
  write_json(dir / (stem + ".json"), sidecar);
}

struct StoredTrainingSample {
  RoadContext context;
  TrajectoryLabel label;
  nlohmann::json sidecar;
};

inline StoredTrainingSample read_training_sample(const std::filesystem::path& dir,
                                                 const std::string& stem) {
  return {RoadContext::from_tensor(read_layers(dir / (stem + ".context.bin"))),
          label_from_tensor(read_layers(dir / (stem + ".label.bin"))),
          read_json(dir / (stem + ".json"))};
}

inline nlohmann::json modes_json(const EvaluationSample& ev) {
  nlohmann::json out = nlohmann::json::array();
  const int n = ev.side();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto& m = ev.modes[static_cast<std::size_t>(i) * n + j];
      if (!m.empty()) out.push_back({i, j, m});
    }
  return out;
}

inline void write_eval_sample(const std::filesystem::path& dir,
                              const std::string& stem, const EvaluationSample& ev,
                              const nlohmann::json& sidecar) {
  write_layers(dir / (stem + ".context.bin"), ev.context.as_tensor());
  const int n = ev.side();
  Tensor<float> lanes(1, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lanes(0, i, j) = ev.lanes(i, j) ? 1.0f : 0.0f;
  write_layers(dir / (stem + ".lanes.bin"), lanes);
  write_json(dir / (stem + ".modes.json"), modes_json(ev));
  write_json(dir / (stem + ".json"), sidecar);
}

inline EvaluationSample read_eval_sample(const std::filesystem::path& dir,
                                         const std::string& stem) {
  EvaluationSample ev;
  ev.context = RoadContext::from_tensor(read_layers(dir / (stem + ".context.bin")));
  const Tensor<float> lanes = read_layers(dir / (stem + ".lanes.bin"));
  const int n = lanes.height();
  ev.lanes = Grid<std::uint8_t>(n, n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ev.lanes(i, j) = lanes(0, i, j) > 0.5f;
  ev.modes.assign(static_cast<std::size_t>(n) * n, {});
  for (const auto& e : read_json(dir / (stem + ".modes.json")))
    ev.modes[e[0].get<std::size_t>() * n + e[1].get<std::size_t>()] =
        e[2].get<std::vector<double>>();
  const auto side = read_json(dir / (stem + ".json"));
  ev.layout_name = side.value("layout", std::string{});
  if (side.contains("kind")) ev.kind = layout_kind_from_string(side["kind"]);
  return ev;
}

}  // namespace dsla

#endif  // DSLA_DATASET_IO_HPP_
