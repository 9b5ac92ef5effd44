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

#ifndef DSLA_CHECKPOINT_HPP_
#define DSLA_CHECKPOINT_HPP_

// Checkpoint directory layout:
//   weights.bin    named-parameter map
//   optimizer.bin  Adam moments, same container, names suffixed .m / .v
//   manifest.json  configuration, epoch, optimizer state version
//
// Named-parameter container (little-endian):
//   "DSLAPRM1", u32 count, then per entry:
//   u32 name_len, name bytes, u32 ndims, u32 dims[ndims], u64 numel,
//   f32 data[numel]

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsla/nn/adam.hpp"
#include "dsla/nn/network.hpp"

namespace dsla {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::vector<int> shape;
  std::vector<float> data;
};

using NamedArrays = std::map<std::string, NamedArray>;

namespace detail {
template <typename V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <typename V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw IoError("truncated parameter file");
  return v;
}
inline constexpr char kParamMagic[8] = {'D', 'S', 'L', 'A', 'P', 'R', 'M', '1'};
}  // namespace detail

inline void write_named_arrays(const std::filesystem::path& path,
                               const NamedArrays& arrays) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(detail::kParamMagic, 8);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, a] : arrays) {
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.size()));
    for (int d : a.shape) detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    detail::put<std::uint64_t>(os, a.data.size());
    os.write(reinterpret_cast<const char*>(a.data.data()),
             static_cast<std::streamsize>(a.data.size() * sizeof(float)));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline NamedArrays read_named_arrays(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kParamMagic, 8) != 0)
    throw IoError("not a parameter file: " + path.string());
  NamedArrays out;
  const auto count = detail::get<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(detail::get<std::uint32_t>(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    NamedArray a;
    const auto nd = detail::get<std::uint32_t>(is);
    for (std::uint32_t d = 0; d < nd; ++d)
      a.shape.push_back(static_cast<int>(detail::get<std::uint32_t>(is)));
    a.data.resize(detail::get<std::uint64_t>(is));
    is.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(float)));
    if (!is) throw IoError("truncated parameter file: " + path.string());
    out.emplace(std::move(name), std::move(a));
  }
  return out;
}

template <typename T>
NamedArrays network_arrays(const nn::Network<T>& net) {
  NamedArrays out;
  for (const auto* p : net.parameters())
    out[p->name] = {p->shape, std::vector<float>(p->value.begin(), p->value.end())};
  return out;
}

/// Copies arrays into matching parameters; every parameter must be present
/// with the same shape.
template <typename T>
void load_network_arrays(nn::Network<T>& net, const NamedArrays& arrays) {
  for (auto* p : net.parameters()) {
    auto it = arrays.find(p->name);
    if (it == arrays.end()) throw IoError("checkpoint lacks parameter " + p->name);
    if (it->second.shape != p->shape || it->second.data.size() != p->size())
      throw IoError("shape mismatch for parameter " + p->name);
    std::copy(it->second.data.begin(), it->second.data.end(), p->value.begin());
  }
}

template <typename T>
NamedArrays adam_arrays(const nn::Network<T>& net, const nn::Adam<T>& opt) {
  NamedArrays out;
  const auto params = net.parameters();
  const auto& m = opt.first_moments();
  const auto& v = opt.second_moments();
  for (std::size_t k = 0; k < m.size() && k < params.size(); ++k) {
    out[params[k]->name + ".m"] = {params[k]->shape, m[k]};
    out[params[k]->name + ".v"] = {params[k]->shape, v[k]};
  }
  return out;
}

template <typename T>
void load_adam_arrays(nn::Network<T>& net, nn::Adam<T>& opt,
                      const NamedArrays& arrays, std::uint64_t steps) {
  auto& m = opt.first_moments();
  auto& v = opt.second_moments();
  m.clear();
  v.clear();
  opt.set_steps(steps);
  if (arrays.empty()) return;
  for (const auto* p : net.parameters()) {
    auto im = arrays.find(p->name + ".m");
    auto iv = arrays.find(p->name + ".v");
    if (im == arrays.end() || iv == arrays.end())
      throw IoError("optimizer state lacks " + p->name);
    m.push_back(im->second.data);
    v.push_back(iv->second.data);
  }
}

}  // namespace dsla

#endif  // DSLA_CHECKPOINT_HPP_
