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

#ifndef DSLA_NN_NETWORK_HPP_
#define DSLA_NN_NETWORK_HPP_

// Directional soft-lane affordance network:
//
//   input (2, S, S)
//     -> ASPP: parallel dilated 3x3 stride-2 branches, concat, 1x1 projection
//     -> U-Net: (depth + 1) encoder levels of two 3x3 convs with 2x2 max pool
//        between them, depth decoder levels of nearest upsample + skip concat
//        + two 3x3 convs
//     -> four task heads (SLA, one per mixture component), 3x3 + 1x1 + sigmoid
//   output (1 + 3M, S/2, S/2): [sla, (mu~, sigma~, w~) x M]

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dsla/circular_stats.hpp"
#include "dsla/nn/layers.hpp"
#include "dsla/random.hpp"
#include "dsla/tensor.hpp"

namespace dsla::nn {

enum class Mode { kTrain, kEval };

struct NetworkConfig {
  int input_side = 256;
  int base_channels = 32;
  int aspp_branches = 8;
  std::vector<int> aspp_dilations{1, 2, 4, 6, 8, 12, 16, 24};
  int depth = 6;
  int mixture_components = 3;
  double dropout_p = 0.0;

  /// CI-scale configuration: 64 x 64 input, 8 base channels, 2 x 2 bottleneck.
  static NetworkConfig desk() {
    NetworkConfig c;
    c.input_side = 64;
    c.base_channels = 8;
    c.depth = 4;
    return c;
  }

  int output_side() const { return input_side / 2; }
  int output_layers() const { return 1 + 3 * mixture_components; }
  int bottleneck_side() const { return input_side >> (depth + 1); }
  /// Channel width of U-Net level l; doubling stops after three levels.
  int channels(int level) const {
    return base_channels << std::min(level, 3);
  }
  int unet_conv_layers() const { return 2 * (depth + 1) + 2 * depth; }

  void validate() const {
    if (input_side <= 0 || base_channels <= 0 || depth < 0)
      throw ContractError("NetworkConfig: sizes must be positive");
    if (input_side % (1 << (depth + 1)) != 0 || bottleneck_side() < 2)
      throw ContractError("NetworkConfig: input_side / 2^(depth+1) must be an "
                          "integer >= 2");
    if (aspp_branches < 1 ||
        static_cast<int>(aspp_dilations.size()) != aspp_branches)
      throw ContractError("NetworkConfig: one dilation per ASPP branch");
    if (mixture_components < 1)
      throw ContractError("NetworkConfig: mixture_components must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
      throw ContractError("NetworkConfig: dropout_p must lie in [0, 1)");
  }
};

struct LayerInfo {
  std::string name;
  std::string stage;  // aspp, encoder, decoder, head
  int in_channels, out_channels, in_side, out_side, kernel, stride, dilation;
};

struct NetworkSummary {
  std::vector<LayerInfo> layers;
  int aspp_branches = 0;
  int unet_conv_layers = 0;
  int bottleneck_side = 0;
  bool aspp_halves_resolution = false;
  std::size_t parameter_count = 0;
};

/// Quantities saved by a training-mode forward pass for backward().
template <typename T>
struct Tape {
  Tensor<T> input;
  std::vector<Tensor<T>> branch_out;
  Tensor<T> aspp_cat, aspp_out;
  struct Enc {
    Tensor<T> in, h1, h2;
    std::vector<std::uint32_t> pool_idx;
    std::vector<T> drop_scale;
  };
  struct Dec {
    Tensor<T> cat, d1, d2;
  };
  struct Head {
    Tensor<T> e, o;
  };
  std::vector<Enc> enc;
  std::vector<Dec> dec;  // dec[l] is decoder level l
  std::vector<Head> heads;
};

template <typename T>
class Network {
 public:
  explicit Network(NetworkConfig cfg = {}, std::uint64_t seed = 0)
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int C = cfg_.base_channels;
    for (int b = 0; b < cfg_.aspp_branches; ++b)
      aspp_.emplace_back("aspp.branch" + std::to_string(b), 2, C, 3, 2,
                         cfg_.aspp_dilations[b]);
    aspp_proj_ = Conv2d<T>("aspp.project", C * cfg_.aspp_branches, C, 1);
    for (int l = 0; l <= cfg_.depth; ++l) {
      const int in = l == 0 ? C : cfg_.channels(l - 1);
      const std::string n = "enc" + std::to_string(l);
      enc_.push_back({Conv2d<T>(n + ".conv_a", in, cfg_.channels(l), 3),
                      Conv2d<T>(n + ".conv_b", cfg_.channels(l), cfg_.channels(l), 3)});
    }
    for (int l = 0; l < cfg_.depth; ++l) {
      const int in = cfg_.channels(l + 1) + cfg_.channels(l);
      const std::string n = "dec" + std::to_string(l);
      dec_.push_back({Conv2d<T>(n + ".conv_a", in, cfg_.channels(l), 3),
                      Conv2d<T>(n + ".conv_b", cfg_.channels(l), cfg_.channels(l), 3)});
    }
    heads_.push_back({Conv2d<T>("head_sla.conv", C, C, 3),
                      Conv2d<T>("head_sla.out", C, 1, 1)});
    for (int m = 0; m < cfg_.mixture_components; ++m) {
      const std::string n = "head_dir" + std::to_string(m);
      heads_.push_back({Conv2d<T>(n + ".conv", C, C, 3), Conv2d<T>(n + ".out", C, 3, 1)});
    }
    Rng rng(derive_seed(seed, {0x1417u}));
    for (auto* c : convs()) c->init_he(rng);
  }

  const NetworkConfig& config() const { return cfg_; }

  /// Training mode with dropout needs `rng`; pass `tape` to enable backward().
  Tensor<T> forward(const Tensor<T>& input, Mode mode, Tape<T>* tape = nullptr,
                    Rng* rng = nullptr) const {
    if (input.channels() != 2 || input.height() != cfg_.input_side ||
        input.width() != cfg_.input_side)
      throw ContractError("Network::forward: expected input 2x" +
                          std::to_string(cfg_.input_side) + "x" +
                          std::to_string(cfg_.input_side) + ", got " +
                          input.shape_string());
    const bool drop = mode == Mode::kTrain && cfg_.dropout_p > 0.0;
    if (drop && !rng) throw ContractError("Network::forward: dropout needs rng");
    if (tape) {
      *tape = Tape<T>{};
      tape->input = input;
    }

    std::vector<Tensor<T>> branches;
    branches.reserve(aspp_.size());
    for (const auto& conv : aspp_) {
      branches.push_back(conv.forward(input));
      leaky_relu_inplace(branches.back());
    }
    std::vector<const Tensor<T>*> parts;
    for (const auto& b : branches) parts.push_back(&b);
    Tensor<T> cat = concat_channels<T>(parts);
    Tensor<T> h = aspp_proj_.forward(cat);
    leaky_relu_inplace(h);
    if (tape) {
      tape->branch_out = std::move(branches);
      tape->aspp_cat = std::move(cat);
      tape->aspp_out = h;
    }

    std::vector<Tensor<T>> skips;
    for (int l = 0; l <= cfg_.depth; ++l) {
      typename Tape<T>::Enc rec;
      if (l > 0) h = max_pool2(h, tape ? &rec.pool_idx : nullptr);
      Tensor<T> h1 = enc_[l].a.forward(h);
      leaky_relu_inplace(h1);
      Tensor<T> h2 = enc_[l].b.forward(h1);
      leaky_relu_inplace(h2);
      if (tape) {
        rec.in = h;
        rec.h1 = h1;
        rec.h2 = h2;
      }
      if (drop) rec.drop_scale = dropout2d_inplace(h2, cfg_.dropout_p, *rng);
      if (tape) tape->enc.push_back(std::move(rec));
      skips.push_back(h2);
      h = std::move(h2);
    }

    if (tape) tape->dec.resize(cfg_.depth);
    Tensor<T> d = std::move(skips.back());
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      Tensor<T> up = upsample_nearest2(d);
      const std::array<const Tensor<T>*, 2> p2{&up, &skips[l]};
      Tensor<T> c = concat_channels<T>(p2);
      Tensor<T> d1 = dec_[l].a.forward(c);
      leaky_relu_inplace(d1);
      Tensor<T> d2 = dec_[l].b.forward(d1);
      leaky_relu_inplace(d2);
      if (tape) tape->dec[l] = {std::move(c), d1, d2};
      d = std::move(d2);
    }

    Tensor<T> out(cfg_.output_layers(), d.height(), d.width());
    int layer = 0;
    for (const auto& head : heads_) {
      Tensor<T> e = head.a.forward(d);
      leaky_relu_inplace(e);
      Tensor<T> o = head.b.forward(e);
      sigmoid_inplace(o);
      std::copy(o.data(), o.data() + o.size(), out.data() + layer * out.plane());
      layer += o.channels();
      if (tape) tape->heads.push_back({std::move(e), std::move(o)});
    }
    return out;
  }

  /// Accumulates dL/dtheta given dL/d(output) for the pass recorded in tape.
  void backward(const Tape<T>& tape, const Tensor<T>& grad_out) {
    Tensor<T> gd;
    int layer = 0;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const auto& rec = tape.heads[k];
      Tensor<T> go = slice_channels(grad_out, layer, rec.o.channels());
      layer += rec.o.channels();
      sigmoid_backward(rec.o, go);
      Tensor<T> ge = heads_[k].b.backward(rec.e, go);
      leaky_relu_backward(rec.e, ge);
      Tensor<T> g = heads_[k].a.backward(tape.dec.empty() ? tape.enc[0].h2 : tape.dec[0].d2, ge);
      if (k == 0) gd = std::move(g);
      else add_inplace(gd, g);
    }

    // Gradients w.r.t. the (post-dropout) output of every encoder level.
    std::vector<Tensor<T>> gskip(cfg_.depth + 1);
    for (int l = 0; l < cfg_.depth; ++l) {
      const auto& rec = tape.dec[l];
      leaky_relu_backward(rec.d2, gd);
      Tensor<T> g1 = dec_[l].b.backward(rec.d1, gd);
      leaky_relu_backward(rec.d1, g1);
      Tensor<T> gc = dec_[l].a.backward(rec.cat, g1);
      const int cu = cfg_.channels(l + 1);
      gskip[l] = slice_channels(gc, cu, gc.channels() - cu);
      gd = upsample_nearest2_backward(slice_channels(gc, 0, cu));
    }
    // What remains is the gradient of the deepest encoder output.
    gskip[cfg_.depth] = std::move(gd);

    Tensor<T> gin;
    for (int l = cfg_.depth; l >= 0; --l) {
      const auto& rec = tape.enc[l];
      Tensor<T> g = std::move(gskip[l]);
      if (!rec.drop_scale.empty()) dropout2d_backward(rec.drop_scale, g);
      leaky_relu_backward(rec.h2, g);
      Tensor<T> g1 = enc_[l].b.backward(rec.h1, g);
      leaky_relu_backward(rec.h1, g1);
      Tensor<T> gi = enc_[l].a.backward(rec.in, g1);
      if (l > 0) {
        const auto& prev = tape.enc[l - 1].h2;
        Tensor<T> gp = max_pool2_backward(gi, rec.pool_idx, prev.channels(),
                                          prev.height(), prev.width());
        add_inplace(gskip[l - 1], gp);
      } else {
        gin = std::move(gi);
      }
    }

    leaky_relu_backward(tape.aspp_out, gin);
    Tensor<T> gcat = aspp_proj_.backward(tape.aspp_cat, gin);
    const int C = cfg_.base_channels;
    for (std::size_t b = 0; b < aspp_.size(); ++b) {
      Tensor<T> gb = slice_channels(gcat, static_cast<int>(b) * C, C);
      leaky_relu_backward(tape.branch_out[b], gb);
      aspp_[b].backward(tape.input, gb, /*need_input_grad=*/false);
    }
  }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    for (auto* c : convs()) {
      out.push_back(&c->weight());
      out.push_back(&c->bias());
    }
    return out;
  }
  std::vector<const Param<T>*> parameters() const {
    std::vector<const Param<T>*> out;
    for (auto* p : const_cast<Network*>(this)->parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  /// Head k: 0 is SLA, 1 + m is mixture component m.
  std::pair<Conv2d<T>*, Conv2d<T>*> head(int k) {
    return {&heads_[k].a, &heads_[k].b};
  }

  NetworkSummary summary() const {
    NetworkSummary s;
    const int S = cfg_.input_side;
    auto add = [&](const Conv2d<T>& c, const std::string& stage, int in_side) {
      s.layers.push_back({c.weight().name.substr(0, c.weight().name.rfind('.')),
                          stage, c.in_channels(), c.out_channels(), in_side,
                          c.out_size(in_side), c.kernel(), c.stride(),
                          c.dilation()});
    };
    for (const auto& c : aspp_) add(c, "aspp", S);
    s.aspp_branches = static_cast<int>(aspp_.size());
    const int f = aspp_.front().out_size(S);
    add(aspp_proj_, "aspp", f);
    s.aspp_halves_resolution = f * 2 == S;
    int side = f;
    for (int l = 0; l <= cfg_.depth; ++l) {
      if (l > 0) side /= 2;
      add(enc_[l].a, "encoder", side);
      add(enc_[l].b, "encoder", side);
    }
    s.bottleneck_side = side;
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      side *= 2;
      add(dec_[l].a, "decoder", side);
      add(dec_[l].b, "decoder", side);
    }
    for (const auto& h : heads_) {
      add(h.a, "head", side);
      add(h.b, "head", side);
    }
    for (const auto& l : s.layers)
      s.unet_conv_layers += l.stage == "encoder" || l.stage == "decoder";
    s.parameter_count = parameter_count();
    return s;
  }

 private:
  struct Pair {
    Conv2d<T> a, b;
  };

  std::vector<Conv2d<T>*> convs() {
    std::vector<Conv2d<T>*> out;
    for (auto& c : aspp_) out.push_back(&c);
    out.push_back(&aspp_proj_);
    for (auto& p : enc_) out.insert(out.end(), {&p.a, &p.b});
    for (auto& p : dec_) out.insert(out.end(), {&p.a, &p.b});
    for (auto& p : heads_) out.insert(out.end(), {&p.a, &p.b});
    return out;
  }

  NetworkConfig cfg_;
  std::vector<Conv2d<T>> aspp_;
  Conv2d<T> aspp_proj_;
  std::vector<Pair> enc_, dec_, heads_;
};

/// Per-cell mixture parameters read from an output tensor.
template <typename T>
void directional_at(const Tensor<T>& out, int M, int i, int j,
                    std::span<RawDirectional> dst) {
  for (int m = 0; m < M; ++m)
    dst[m] = {static_cast<double>(out(1 + 3 * m, i, j)),
              static_cast<double>(out(2 + 3 * m, i, j)),
              static_cast<double>(out(3 + 3 * m, i, j))};
}

}  // namespace dsla::nn

#endif  // DSLA_NN_NETWORK_HPP_
