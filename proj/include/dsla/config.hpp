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

#ifndef DSLA_CONFIG_HPP_
#define DSLA_CONFIG_HPP_

// INI-style experiment configuration.
//
//   [network]  input_side base_channels depth mixture_components aspp_dilations
//   [train]    scale eta lr_decay lr_step_epochs dropout_p epochs
//              samples_per_epoch seed eval_every eval_instances augment
//   [loss]     alpha_sla b_max epsilon n_quad
//   [data]     train_layouts test_layouts eval_seed samples_per_layout
//   [expN]     sweep experiment overrides: eta dropout_p alpha_sla
//
// `scale` selects the defaults every other key overrides; it is read first.
// Layout lists are comma separated corpus names or "all".

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dsla/losses.hpp"
#include "dsla/nn/network.hpp"
#include "dsla/scene_synth.hpp"
#include "dsla/trainer.hpp"

namespace dsla {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::vector<std::string> train_layouts;
  std::vector<std::string> test_layouts;
  std::uint64_t eval_seed = 0xe7a1;
  int samples_per_layout = 10;
};

struct SweepEntry {
  std::string id;
  double eta = 6e-6;
  double dropout_p = 0.2;
  double alpha_sla = 100.0;
};

struct ExperimentConfig {
  nn::NetworkConfig network;
  TrainConfig train;
  LossConfig loss;
  DataConfig data;
  std::vector<SweepEntry> sweep;

  static ExperimentConfig defaults(const std::string& scale) {
    ExperimentConfig c;
    if (scale == "desk") {
      c.network = nn::NetworkConfig::desk();
      c.train = TrainConfig::desk();
      c.data.train_layouts = {"intersection", "straight", "t_intersection"};
      c.data.test_layouts = {"t_intersection_two_lane", "intersection_oblique",
                             "straight_two_lane"};
    } else if (scale == "full") {
      for (const auto& l : standard_corpus())
        (l.split == Split::kTrain ? c.data.train_layouts : c.data.test_layouts)
            .push_back(l.name);
    } else {
      throw ConfigError("unknown scale '" + scale + "' (expected full or desk)");
    }
    return c;
  }

  void validate() const {
    network.validate();
    train.validate();
    loss.validate();
    if (data.train_layouts.empty()) throw ConfigError("data.train_layouts is empty");
    if (data.test_layouts.empty()) throw ConfigError("data.test_layouts is empty");
    if (data.samples_per_layout < 1) throw ConfigError("data.samples_per_layout must be >= 1");
    const auto all = standard_corpus();
    for (const auto* list : {&data.train_layouts, &data.test_layouts})
      for (const auto& n : *list)
        if (!find_layout(all, n)) throw ConfigError("unknown layout '" + n + "'");
  }

  std::vector<LayoutSpec> layouts(Split s) const {
    const auto all = standard_corpus();
    std::vector<LayoutSpec> out;
    for (const auto& n : s == Split::kTrain ? data.train_layouts : data.test_layouts) {
      auto l = find_layout(all, n);
      if (!l) throw ConfigError("unknown layout '" + n + "'");
      out.push_back(*l);
    }
    return out;
  }

  /// Train-distribution and test-distribution evaluation sets.
  std::vector<EvalSet> eval_sets() const {
    return {{"train", build_eval_set(layouts(Split::kTrain), network.input_side,
                                     train.eval_instances, data.eval_seed)},
            {"test", build_eval_set(layouts(Split::kTest), network.input_side,
                                    train.eval_instances, data.eval_seed)}};
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename V>
V parse_value(const std::string& key, const std::string& s) {
  V v{};
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end)
    throw ConfigError("invalid value for " + key + ": '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + s + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + v[k];
  return out;
}

inline std::vector<std::string> layout_list(const std::string& s, Split split) {
  if (s == "all") {
    std::vector<std::string> out;
    for (const auto& l : standard_corpus())
      if (l.split == split) out.push_back(l.name);
    return out;
  }
  return split_list(s);
}

/// Visits every known key of a section, failing on unknown ones.
class SectionReader {
 public:
  SectionReader(const boost::property_tree::ptree& tree, std::string section)
      : section_(std::move(section)) {
    if (auto child = tree.get_child_optional(section_)) node_ = &*child;
  }
  ~SectionReader() = default;

  template <typename F>
  void key(const std::string& name, F&& apply) {
    seen_.push_back(name);
    if (!node_) return;
    if (auto v = node_->get_optional<std::string>(name)) apply(section_ + "." + name, *v);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, _] : *node_)
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ConfigError("unknown key " + section_ + "." + k);
  }

 private:
  std::string section_;
  const boost::property_tree::ptree* node_ = nullptr;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline ExperimentConfig config_from_ptree(const boost::property_tree::ptree& tree) {
  using detail::parse_value;
  static const std::vector<std::string> known{"network", "train", "loss", "data"};
  for (const auto& [name, _] : tree)
    if (std::find(known.begin(), known.end(), name) == known.end() &&
        name.rfind("exp", 0) != 0)
      throw ConfigError("unknown section [" + name + "]");

  ExperimentConfig c = ExperimentConfig::defaults(tree.get<std::string>("train.scale", "full"));
  auto dbl = [](double& dst) {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_value<double>(k, v); };
  };
  auto integer = [](int& dst) {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_value<int>(k, v); };
  };
  auto u64 = [](std::uint64_t& dst) {
    return [&dst](const std::string& k, const std::string& v) {
      dst = parse_value<std::uint64_t>(k, v);
    };
  };

  detail::SectionReader net(tree, "network");
  net.key("input_side", integer(c.network.input_side));
  net.key("base_channels", integer(c.network.base_channels));
  net.key("depth", integer(c.network.depth));
  net.key("mixture_components", integer(c.network.mixture_components));
  net.key("aspp_dilations", [&](const std::string& k, const std::string& v) {
    c.network.aspp_dilations.clear();
    for (const auto& d : detail::split_list(v))
      c.network.aspp_dilations.push_back(parse_value<int>(k, d));
    c.network.aspp_branches = static_cast<int>(c.network.aspp_dilations.size());
  });
  net.finish();

  detail::SectionReader tr(tree, "train");
  tr.key("scale", [&](const std::string&, const std::string& v) { c.train.scale = v; });
  tr.key("eta", dbl(c.train.eta));
  tr.key("lr_decay", dbl(c.train.lr_decay));
  tr.key("lr_step_epochs", integer(c.train.lr_step_epochs));
  tr.key("dropout_p", dbl(c.train.dropout_p));
  tr.key("epochs", integer(c.train.epochs));
  tr.key("samples_per_epoch", integer(c.train.samples_per_epoch));
  tr.key("seed", u64(c.train.seed));
  tr.key("eval_every", integer(c.train.eval_every));
  tr.key("eval_instances", integer(c.train.eval_instances));
  tr.key("augment", [&](const std::string& k, const std::string& v) {
    c.train.augment = detail::parse_bool(k, v);
  });
  tr.finish();

  detail::SectionReader loss(tree, "loss");
  loss.key("alpha_sla", dbl(c.loss.alpha_sla));
  loss.key("b_max", dbl(c.loss.circular.b_max));
  loss.key("epsilon", dbl(c.loss.circular.epsilon));
  loss.key("n_quad", integer(c.loss.circular.n_quad));
  loss.finish();

  detail::SectionReader data(tree, "data");
  data.key("train_layouts", [&](const std::string&, const std::string& v) {
    c.data.train_layouts = detail::layout_list(v, Split::kTrain);
  });
  data.key("test_layouts", [&](const std::string&, const std::string& v) {
    c.data.test_layouts = detail::layout_list(v, Split::kTest);
  });
  data.key("eval_seed", u64(c.data.eval_seed));
  data.key("samples_per_layout", integer(c.data.samples_per_layout));
  data.finish();

  for (const auto& [name, _] : tree) {
    if (name.rfind("exp", 0) != 0) continue;
    SweepEntry e;
    e.id = name.substr(3);
    e.eta = c.train.eta;
    e.dropout_p = c.train.dropout_p;
    e.alpha_sla = c.loss.alpha_sla;
    detail::SectionReader ex(tree, name);
    ex.key("eta", dbl(e.eta));
    ex.key("dropout_p", dbl(e.dropout_p));
    ex.key("alpha_sla", dbl(e.alpha_sla));
    ex.finish();
    c.sweep.push_back(e);
  }
  c.validate();
  return c;
}

inline boost::property_tree::ptree config_to_ptree(const ExperimentConfig& c) {
  using detail::format_double;
  boost::property_tree::ptree t;
  std::vector<std::string> dil;
  for (int d : c.network.aspp_dilations) dil.push_back(std::to_string(d));
  t.put("network.input_side", c.network.input_side);
  t.put("network.base_channels", c.network.base_channels);
  t.put("network.depth", c.network.depth);
  t.put("network.mixture_components", c.network.mixture_components);
  t.put("network.aspp_dilations", detail::join_list(dil));
  t.put("train.scale", c.train.scale);
  t.put("train.eta", format_double(c.train.eta));
  t.put("train.lr_decay", format_double(c.train.lr_decay));
  t.put("train.lr_step_epochs", c.train.lr_step_epochs);
  t.put("train.dropout_p", format_double(c.train.dropout_p));
  t.put("train.epochs", c.train.epochs);
  t.put("train.samples_per_epoch", c.train.samples_per_epoch);
  t.put("train.seed", c.train.seed);
  t.put("train.eval_every", c.train.eval_every);
  t.put("train.eval_instances", c.train.eval_instances);
  t.put("train.augment", c.train.augment ? "true" : "false");
  t.put("loss.alpha_sla", format_double(c.loss.alpha_sla));
  t.put("loss.b_max", format_double(c.loss.circular.b_max));
  t.put("loss.epsilon", format_double(c.loss.circular.epsilon));
  t.put("loss.n_quad", c.loss.circular.n_quad);
  t.put("data.train_layouts", detail::join_list(c.data.train_layouts));
  t.put("data.test_layouts", detail::join_list(c.data.test_layouts));
  t.put("data.eval_seed", c.data.eval_seed);
  t.put("data.samples_per_layout", c.data.samples_per_layout);
  for (const auto& e : c.sweep) {
    boost::property_tree::ptree s;
    s.put("eta", format_double(e.eta));
    s.put("dropout_p", format_double(e.dropout_p));
    s.put("alpha_sla", format_double(e.alpha_sla));
    t.add_child("exp" + e.id, s);
  }
  return t;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  return config_from_ptree(tree);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  boost::property_tree::write_ini(os, config_to_ptree(c));
  return os.str();
}

}  // namespace dsla

#endif  // DSLA_CONFIG_HPP_
