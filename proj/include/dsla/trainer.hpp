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

#ifndef DSLA_TRAINER_HPP_
#define DSLA_TRAINER_HPP_

// Online single-sample training. Every optimizer step draws a layout, a
// trajectory and fresh augmentation parameters from an RNG seeded by
// (seed, epoch, sample), so resuming at an epoch boundary replays the same
// sample sequence without storing generator state.
//
// Output directory:
//   train_log.jsonl       one record per optimizer step
//   eval_metrics.csv      epoch, split, layout_kind, l_eval_sla, l_eval_da
//   checkpoints/last/     most recent epoch
//   checkpoints/best/     lowest l_eval_sla + l_eval_da on the first eval set
//   eval_<split>.json     final reports
//   failure/              diagnostic dump of a sample with non-finite loss

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsla/augmentation.hpp"
#include "dsla/checkpoint.hpp"
#include "dsla/dataset_io.hpp"
#include "dsla/evaluation.hpp"
#include "dsla/losses.hpp"
#include "dsla/nn/adam.hpp"
#include "dsla/nn/network.hpp"
#include "dsla/random.hpp"
#include "dsla/scene_synth.hpp"

namespace dsla {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double eta = 6e-6;
  double lr_decay = 0.9;
  int lr_step_epochs = 100;
  double dropout_p = 0.2;
  int epochs = 2500;
  int samples_per_epoch = 75;
  std::uint64_t seed = 0;
  std::string scale = "full";  // full | desk
  int eval_every = 25;
  int eval_instances = kEvalInstancesPerLayout;
  bool augment = true;

  static TrainConfig desk() {
    TrainConfig c;
    c.eta = 1e-4;
    c.epochs = 300;
    c.samples_per_epoch = 17;
    c.scale = "desk";
    return c;
  }

  void validate() const {
    if (!(eta > 0.0)) throw ContractError("TrainConfig: eta must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
      throw ContractError("TrainConfig: lr_decay must be in (0, 1]");
    if (lr_step_epochs < 1) throw ContractError("TrainConfig: lr_step_epochs must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
      throw ContractError("TrainConfig: dropout_p must be in [0, 1)");
    if (epochs < 0) throw ContractError("TrainConfig: epochs must be >= 0");
    if (samples_per_epoch < 1)
      throw ContractError("TrainConfig: samples_per_epoch must be >= 1");
    if (scale != "full" && scale != "desk")
      throw ContractError("TrainConfig: scale must be full or desk");
    if (eval_every < 0) throw ContractError("TrainConfig: eval_every must be >= 0");
    if (eval_instances < 1) throw ContractError("TrainConfig: eval_instances must be >= 1");
  }
};

/// eta0 * decay^floor(epoch / step).
inline double lr_schedule(double eta0, int epoch, double decay = 0.9,
                          int step_epochs = 100) {
  if (epoch < 0) throw ContractError("lr_schedule: epoch must be >= 0");
  return eta0 * std::pow(decay, double(epoch / step_epochs));
}

struct TrainLogRecord {
  int epoch = 0;
  int sample = 0;
  double l_sla = 0.0;
  double l_da = 0.0;
  double l_total = 0.0;
  double wall_ms = 0.0;
  double lr = 0.0;
  std::string layout;
  std::size_t lane = 0;
};

inline nlohmann::json to_json(const TrainLogRecord& r) {
  return {{"epoch", r.epoch},   {"sample", r.sample}, {"l_sla", r.l_sla},
          {"l_da", r.l_da},     {"l_total", r.l_total}, {"wall_ms", r.wall_ms},
          {"lr", r.lr},         {"layout", r.layout}, {"lane", r.lane}};
}

/// One row of the evaluation metric stream. `layout_kind` is a layout kind
/// (mean over layouts of that kind) or "all" for the aggregate.
struct EvalRow {
  int epoch = 0;
  std::string split;
  std::string layout_kind;
  double l_eval_sla = 0.0;
  double l_eval_da = 0.0;
};

inline std::vector<EvalRow> eval_rows(int epoch, const EvalReport& r) {
  std::map<std::string, std::pair<EvalRow, int>> by_kind;
  std::vector<std::string> order;
  for (const auto& l : r.layouts) {
    auto [it, fresh] = by_kind.try_emplace(l.kind);
    if (fresh) order.push_back(l.kind);
    it->second.first.l_eval_sla += l.l_eval_sla;
    it->second.first.l_eval_da += l.l_eval_da;
    it->second.second += 1;
  }
  std::vector<EvalRow> rows;
  for (const auto& k : order) {
    auto& [row, n] = by_kind[k];
    rows.push_back({epoch, r.split, k, row.l_eval_sla / n, row.l_eval_da / n});
  }
  rows.push_back({epoch, r.split, "all", r.l_eval_sla, r.l_eval_da});
  return rows;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json layouts = nlohmann::json::array();
  for (const auto& l : r.layouts)
    layouts.push_back({{"layout", l.layout},
                       {"kind", l.kind},
                       {"l_eval_sla", l.l_eval_sla},
                       {"l_eval_da", l.l_eval_da},
                       {"instances", l.instances}});
  return {{"split", r.split},
          {"l_eval_sla", r.l_eval_sla},
          {"l_eval_da", r.l_eval_da},
          {"fingerprint", r.fingerprint},
          {"layouts", layouts}};
}

struct EvalSet {
  std::string split;
  std::vector<EvaluationSample> samples;
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"eta", c.eta},
          {"lr_decay", c.lr_decay},
          {"lr_step_epochs", c.lr_step_epochs},
          {"dropout_p", c.dropout_p},
          {"epochs", c.epochs},
          {"samples_per_epoch", c.samples_per_epoch},
          {"seed", c.seed},
          {"scale", c.scale},
          {"eval_every", c.eval_every},
          {"eval_instances", c.eval_instances},
          {"augment", c.augment}};
}

inline nlohmann::json to_json(const nn::NetworkConfig& c) {
  return {{"input_side", c.input_side},
          {"base_channels", c.base_channels},
          {"aspp_dilations", c.aspp_dilations},
          {"depth", c.depth},
          {"mixture_components", c.mixture_components},
          {"dropout_p", c.dropout_p}};
}

inline nlohmann::json to_json(const LossConfig& c) {
  return {{"alpha_sla", c.alpha_sla},
          {"b_max", c.circular.b_max},
          {"epsilon", c.circular.epsilon},
          {"n_quad", c.circular.n_quad}};
}

/// A training sample drawn for one optimizer step.
struct DrawnSample {
  std::size_t layout = 0;
  std::size_t lane = 0;
  RoadContext context;
  TrajectoryLabel label;
  std::optional<WarpParams> warp;
  std::uint64_t dropout_seed = 0;
};

struct TrainResult {
  std::vector<TrainLogRecord> log;
  std::vector<EvalRow> evals;
  std::vector<EvalReport> initial;  // before the first step of this run
  std::vector<EvalReport> final;
  int epochs_completed = 0;
};

class Trainer {
 public:
  Trainer(TrainConfig tc, nn::NetworkConfig nc, LossConfig lc,
          std::vector<LayoutSpec> corpus, std::vector<EvalSet> eval_sets,
          std::optional<std::filesystem::path> out_dir = std::nullopt)
      : tc_(std::move(tc)),
        nc_(prepare(nc, tc_)),
        lc_(lc),
        corpus_(std::move(corpus)),
        eval_sets_(std::move(eval_sets)),
        out_dir_(std::move(out_dir)),
        net_(nc_, derive_seed(tc_.seed, {0x1417u})) {
    tc_.validate();
    lc_.validate();
    if (corpus_.empty()) throw ContractError("train: corpus is empty");
    if (eval_sets_.empty()) throw ContractError("train: no evaluation set");
    for (const auto& e : eval_sets_)
      if (e.samples.empty()) throw ContractError("train: empty evaluation set " + e.split);
    for (const auto& spec : corpus_) {
      layouts_.push_back(spec.build());
      contexts_.push_back(rasterize_context(layouts_.back(), nc_.input_side));
    }
    fingerprint_ = fnv1a_hex(manifest_config().dump());
  }

  /// Restores weights, optimizer state and epoch counter from a checkpoint.
  void resume(const std::filesystem::path& ckpt) {
    const auto manifest = read_json(ckpt / "manifest.json");
    load_network_arrays(net_, read_named_arrays(ckpt / "weights.bin"));
    load_adam_arrays(net_, opt_, read_named_arrays(ckpt / "optimizer.bin"),
                     manifest.at("adam_steps").get<std::uint64_t>());
    epoch_ = manifest.at("epoch").get<int>();
    best_score_ = manifest.value("best_score", std::numeric_limits<double>::infinity());
  }

  /// Draws the sample used at (epoch, index).
  DrawnSample draw(int epoch, int index) const {
    Rng rng(derive_seed(tc_.seed, {std::uint64_t(epoch), std::uint64_t(index)}));
    for (int attempt = 0; attempt < 16; ++attempt) {
      DrawnSample s;
      s.layout = rng.index(layouts_.size());
      const auto traj = sample_trajectory(layouts_[s.layout], rng.next());
      s.lane = traj.lane_index;
      TrajectoryLabel label =
          rasterize_label(layouts_[s.layout], traj.path, nc_.output_side());
      if (tc_.augment) {
        s.warp = sample_warp_params(nc_.input_side, rng.next());
        auto [c, l] = apply_augmentation(contexts_[s.layout], label, *s.warp);
        s.context = std::move(c);
        s.label = std::move(l);
      } else {
        s.context = contexts_[s.layout];
        s.label = std::move(label);
      }
      s.dropout_seed = rng.next();
      if (s.label.count() > 0) return s;
    }
    throw TrainingError("could not draw a non-empty training label");
  }

  std::vector<EvalReport> evaluate_all() const {
    std::vector<EvalReport> out;
    for (const auto& e : eval_sets_) {
      EvalReport r = evaluate(net_, e.samples, e.split, lc_.circular);
      r.fingerprint = fingerprint_;
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Trains from the current epoch up to config().epochs.
  TrainResult run() {
    TrainResult res;
    std::ofstream log_file, csv_file;
    if (out_dir_) {
      std::filesystem::create_directories(*out_dir_);
      const auto mode = epoch_ == 0 ? std::ios::trunc : std::ios::app;
      log_file.open(*out_dir_ / "train_log.jsonl", std::ios::out | mode);
      const bool fresh_csv = epoch_ == 0;
      csv_file.open(*out_dir_ / "eval_metrics.csv", std::ios::out | mode);
      if (!log_file || !csv_file) throw IoError("cannot open training logs in " + out_dir_->string());
      if (fresh_csv) csv_file << "epoch,split,layout_kind,l_eval_sla,l_eval_da\n";
    }
    auto record_eval = [&](const std::vector<EvalReport>& reports) {
      for (const auto& r : reports)
        for (const auto& row : eval_rows(epoch_, r)) {
          res.evals.push_back(row);
          if (csv_file.is_open())
            csv_file << row.epoch << ',' << row.split << ',' << row.layout_kind << ','
                     << fmt(row.l_eval_sla) << ',' << fmt(row.l_eval_da) << '\n';
        }
      if (csv_file.is_open()) csv_file.flush();
    };

    const bool do_eval = tc_.eval_every > 0;
    if (do_eval) {
      res.initial = evaluate_all();
      record_eval(res.initial);
      if (epoch_ == 0) consider_best(res.initial);
    }
    if (epoch_ == 0) save_checkpoint("last");

    bool warned = false;
    const auto params = net_.parameters();
    while (epoch_ < tc_.epochs) {
      const double lr = lr_schedule(tc_.eta, epoch_, tc_.lr_decay, tc_.lr_step_epochs);
      for (int k = 0; k < tc_.samples_per_epoch; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const DrawnSample s = draw(epoch_, k);
        Rng drop_rng(s.dropout_seed);
        nn::Tape<float> tape;
        const Tensor<float> out =
            net_.forward(s.context.as_tensor(), nn::Mode::kTrain, &tape, &drop_rng);
        Tensor<float> grad;
        LossBreakdown b;
        try {
          for (float v : out.flat())
            if (!std::isfinite(v)) throw ContractError("non-finite network output");
          b = compute_losses(out, s.label, lc_, &grad);
          if (!std::isfinite(b.l_total)) throw ContractError("non-finite total loss");
        } catch (const ContractError& e) {
          const auto where = dump_failure(s, epoch_, k);
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch_) +
                              ", sample " + std::to_string(k) + " (" + e.what() + ")" +
                              (where.empty() ? "" : "; sample dumped to " + where));
        }
        if (b.collapsed() && !warned) {
          std::cerr << "warning: a loss term is zero at epoch " << epoch_ << ", sample "
                    << k << "; combined gradient scaling collapses\n";
          warned = true;
        }
        net_.zero_grad();
        net_.backward(tape, grad);
        for (const auto* p : params)
          for (std::size_t i = 0; i < p->size(); ++i)
            if (!std::isfinite(p->grad[i])) {
              const auto where = dump_failure(s, epoch_, k);
              throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch_) +
                                  ", sample " + std::to_string(k) +
                                  (where.empty() ? "" : "; sample dumped to " + where));
            }
        opt_.step(params, lr);
        const auto t1 = std::chrono::steady_clock::now();

        TrainLogRecord rec;
        rec.epoch = epoch_;
        rec.sample = k;
        rec.l_sla = b.l_sla;
        rec.l_da = b.l_da;
        rec.l_total = b.l_total;
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.lr = lr;
        rec.layout = corpus_[s.layout].name;
        rec.lane = s.lane;
        if (log_file.is_open()) log_file << to_json(rec).dump() << '\n';
        if (on_step) on_step(rec);
        res.log.push_back(std::move(rec));
      }
      ++epoch_;
      const bool last = epoch_ == tc_.epochs;
      if (do_eval && (epoch_ % tc_.eval_every == 0 || last)) {
        const auto reports = evaluate_all();
        record_eval(reports);
        consider_best(reports);
        if (last) res.final = reports;
      }
      save_checkpoint("last");
    }
    if (do_eval && res.final.empty()) res.final = res.initial;
    if (out_dir_)
      for (const auto& r : res.final)
        write_json(*out_dir_ / ("eval_" + r.split + ".json"), to_json(r));
    res.epochs_completed = epoch_;
    return res;
  }

  nlohmann::json manifest_config() const {
    return {{"train", to_json(tc_)}, {"network", to_json(nc_)}, {"loss", to_json(lc_)}};
  }

  const nn::Network<float>& network() const { return net_; }
  nn::Network<float>& network() { return net_; }
  const TrainConfig& config() const { return tc_; }
  const nn::NetworkConfig& network_config() const { return nc_; }
  int epoch() const { return epoch_; }
  const std::string& fingerprint() const { return fingerprint_; }

  std::function<void(const TrainLogRecord&)> on_step;

 private:
  static nn::NetworkConfig prepare(nn::NetworkConfig nc, const TrainConfig& tc) {
    nc.dropout_p = tc.dropout_p;
    nc.validate();
    return nc;
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
  }

  void consider_best(const std::vector<EvalReport>& reports) {
    const double score = reports.front().l_eval_sla + reports.front().l_eval_da;
    if (score < best_score_) {
      best_score_ = score;
      save_checkpoint("best");
    }
  }

  void save_checkpoint(const std::string& tag) const {
    if (!out_dir_) return;
    const auto dir = *out_dir_ / "checkpoints" / tag;
    std::filesystem::create_directories(dir);
    write_named_arrays(dir / "weights.bin", network_arrays(net_));
    write_named_arrays(dir / "optimizer.bin", adam_arrays(net_, opt_));
    nlohmann::json m = manifest_config();
    m["format"] = 1;
    m["epoch"] = epoch_;
    m["adam_steps"] = opt_.steps();
    if (std::isfinite(best_score_)) m["best_score"] = best_score_;
    m["fingerprint"] = fingerprint_;
    write_json(dir / "manifest.json", m);
  }

  std::string dump_failure(const DrawnSample& s, int epoch, int k) const {
    if (!out_dir_) return {};
    try {
      const auto dir = *out_dir_ / "failure";
      std::filesystem::create_directories(dir);
      nlohmann::json side{{"layout", corpus_[s.layout].name},
                          {"kind", to_string(corpus_[s.layout].kind)},
                          {"lane_index", s.lane},
                          {"epoch", epoch},
                          {"sample", k},
                          {"seed", tc_.seed}};
      if (s.warp) side["warp"] = warp_json(*s.warp);
      write_training_sample(dir, "sample", s.context, s.label, side);
      write_named_arrays(dir / "weights.bin", network_arrays(net_));
      return dir.string();
    } catch (const std::exception&) {
      return {};
    }
  }

  TrainConfig tc_;
  nn::NetworkConfig nc_;
  LossConfig lc_;
  std::vector<LayoutSpec> corpus_;
  std::vector<EvalSet> eval_sets_;
  std::optional<std::filesystem::path> out_dir_;
  nn::Network<float> net_;
  nn::Adam<float> opt_;
  std::vector<RoadLayout> layouts_;
  std::vector<RoadContext> contexts_;
  int epoch_ = 0;
  double best_score_ = std::numeric_limits<double>::infinity();
  std::string fingerprint_;
};

/// Convenience wrapper: builds a trainer, runs it to completion.
inline TrainResult train(const TrainConfig& tc, const nn::NetworkConfig& nc,
                         const LossConfig& lc, const std::vector<LayoutSpec>& corpus,
                         const std::vector<EvalSet>& eval_sets,
                         std::optional<std::filesystem::path> out_dir = std::nullopt) {
  Trainer t(tc, nc, lc, corpus, eval_sets, std::move(out_dir));
  return t.run();
}

}  // namespace dsla

#endif  // DSLA_TRAINER_HPP_
