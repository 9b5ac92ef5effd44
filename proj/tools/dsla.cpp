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

// dsla: dataset generation, training, evaluation, sweeps and rendering.
//
//   dsla gen-data --config desk.cfg --out data/
//   dsla train    --config desk.cfg --out runs/a [--resume runs/a/checkpoints/last]
//   dsla eval     --config desk.cfg --out runs/a --checkpoint last --split test
//   dsla render   --config desk.cfg --out runs/a --checkpoint best --layout roundabout
//   dsla sweep    --config table1.cfg --out runs/sweep
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dsla/config.hpp"
#include "dsla/dataset_io.hpp"
#include "dsla/render.hpp"
#include "dsla/sweep.hpp"
#include "dsla/trainer.hpp"

namespace fs = std::filesystem;
using namespace dsla;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--config", c.config, "Experiment configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "RNG seed, overrides train.seed");
  auto* o = app->add_option("--out", c.out, "Output directory");
  if (out_required) o->required();
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig::defaults("desk")
                                          : load_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  return cfg;
}

fs::path resolve_checkpoint(const std::string& name, const fs::path& out) {
  if (name == "last" || name == "best") return out / "checkpoints" / name;
  return name;
}

nn::NetworkConfig network_from_manifest(const fs::path& ckpt, nn::NetworkConfig base) {
  const auto m = read_json(ckpt / "manifest.json");
  const auto& n = m.at("network");
  base.input_side = n.at("input_side");
  base.base_channels = n.at("base_channels");
  base.depth = n.at("depth");
  base.mixture_components = n.at("mixture_components");
  base.aspp_dilations = n.at("aspp_dilations").get<std::vector<int>>();
  base.aspp_branches = static_cast<int>(base.aspp_dilations.size());
  base.dropout_p = 0.0;
  return base;
}

nn::Network<float> load_network(const fs::path& ckpt, const ExperimentConfig& cfg) {
  nn::Network<float> net(network_from_manifest(ckpt, cfg.network), 0);
  load_network_arrays(net, read_named_arrays(ckpt / "weights.bin"));
  return net;
}

void print_report(const EvalReport& r) {
  std::cout << r.split << ": l_eval_sla=" << r.l_eval_sla << " l_eval_da=" << r.l_eval_da
            << '\n';
  for (const auto& l : r.layouts)
    std::cout << "  " << l.layout << " (" << l.kind << "): " << l.l_eval_sla << ' '
              << l.l_eval_da << '\n';
}

int cmd_gen_data(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const fs::path out = c.out;
  const int side = cfg.network.input_side;
  nlohmann::json index{{"context_side", side}, {"label_side", side / 2},
                       {"seed", cfg.train.seed}, {"splits", nlohmann::json::object()}};
  for (Split split : {Split::kTrain, Split::kTest}) {
    const std::string tag = to_string(split);
    const fs::path dir = out / tag, eval_dir = out / tag / "eval";
    fs::create_directories(eval_dir);
    nlohmann::json listing = nlohmann::json::array();
    const auto specs = cfg.layouts(split);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const RoadLayout layout = specs[s].build();
      const RoadContext context = rasterize_context(layout, side);
      for (int k = 0; k < cfg.data.samples_per_layout; ++k) {
        Rng rng(derive_seed(cfg.train.seed, {std::uint64_t(split), s, std::uint64_t(k)}));
        const auto traj = sample_trajectory(layout, rng.next());
        const auto warp = sample_warp_params(side, rng.next());
        auto [ctx, label] =
            apply_augmentation(context, rasterize_label(layout, traj.path, side / 2), warp);
        const std::string stem = specs[s].name + "_" + std::to_string(k);
        write_training_sample(dir, stem, ctx, label,
                              {{"layout", specs[s].name},
                               {"kind", to_string(specs[s].kind)},
                               {"split", tag},
                               {"lane_index", traj.lane_index},
                               {"label_cells", label.count()},
                               {"geometry", geometry_json(specs[s].params)},
                               {"warp", warp_json(warp)}});
        listing.push_back(stem);
      }
    }
    const auto evals = build_eval_set(specs, side, cfg.train.eval_instances, cfg.data.eval_seed);
    nlohmann::json eval_listing = nlohmann::json::array();
    for (std::size_t k = 0; k < evals.size(); ++k) {
      const std::string stem =
          evals[k].layout_name + "_" + std::to_string(k % cfg.train.eval_instances);
      write_eval_sample(eval_dir, stem, evals[k],
                        {{"layout", evals[k].layout_name},
                         {"kind", to_string(evals[k].kind)},
                         {"split", tag},
                         {"mode_cells", evals[k].mode_cells()}});
      eval_listing.push_back(stem);
    }
    index["splits"][tag] = {{"samples", listing}, {"eval", eval_listing}};
    std::cout << tag << ": " << listing.size() << " training samples, " << eval_listing.size()
              << " evaluation samples\n";
  }
  write_json(out / "dataset.json", index);
  return 0;
}

int cmd_train(const Common& c, const std::string& resume, std::optional<int> epochs) {
  ExperimentConfig cfg = load(c);
  if (epochs) cfg.train.epochs = *epochs;
  cfg.validate();
  const fs::path out = c.out;
  fs::create_directories(out);
  std::ofstream(out / "config.cfg") << serialize_config(cfg);
  Trainer t(cfg.train, cfg.network, cfg.loss, cfg.layouts(Split::kTrain), cfg.eval_sets(), out);
  if (!resume.empty()) t.resume(resolve_checkpoint(resume, out));
  const int every = std::max(1, cfg.train.epochs / 20);
  t.on_step = [&](const TrainLogRecord& r) {
    if (r.sample + 1 == cfg.train.samples_per_epoch && (r.epoch + 1) % every == 0)
      std::cout << "epoch " << r.epoch + 1 << "/" << cfg.train.epochs << " l_sla=" << r.l_sla
                << " l_da=" << r.l_da << " lr=" << r.lr << std::endl;
  };
  const TrainResult res = t.run();
  for (const auto& r : res.final) print_report(r);
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& split) {
  const ExperimentConfig cfg = load(c);
  const fs::path out = c.out;
  const fs::path ckpt = resolve_checkpoint(checkpoint, out);
  const auto net = load_network(ckpt, cfg);
  const Split s = split == "train" ? Split::kTrain : Split::kTest;
  const auto samples = build_eval_set(cfg.layouts(s), net.config().input_side,
                                      cfg.train.eval_instances, cfg.data.eval_seed);
  EvalReport r = evaluate(net, samples, split, cfg.loss.circular);
  const auto manifest = read_json(ckpt / "manifest.json");
  r.fingerprint = manifest.value("fingerprint", std::string{});
  fs::create_directories(out);
  write_json(out / ("eval_" + split + ".json"), to_json(r));
  const fs::path csv = out / "eval_metrics.csv";
  const bool fresh = !fs::exists(csv);
  std::ofstream os(csv, std::ios::app);
  if (fresh) os << "epoch,split,layout_kind,l_eval_sla,l_eval_da\n";
  os.precision(9);
  for (const auto& row : eval_rows(manifest.value("epoch", 0), r))
    os << row.epoch << ',' << row.split << ',' << row.layout_kind << ',' << row.l_eval_sla
       << ',' << row.l_eval_da << '\n';
  print_report(r);
  return 0;
}

int cmd_render(const Common& c, const std::string& checkpoint, const std::string& layout_name,
               const RenderSpec& spec, int instance) {
  const ExperimentConfig cfg = load(c);
  const fs::path out = c.out;
  const auto net = load_network(resolve_checkpoint(checkpoint, out), cfg);
  const auto spec_layout = find_layout(standard_corpus(), layout_name);
  if (!spec_layout) throw ConfigError("unknown layout '" + layout_name + "'");
  const int side = net.config().input_side;
  EvaluationSample ev = build_eval_sample(spec_layout->build(), side);
  if (instance > 0)
    ev = apply_augmentation(ev, sample_warp_params(side, derive_seed(cfg.data.eval_seed,
                                                                     {std::uint64_t(instance)})));
  const Tensor<float> y = net.forward(ev.context.as_tensor(), nn::Mode::kEval);
  const Rendering r = render(ev.context, y, spec, cfg.loss.circular);
  fs::create_directories(out);
  const fs::path png = out / (layout_name + ".png");
  write_png(png, r.image);
  std::cout << png.string() << ": " << r.arrow_count() << " arrows\n";
  return 0;
}

int cmd_sweep(const Common& c, std::optional<int> epochs) {
  ExperimentConfig cfg = load(c);
  if (epochs) cfg.train.epochs = *epochs;
  const auto entries = cfg.sweep.empty() ? reference_sweep() : cfg.sweep;
  const fs::path out = c.out.empty() ? fs::path("sweep") : fs::path(c.out);
  fs::create_directories(out);
  const auto rows = run_sweep(cfg, entries, out);
  write_sweep_csv(out / "sweep_results.csv", rows);
  std::cout << kSweepHeader << '\n';
  for (const auto& r : rows)
    std::cout << r.exp_id << ',' << r.eta << ',' << r.p_drop << ',' << r.alpha_sla << ','
              << r.sla_train << ',' << r.da_train << ',' << r.sla_test << ',' << r.da_test
              << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional soft lane affordance: data, training, evaluation, rendering"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, render_c, sweep_c;
  auto* gen = app.add_subcommand("gen-data", "Write a training and evaluation dataset");
  add_common(gen, gen_c);

  auto* train = app.add_subcommand("train", "Train a network");
  add_common(train, train_c);
  std::string resume;
  std::optional<int> epochs;
  train->add_option("--resume", resume, "Checkpoint directory, or last/best under --out");
  train->add_option("--epochs", epochs, "Override train.epochs")->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_c);
  std::string eval_ckpt = "last", split = "test";
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint directory, or last/best under --out");
  eval->add_option("--split", split, "Evaluation split")->check(CLI::IsMember({"train", "test"}));

  auto* rend = app.add_subcommand("render", "Render a checkpoint's output as PNG");
  add_common(rend, render_c);
  std::string render_ckpt = "best", layout = "intersection";
  RenderSpec spec;
  int instance = 0;
  rend->add_option("--checkpoint", render_ckpt, "Checkpoint directory, or last/best under --out");
  rend->add_option("--layout", layout, "Corpus layout name");
  rend->add_option("--instance", instance, "Augmented instance (0 = unaugmented)")
      ->check(CLI::NonNegativeNumber);
  rend->add_option("--stride", spec.stride, "Arrow subsampling stride")->check(CLI::PositiveNumber);
  rend->add_option("--threshold", spec.threshold, "SLA display threshold")
      ->check(CLI::Range(0.0, 0.999999));
  rend->add_option("--arrow-scale", spec.arrow_scale, "Arrow length in strides");
  rend->add_option("--colormap", spec.colormap, "Heatmap colormap")
      ->check(CLI::IsMember({"heat", "gray", "viridis"}));
  rend->add_option("--size", spec.image_size, "Output image side in pixels")
      ->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Train every [expN] section and tabulate metrics");
  add_common(sweep, sweep_c, false);
  std::optional<int> sweep_epochs;
  sweep->add_option("--epochs", sweep_epochs, "Override train.epochs")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*gen) return cmd_gen_data(gen_c);
    if (*train) return cmd_train(train_c, resume, epochs);
    if (*eval) return cmd_eval(eval_c, eval_ckpt, split);
    if (*rend) return cmd_render(render_c, render_ckpt, layout, spec, instance);
    if (*sweep) return cmd_sweep(sweep_c, sweep_epochs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
