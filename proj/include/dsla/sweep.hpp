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

#ifndef DSLA_SWEEP_HPP_
#define DSLA_SWEEP_HPP_

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dsla/config.hpp"
#include "dsla/trainer.hpp"

namespace dsla {

struct SweepRow {
  std::string exp_id;
  double eta = 0.0;
  double p_drop = 0.0;
  double alpha_sla = 0.0;
  double sla_train = 0.0;
  double da_train = 0.0;
  double sla_test = 0.0;
  double da_test = 0.0;
};

inline constexpr const char* kSweepHeader =
    "exp_id,eta,p_drop,alpha_sla,sla_train,da_train,sla_test,da_test";

/// The seven hyperparameter settings of the reference experiment table.
inline std::vector<SweepEntry> reference_sweep() {
  return {{"1", 6e-6, 0.2, 100.0}, {"2", 6e-6, 0.2, 10.0}, {"3", 6e-6, 0.2, 1.0},
          {"4", 9e-6, 0.2, 100.0}, {"5", 3e-6, 0.2, 100.0}, {"6", 6e-6, 0.0, 100.0},
          {"7", 6e-6, 0.4, 100.0}};
}

inline ExperimentConfig apply_entry(ExperimentConfig c, const SweepEntry& e) {
  c.train.eta = e.eta;
  c.train.dropout_p = e.dropout_p;
  c.loss.alpha_sla = e.alpha_sla;
  c.sweep.clear();
  return c;
}

/// Trains every experiment from scratch and records the final metrics on the
/// train-distribution and test-distribution evaluation sets. Each experiment
/// writes its artifacts to <out>/exp<id> when `out` is set.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& base,
                                       const std::vector<SweepEntry>& experiments,
                                       std::optional<std::filesystem::path> out = std::nullopt) {
  if (experiments.empty()) throw ContractError("run_sweep: no experiments");
  const auto eval_sets = base.eval_sets();
  const auto corpus = base.layouts(Split::kTrain);
  std::vector<SweepRow> rows;
  for (const auto& e : experiments) {
    const ExperimentConfig c = apply_entry(base, e);
    std::optional<std::filesystem::path> dir;
    if (out) dir = *out / ("exp" + e.id);
    TrainConfig tc = c.train;
    if (tc.eval_every == 0) tc.eval_every = std::max(tc.epochs, 1);
    Trainer t(tc, c.network, c.loss, corpus, eval_sets, dir);
    const TrainResult r = t.run();
    rows.push_back({e.id, e.eta, e.dropout_p, e.alpha_sla, r.final.at(0).l_eval_sla,
                    r.final.at(0).l_eval_da, r.final.at(1).l_eval_sla,
                    r.final.at(1).l_eval_da});
  }
  return rows;
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<SweepRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.precision(9);
  os << kSweepHeader << '\n';
  for (const auto& r : rows)
    os << r.exp_id << ',' << r.eta << ',' << r.p_drop << ',' << r.alpha_sla << ','
       << r.sla_train << ',' << r.da_train << ',' << r.sla_test << ',' << r.da_test
       << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace dsla

#endif  // DSLA_SWEEP_HPP_
