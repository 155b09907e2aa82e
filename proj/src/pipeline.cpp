/*
 * Copyright 2026 The stabren Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "stabren/pipeline.hpp"

namespace stabren {

namespace fs = std::filesystem;

SysidRun run_sysid(const io::SysidSettings& s, const PlantSector* truth,
                   const SysidDataset* data, const SysidCallback& progress) {
  SysidRun run;
  if (data != nullptr) {
    data->validate();
    require(s.test_samples > 0 && s.test_samples < data->size(),
            ErrorKind::kInvalidArgument,
            "sysid: test_samples must be in (0, dataset size)");
    const auto n_train = data->size() - s.test_samples;
    run.train = data->slice(0, n_train);
    run.test = data->slice(n_train, s.test_samples);
  } else {
    require(truth != nullptr, ErrorKind::kInvalidArgument,
            "sysid: no dataset and no true plant");
    run.train = make_transition_dataset(*truth, s.x_low, s.x_high, s.u_low,
                                        s.u_high, s.samples, s.seed);
    // Offset seed keeps the held-out draw independent of the training draw.
    run.test = make_transition_dataset(*truth, s.x_low, s.x_high, s.u_low,
                                       s.u_high, s.test_samples,
                                       s.seed + 0x5bd1e995ULL);
  }
  const auto n = run.train.x.rows(), m = run.train.u.rows();
  const Matrix c1 = s.c1.size() > 0 ? s.c1 : Matrix::Identity(n, n);
  const Activation act{ActivationKind::kTanh, 0.0};
  auto make_init = [&](std::uint64_t seed) {
    return random_nn_plant(n, m, s.hidden, c1, act, s.init_scale, seed);
  };
  run.result = sysid_train_restarts(run.train, run.test, make_init, s.options,
                                    s.restarts, s.target_mse, s.seed,
                                    progress);
  return run;
}

Experiment load_experiment(const fs::path& path) {
  Experiment e;
  e.doc = io::read_json(path);
  e.base = path.parent_path();
  const auto& d = e.doc;
  require(d.is_object(), ErrorKind::kParse,
          path.string() + ": expected a JSON object");
  e.train = io::train_config_from_json(
      d.contains("train") ? d.at("train") : io::Json::object(), e.base);
  e.reward = d.contains("reward") ? d.at("reward") : io::Json::object();
  if (d.contains("true_plant")) {
    e.true_plant = io::plant_from_json(d.at("true_plant"), e.base);
  }
  if (d.contains("sysid")) {
    e.sysid = io::sysid_settings_from_json(d.at("sysid"), e.base);
    require(e.true_plant.has_value(), ErrorKind::kParse,
            path.string() + ": a sysid section needs true_plant");
  } else {
    require(d.contains("plant"), ErrorKind::kParse,
            path.string() + ": missing plant");
    e.train.plant = io::plant_from_json(d.at("plant"), e.base);
  }
  return e;
}

RewardOracle prepare_experiment(Experiment& e,
                                std::optional<SysidRun>* identified,
                                const SysidCallback& progress) {
  if (e.sysid) {
    SysidRun run = run_sysid(*e.sysid, &*e.true_plant, nullptr, progress);
    e.train.plant = to_sector_plant(run.result.nn);
    if (identified != nullptr) *identified = std::move(run);
  }
  if (e.true_plant) e.train.rollout_plant = *e.true_plant;
  return io::reward_from_json(e.reward, e.train.horizon);
}

}  // namespace stabren
