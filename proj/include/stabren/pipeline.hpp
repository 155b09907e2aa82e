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

#pragma once

// Experiment files: one JSON document holding the plant entries and the
// "train", "reward" and optional "sysid" sections.

#include "stabren/io.hpp"

#include <filesystem>
#include <optional>

namespace stabren {

struct SysidRun {
  SysidDataset train;
  SysidDataset test;
  SysidResult result;
};

/// Fits an implicit network. Transitions come from `data` when given (the
/// last `test_samples` rows are held out), otherwise they are drawn from
/// `truth`.
SysidRun run_sysid(const io::SysidSettings& s, const PlantSector* truth,
                   const SysidDataset* data,
                   const SysidCallback& progress = {});

struct Experiment {
  io::Json doc;
  std::filesystem::path base;
  TrainConfig train;
  io::Json reward;
  std::optional<PlantSector> true_plant;
  std::optional<io::SysidSettings> sysid;
};

Experiment load_experiment(const std::filesystem::path& path);

/// Resolves the model plant (identifying it first when a "sysid" section is
/// present) and returns the oracle. `identified` receives the network.
RewardOracle prepare_experiment(Experiment& e,
                                std::optional<SysidRun>* identified = nullptr,
                                const SysidCallback& progress = {});

}  // namespace stabren
