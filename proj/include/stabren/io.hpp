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

#include "stabren/certification.hpp"
#include "stabren/sysid.hpp"
#include "stabren/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stabren::io {

using Json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Parses a JSON document; kIo when unreadable, kParse when malformed.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Matrices are written as {"rows": r, "cols": c, "data": [row-major]}.
/// Readers also accept nested row arrays and {"file": "m.csv"} references
/// (comma-separated rows) resolved against `base`.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::filesystem::path& base = {});
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// {"activation": name, "alpha": [...], "beta": [...]} with per-channel
/// sectors; "activations": [names] replaces "activation" when channels
/// differ.
Json nonlinearity_to_json(const Nonlinearity& n);
Nonlinearity nonlinearity_from_json(const Json& j, Eigen::Index expected);

/// Plants: {"type": "lti" | "sector" | "implicit_nn" | "pendulum", ...}.
/// Implicit networks are converted to their sector form by `plant_from_json`.
/// A {"file": path} object is loaded from disk.
Json plant_to_json(const PlantSector& p);
Json lti_plant_to_json(const PlantLti& p);
Json nn_plant_to_json(const ImplicitNnPlant& p);
PlantSector plant_from_json(const Json& j,
                            const std::filesystem::path& base = {});
ImplicitNnPlant nn_plant_from_json(const Json& j,
                                   const std::filesystem::path& base = {});

/// Controllers are stored in transformed form with their original
/// activation; {"form": "original"} files are transformed on load.
Json controller_to_json(const TransformedRenParams& c);
TransformedRenParams controller_from_json(
    const Json& j, const std::filesystem::path& base = {});

Json theta_hat_to_json(const ConvexParams& th, const Vector& lambda_delta,
                       double rho);
ConvexParams theta_hat_from_json(const Json& j, Vector* lambda_delta,
                                 const std::filesystem::path& base = {});

/// Includes hashes of the canonical plant and controller documents.
Json certificate_to_json(const StabilityCertificate& c,
                         const Json& plant_doc, const Json& controller_doc);
StabilityCertificate certificate_from_json(const Json& j);
/// True when the certificate's hashes match the given documents.
bool certificate_matches(const Json& cert, const Json& plant_doc,
                         const Json& controller_doc);

/// Reward section: {"name": "bias_minus_effort" | "bias_minus_quadratic",
/// "bias", "Q", "R", "angle_limit"}.
RewardOracle reward_from_json(const Json& j, int horizon);

/// Training section of a run config; the plant entries are resolved by the
/// caller (they may come from system identification).
TrainConfig train_config_from_json(const Json& j,
                                   const std::filesystem::path& base);

struct SysidSettings {
  Eigen::Index samples = 10000;
  Eigen::Index test_samples = 2000;
  Eigen::Index hidden = 2;
  Vector x_low, x_high, u_low, u_high;
  Matrix c1;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  int restarts = 1;
  double target_mse = 0.0;  // restarts stop once validation MSE <= target
  SysidOptions options;
};
SysidSettings sysid_settings_from_json(const Json& j,
                                       const std::filesystem::path& base);

void write_history_csv(std::ostream& os,
                       const std::vector<IterationRecord>& history);

}  // namespace stabren::io
