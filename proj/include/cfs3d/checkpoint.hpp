/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfs3d/diffcore/adam.hpp"
#include "cfs3d/model.hpp"

namespace cfs3d {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint16_t version = kCheckpointVersion;
  ModelConfig config;
  std::vector<diffcore::NamedTensor> params;
  std::optional<diffcore::AdamState> optimizer;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  /// Free-form key=value metadata stored alongside the config (e.g. variant).
  std::map<std::string, std::string> meta;
};

/// Binary layout, all integers little-endian:
///   "CFS3DCKP" | u16 version | u32 len | config text (key=value lines)
///   | u32 record count | records
/// Each record: u32 name len | name | u32 rank | u64 dims[rank] | f64 values.
/// Adam moments are stored as records "adam.m.<param>" / "adam.v.<param>".
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Writes to a temporary file and renames it over path, so a crash never
/// leaves a partial checkpoint in place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cfs3d
