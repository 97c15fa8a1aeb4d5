// Copyright 2026 The EventGraph Authors.
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

// Parameter checkpoints:
//   "EVG1" | u32 little-endian header length | JSON header | f32 little-endian data
// The header records the model configuration and its hash, parameter names
// and shapes in data order, and free-form metadata (hyperparameters, step).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evgraph/autodiff.hpp"
#include "json.hpp"

namespace evgraph {

inline constexpr char kCheckpointMagic[4] = {'E', 'V', 'G', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::ordered_json config;
  nlohmann::ordered_json meta;
  ParamStore<float> params;
};

// FNV-1a over the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::ordered_json& config);

void save_checkpoint(const std::filesystem::path& path, const nlohmann::ordered_json& config,
                     const nlohmann::ordered_json& meta, const ParamStore<float>& params);

// Throws CheckpointError on a bad magic, version, hash or length. Nothing is
// returned unless the whole file was consistent.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evgraph
