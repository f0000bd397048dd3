// Copyright 2026 The shrinknas Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shrinknas/ess.hpp"
#include "shrinknas/supernet.hpp"

// Versioned binary checkpoint. Layout is described in docs/checkpoint.md.

namespace shrinknas {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  std::vector<double> f64;        // kind 0
  std::vector<std::uint8_t> u8;   // kind 1
  bool is_u8 = false;
};

struct CheckpointFile {
  std::string meta;  // JSON text
  std::vector<CheckpointRecord> records;

  const CheckpointRecord& get(const std::string& name) const;
  bool has(const std::string& name) const;
  void add(std::string name, std::vector<double> values);
  void add(std::string name, std::vector<std::uint8_t> values);

  void write(const std::string& path) const;
  static CheckpointFile read(const std::string& path);
};

/// alpha, alive masks, theta, both optimizer states, lambda and entropies.
void save_checkpoint(const std::string& path, SuperNetwork& net, EssController& controller,
                     const std::string& run_config_text = {});

struct LoadedCheckpoint {
  SupernetConfig config;
  std::string run_config_text;
  EssState state;
};

/// Rebuilds the super-network described by the checkpoint and restores alpha,
/// the alive masks and theta. Controller scalars land in `info`.
SuperNetwork load_checkpoint(const std::string& path, LoadedCheckpoint* info = nullptr);

}  // namespace shrinknas
