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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "shrinknas/data.hpp"
#include "shrinknas/ess.hpp"
#include "shrinknas/supernet.hpp"

namespace shrinknas {

struct EvalConfig {
  std::size_t epochs = 30;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 3e-4;
  double clip = 5.0;
  std::size_t batch_size = 32;
};

/// Everything a run needs. Defaults are the tiny desk-scale setup: L=4, N=5,
/// O2, 8x8 synthetic 4-class data, 2 rounds of 8 epochs.
struct RunConfig {
  std::uint64_t seed = 0;
  DataSpec data;
  std::size_t cells = 4;
  std::size_t nodes = 5;
  std::size_t channels = 8;
  std::string space = "O2";
  std::size_t batch_size = 32;
  EssConfig ess = tiny_ess_defaults();
  EvalConfig eval;
  std::string out = "runs/default";

  static EssConfig tiny_ess_defaults();

  SupernetConfig supernet() const;

  /// Applies one key=value setting; unknown keys and bad values throw ConfigError.
  /// Setting t_search also resets t_warm to t_search / 2.
  void set(std::string_view key, std::string_view value);
  /// Applies every non-comment line of a key=value text.
  void apply_text(std::string_view text);
  /// Canonical key=value form; parsing it back gives an identical config.
  std::string to_text() const;

  bool operator==(const RunConfig& other) const { return to_text() == other.to_text(); }
};

RunConfig load_run_config(const std::string& path, RunConfig base = {});

}  // namespace shrinknas
