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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "shrinknas/complexity.hpp"
#include "shrinknas/ess.hpp"
#include "shrinknas/genotype.hpp"
#include "shrinknas/run_config.hpp"

// The four user-facing commands. Every file they write lands inside the
// resolved output directory.

namespace shrinknas {

/// Environment variable that relocates relative output directories.
inline constexpr const char* kOutRootEnv = "SHRINKNAS_OUT_ROOT";

/// `out` itself when absolute or when SHRINKNAS_OUT_ROOT is unset, otherwise
/// $SHRINKNAS_OUT_ROOT/out.
std::filesystem::path resolve_out_dir(const std::string& out);

struct SnapshotInfo {
  std::string label;
  std::size_t alive_entries = 0;
  std::size_t params = 0;
  std::uint64_t flops = 0;
  std::string genotype_file;
};

struct SearchSummary {
  std::filesystem::path run_dir;
  std::vector<SnapshotInfo> snapshots;
  std::vector<ArchSnapshot> archive;
  EssState state;
  std::size_t steps_per_epoch = 0;
};

/// Runs the shrinking search and writes config.txt, entropy.csv,
/// diagnostics.csv, pruning.csv, genotype_<label>.json/.dot, archive.json
/// and checkpoint.bin. `log` receives progress lines when non-null.
SearchSummary cmd_search(const RunConfig& config, std::ostream* log = nullptr);

/// mode is "dynamic" (threshold pruning at epsilon) or "constrained" (two
/// strongest inputs per node). Writes <name>.json and <name>.dot.
Genotype cmd_discretize(const std::string& checkpoint, double epsilon, const std::string& mode,
                        const std::filesystem::path& out_dir, const std::string& name = "genotype");

struct EvalReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
  ComplexityReport complexity;
};

/// Retrains the discrete network of `genotype` from scratch with SGD,
/// momentum, cosine decay to zero and gradient clipping; writes eval.json.
EvalReport cmd_eval(const Genotype& genotype, const RunConfig& config, const std::filesystem::path& out_dir,
                    std::ostream* log = nullptr);

/// Reads a search run directory and writes entropy_series.csv and
/// summary.json. Returns the summary JSON text.
std::string cmd_report(const std::filesystem::path& run_dir, std::size_t max_points = 200);

}  // namespace shrinknas
