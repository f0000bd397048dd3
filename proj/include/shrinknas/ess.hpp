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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shrinknas/data.hpp"
#include "shrinknas/discretizer.hpp"
#include "shrinknas/optim.hpp"
#include "shrinknas/supernet.hpp"

namespace shrinknas {

struct EssConfig {
  double c1 = 1.05;
  double c2 = 0.95;
  double lambda_init = 1e-4;
  std::size_t t_search = 16;  // epochs per round
  std::size_t t_warm = 8;     // warm-up epochs per round
  std::size_t r_init = 5;     // rounds
  AdamHyper theta_opt{.lr = 1e-3, .weight_decay = 1e-4};
  AdamHyper alpha_opt{.lr = 1e-2, .weight_decay = 0.0};
  double epsilon = 0.02;
  /// Overrides the computed per-step entropy budget.
  std::optional<double> delta_e;
  bool warmup_updates_alpha = true;
  bool archopt_updates_theta = false;
  /// Multiplies the CE term of every loss. Tests set 0 to isolate the entropy term.
  double ce_loss_weight = 1.0;
  /// Arch-opt of a round ends early once every cell entropy is <= h_min. 0 disables.
  double h_min = 0.0;

  /// Throws ConfigError on out-of-range values. `ops` is |O|.
  void validate(std::size_t ops) const;
};

enum class Phase { Warmup, ArchOpt };

struct EssState {
  std::vector<double> lambda;        // index k-1
  std::vector<double> prev_entropy;  // index k-1
  Phase phase = Phase::Warmup;
  std::size_t round = 0;  // 1-based once started
  std::size_t epoch = 0;  // cumulative, 1-based once started
  std::size_t step = 0;   // cumulative optimizer steps
  double delta_e = 0.0;
  std::vector<double> initial_entropy;
  std::vector<ArchSnapshot> archive;
};

struct StepResult {
  double loss_ce = 0.0;
  double loss_all = 0.0;
  std::vector<double> entropy;  // per cell after the step (and pruning)
};

/// Per-cell record of one arch-opt step, before and after the alpha update.
struct StepDiagnostics {
  std::size_t round = 0, epoch = 0, step = 0, cell = 0;
  double lambda = 0.0;  // lambda used for this step
  double grad_ce_norm = 0.0;
  double grad_h_norm = 0.0;
  double cos_theta = 0.0;
  double h_before = 0.0;
  double h_after_step = 0.0;  // after the alpha update, before pruning
  /// Entropy after a plain gradient step alpha - eta_alpha * grad instead of
  /// the Adam update; the quantity the first-order analysis speaks about.
  double h_gradient_probe = 0.0;
  double h_after = 0.0;       // after pruning
  std::size_t pruned = 0;
};

struct EntropyRow {
  std::size_t round = 0, epoch = 0, step = 0, cell = 0;
  double entropy = 0.0, lambda = 0.0, loss_ce = 0.0, loss_all = 0.0;
};

/// `lambda[k-1]` becomes c1 * lambda if e_prev - e_curr < delta_e, otherwise
/// c2 * lambda; prev_entropy[k-1] becomes e_curr. Returns the new lambda.
double adjust_lambda(EssState& state, std::size_t k, double e_prev, double e_curr, double delta_e, double c1,
                     double c2);

/// Step-level driver of the shrinking procedure on one super-network.
class EssController {
 public:
  EssController(SuperNetwork& net, EssConfig config);

  SuperNetwork& net() { return *net_; }
  /// Records initial entropies, the entropy budget and lambda_init.
  void begin_search(std::size_t steps_per_epoch);
  /// Next round: reinitializes theta and enters warm-up.
  void begin_round();
  void begin_epoch();
  /// Leaves warm-up; prev_entropy restarts from the current entropies.
  void begin_arch_opt();
  /// Snapshot of alpha and the alive mask into the archive.
  const ArchSnapshot& end_round();

  /// CE only; Adam on theta and (unless disabled) on alpha.
  StepResult warmup_step(const Tensor& images, std::span<const int> labels);
  /// CE + sum_k lambda_k H_k, Adam on alpha, threshold pruning, lambda feedback.
  StepResult arch_opt_step(const Tensor& images, std::span<const int> labels);

  /// Redraws theta and clears theta's optimizer state.
  void reinit_model_params();

  bool entropy_floor_reached() const;

  EssState& state() { return state_; }
  const EssState& state() const { return state_; }
  const EssConfig& config() const { return config_; }
  Adam& theta_optimizer() { return theta_adam_; }
  std::vector<AdamState>& alpha_states() { return alpha_states_; }
  const std::vector<StepDiagnostics>& last_diagnostics() const { return diagnostics_; }
  const PruneLog& last_prune_log() const { return prune_log_; }

 private:
  void set_tracking(bool theta, bool alpha);
  void alpha_adam_step();

  SuperNetwork* net_;
  EssConfig config_;
  EssState state_;
  Adam theta_adam_;
  std::vector<AdamState> alpha_states_;
  std::vector<StepDiagnostics> diagnostics_;
  PruneLog prune_log_;
};

struct SearchObserver {
  std::function<void(const EntropyRow&)> on_row;
  std::function<void(const StepDiagnostics&)> on_diagnostics;
  std::function<void(const PruneLog&)> on_prune;
  std::function<void(const ArchSnapshot&)> on_snapshot;
};

struct SearchResult {
  std::vector<ArchSnapshot> archive;
  EssState state;
};

/// Full schedule: r_init rounds of t_warm warm-up epochs followed by
/// t_search - t_warm arch-opt epochs; one snapshot per round labelled with
/// the cumulative epoch count ("16E", "32E", ...).
SearchResult run_search(SuperNetwork& net, BatchLoader& loader, const EssConfig& config,
                        const SearchObserver& observer = {});
/// Same schedule on an existing controller (whose state is left in place).
SearchResult run_search(EssController& controller, BatchLoader& loader, const SearchObserver& observer = {});

}  // namespace shrinknas
