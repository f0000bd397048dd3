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

#include "shrinknas/ess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shrinknas/entropy.hpp"
#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"
#include "shrinknas/tape.hpp"

namespace shrinknas {

void EssConfig::validate(std::size_t ops) const {
  if (!(c1 > 1.0)) throw ConfigError("c1 must be > 1");
  if (!(c2 > 0.0 && c2 < 1.0)) throw ConfigError("c2 must lie in (0, 1)");
  if (!(lambda_init > 0.0) || !std::isfinite(lambda_init)) throw ConfigError("lambda_init must be positive");
  if (t_warm == 0 || t_warm > t_search) throw ConfigError("need 0 < T_warm <= T_search");
  if (r_init == 0) throw ConfigError("R_init must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0 / static_cast<double>(ops))) {
    throw ConfigError("epsilon must lie in (0, 1/|O|) = (0, " + std::to_string(1.0 / static_cast<double>(ops)) +
                      "), got " + std::to_string(epsilon));
  }
  if (delta_e && !(*delta_e >= 0.0)) throw ConfigError("delta_e must be non-negative");
  if (ce_loss_weight < 0.0) throw ConfigError("ce_loss_weight must be non-negative");
  if (h_min < 0.0) throw ConfigError("h_min must be non-negative");
}

double adjust_lambda(EssState& state, std::size_t k, double e_prev, double e_curr, double delta_e, double c1,
                     double c2) {
  if (k < 1 || k > state.lambda.size()) throw ConfigError("adjust_lambda: cell index out of range");
  double& lambda = state.lambda[k - 1];
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw NumericalError("adjust_lambda: lambda must be finite and non-negative");
  }
  lambda *= (e_prev - e_curr < delta_e) ? c1 : c2;
  if (state.prev_entropy.size() < state.lambda.size()) state.prev_entropy.resize(state.lambda.size(), 0.0);
  state.prev_entropy[k - 1] = e_curr;
  return lambda;
}

EssController::EssController(SuperNetwork& net, EssConfig config) : net_(&net), config_(std::move(config)) {
  config_.validate(net.space().size());
  theta_adam_ = Adam(net.theta(), config_.theta_opt);
  for (Parameter* p : net.arch().parameters()) {
    AdamState s;
    s.reset(p->tensor.numel());
    alpha_states_.push_back(std::move(s));
  }
  state_.lambda.assign(net.config().cells, config_.lambda_init);
  state_.prev_entropy.assign(net.config().cells, 0.0);
}

void EssController::set_tracking(bool theta, bool alpha) {
  for (Parameter* p : net_->theta()) {
    p->tensor.set_requires_grad(theta);
    p->tensor.clear_grad();
  }
  for (Parameter* p : net_->arch().parameters()) {
    p->tensor.set_requires_grad(alpha);
    p->tensor.clear_grad();
  }
}

void EssController::begin_search(std::size_t steps_per_epoch) {
  state_.initial_entropy = cell_entropies(net_->arch());
  double total = 0.0;
  for (double h : state_.initial_entropy) total += h;
  state_.delta_e = config_.delta_e ? *config_.delta_e
                                   : expected_entropy_reduction(total, net_->config().cells, steps_per_epoch,
                                                                config_.t_search, config_.r_init);
  state_.lambda.assign(net_->config().cells, config_.lambda_init);
  state_.prev_entropy = state_.initial_entropy;
  state_.round = state_.epoch = state_.step = 0;
  state_.archive.clear();
}

void EssController::begin_round() {
  ++state_.round;
  state_.phase = Phase::Warmup;
  reinit_model_params();
}

void EssController::begin_epoch() { ++state_.epoch; }

void EssController::begin_arch_opt() {
  state_.phase = Phase::ArchOpt;
  state_.prev_entropy = cell_entropies(net_->arch());
}

const ArchSnapshot& EssController::end_round() {
  state_.archive.push_back(net_->arch().snapshot(std::to_string(state_.round * config_.t_search) + "E"));
  return state_.archive.back();
}

void EssController::reinit_model_params() {
  net_->reinit_theta();
  theta_adam_.reset();
}

bool EssController::entropy_floor_reached() const {
  if (config_.h_min <= 0.0) return false;
  for (double h : cell_entropies(net_->arch()))
    if (h > config_.h_min) return false;
  return true;
}

void EssController::alpha_adam_step() {
  auto params = net_->arch().parameters();
  ArchParams& arch = net_->arch();
  std::size_t s = 0;
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    for (std::size_t j = 3; j < arch.nodes(); ++j, ++s) {
      Tensor& t = params[s]->tensor;
      if (!t.has_grad()) continue;
      adam_step(t.data(), t.grad(), alpha_states_[s], config_.alpha_opt, arch.alive(k, j));
    }
  }
}

StepResult EssController::warmup_step(const Tensor& images, std::span<const int> labels) {
  if (state_.phase != Phase::Warmup) throw ConfigError("warmup_step called outside the warm-up phase");
  set_tracking(true, config_.warmup_updates_alpha);
  StepResult r;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor ce = ops::cross_entropy(net_->forward(images), labels);
    Tensor loss = ops::scale(ce, config_.ce_loss_weight);
    r.loss_ce = ce.item();
    r.loss_all = loss.item();
    tape.backward(loss);
  }
  theta_adam_.step();
  if (config_.warmup_updates_alpha) alpha_adam_step();
  ++state_.step;
  r.entropy = cell_entropies(net_->arch());
  return r;
}

StepResult EssController::arch_opt_step(const Tensor& images, std::span<const int> labels) {
  if (state_.phase != Phase::ArchOpt) throw ConfigError("arch_opt_step called outside the arch-opt phase");
  ArchParams& arch = net_->arch();
  const std::size_t cells = arch.cells();
  set_tracking(config_.archopt_updates_theta, true);

  StepResult r;
  const std::vector<double> lambda = state_.lambda;
  const std::vector<double> h_before = cell_entropies(arch);
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor ce = ops::cross_entropy(net_->forward(images), labels);
    Tensor loss = ops::scale(ce, config_.ce_loss_weight);
    for (std::size_t k = 1; k <= cells; ++k) {
      loss = ops::add(loss, ops::scale(cell_entropy_tensor(arch, k), lambda[k - 1]));
    }
    r.loss_ce = ce.item();
    r.loss_all = loss.item();
    tape.backward(loss);
  }

  // Split each cell's alpha gradient into its CE and entropy parts.
  diagnostics_.assign(cells, {});
  auto params = arch.parameters();
  std::size_t s = 0;
  for (std::size_t k = 1; k <= cells; ++k) {
    const auto gh_blocks = entropy_grad_analytic(arch, k);
    std::vector<double> gh, gce;
    double probe = 0.0;
    for (std::size_t j = 3; j < arch.nodes(); ++j, ++s) {
      const Tensor& t = params[s]->tensor;
      const auto g = t.grad();
      const auto mask = arch.alive(k, j);
      std::vector<double> stepped(t.data().begin(), t.data().end());
      if (!g.empty()) {
        for (std::size_t e = 0; e < stepped.size(); ++e) stepped[e] -= config_.alpha_opt.lr * g[e];
      }
      probe += masked_softmax_entropy(stepped, mask);
      for (std::size_t e = 0; e < mask.size(); ++e) {
        if (!mask[e]) continue;
        const double h = gh_blocks[j - 3][e];
        gh.push_back(h);
        gce.push_back((g.empty() ? 0.0 : g[e]) - lambda[k - 1] * h);
      }
    }
    StepDiagnostics& d = diagnostics_[k - 1];
    d.round = state_.round;
    d.epoch = state_.epoch;
    d.step = state_.step + 1;
    d.cell = k;
    d.lambda = lambda[k - 1];
    d.grad_ce_norm = l2_norm(gce);
    d.grad_h_norm = l2_norm(gh);
    const double denom = d.grad_ce_norm * d.grad_h_norm;
    d.cos_theta = denom > 0.0 ? dot(gce, gh) / denom : 0.0;
    d.h_before = h_before[k - 1];
    d.h_gradient_probe = probe;
  }

  alpha_adam_step();
  if (config_.archopt_updates_theta) theta_adam_.step();
  ++state_.step;

  const std::vector<double> h_step = cell_entropies(arch);
  prune_log_ = dynamic_discretize(arch, config_.epsilon);
  r.entropy = cell_entropies(arch);
  for (const PruneEvent& e : prune_log_.pruned) ++diagnostics_[e.cell - 1].pruned;
  for (std::size_t k = 1; k <= cells; ++k) {
    diagnostics_[k - 1].h_after_step = h_step[k - 1];
    diagnostics_[k - 1].h_after = r.entropy[k - 1];
    const double next = adjust_lambda(state_, k, state_.prev_entropy[k - 1], r.entropy[k - 1], state_.delta_e,
                                      config_.c1, config_.c2);
    if (!std::isfinite(next)) throw NumericalError("lambda of cell " + std::to_string(k) + " is not finite");
  }
  return r;
}

SearchResult run_search(SuperNetwork& net, BatchLoader& loader, const EssConfig& config,
                        const SearchObserver& observer) {
  EssController ctl(net, config);
  return run_search(ctl, loader, observer);
}

SearchResult run_search(EssController& ctl, BatchLoader& loader, const SearchObserver& observer) {
  SuperNetwork& net = ctl.net();
  const EssConfig& cfg = ctl.config();
  ctl.begin_search(loader.batches_per_epoch());
  const std::size_t cells = net.config().cells;
  auto emit = [&](const StepResult& r) {
    if (!observer.on_row) return;
    const EssState& st = ctl.state();
    for (std::size_t k = 1; k <= cells; ++k) {
      observer.on_row({st.round, st.epoch, st.step, k, r.entropy[k - 1], st.lambda[k - 1], r.loss_ce, r.loss_all});
    }
  };

  Tensor images;
  std::vector<int> labels;
  for (std::size_t round = 1; round <= cfg.r_init; ++round) {
    ctl.begin_round();
    for (std::size_t e = 0; e < cfg.t_search; ++e) {
      if (e == cfg.t_warm) ctl.begin_arch_opt();
      ctl.begin_epoch();
      const bool skip_epoch = ctl.state().phase == Phase::ArchOpt && ctl.entropy_floor_reached();
      loader.start_epoch();
      while (!skip_epoch && loader.next(images, labels)) {
        if (ctl.state().phase == Phase::Warmup) {
          emit(ctl.warmup_step(images, labels));
          continue;
        }
        emit(ctl.arch_opt_step(images, labels));
        if (observer.on_diagnostics)
          for (const StepDiagnostics& d : ctl.last_diagnostics()) observer.on_diagnostics(d);
        if (observer.on_prune && !ctl.last_prune_log().pruned.empty()) observer.on_prune(ctl.last_prune_log());
        if (ctl.entropy_floor_reached()) break;
      }
    }
    const ArchSnapshot& snap = ctl.end_round();
    if (observer.on_snapshot) observer.on_snapshot(snap);
  }
  return {ctl.state().archive, ctl.state()};
}

}  // namespace shrinknas
