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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "shrinknas/data.hpp"
#include "shrinknas/entropy.hpp"
#include "shrinknas/error.hpp"
#include "shrinknas/ess.hpp"
#include "shrinknas/ops.hpp"
#include "shrinknas/tape.hpp"
#include "test_util.hpp"

namespace shrinknas {
namespace {

SupernetConfig small_net(std::uint64_t seed = 1) {
  SupernetConfig c;
  c.cells = 3;
  c.nodes = 4;
  c.space = OperatorSpace::preset(2);
  c.channels = 4;
  c.classes = 4;
  c.seed = seed;
  return c;
}

EssConfig quick_config() {
  EssConfig e;
  e.t_search = 4;
  e.t_warm = 2;
  e.r_init = 2;
  return e;
}

struct Batch {
  Tensor images;
  std::vector<int> labels;
};

Batch blob_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const Dataset d = make_synthetic_blobs(n, 4, 3, 8, rng);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return {d.batch(idx), d.batch_labels(idx)};
}

void randomize_alpha(ArchParams& arch, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : arch.parameters()) {
    for (double& v : p->tensor.data()) v = uniform(rng, -1.0, 1.0);
  }
}

std::vector<std::vector<double>> values(const std::vector<Parameter*>& ps) {
  std::vector<std::vector<double>> out;
  for (const Parameter* p : ps) out.emplace_back(p->tensor.data().begin(), p->tensor.data().end());
  return out;
}

TEST(EssConfig, ValidatesRanges) {
  EssConfig e;
  EXPECT_NO_THROW(e.validate(3));
  e.epsilon = 0.34;
  EXPECT_THROW(e.validate(3), ConfigError);
  e = {};
  e.c1 = 1.0;
  EXPECT_THROW(e.validate(2), ConfigError);
  e = {};
  e.c2 = 1.0;
  EXPECT_THROW(e.validate(2), ConfigError);
  e = {};
  e.t_warm = 17;
  EXPECT_THROW(e.validate(2), ConfigError);
  e = {};
  EXPECT_EQ(e.t_warm, e.t_search / 2);
  EXPECT_DOUBLE_EQ(e.c1, 1.05);
  EXPECT_DOUBLE_EQ(e.c2, 0.95);
  EXPECT_DOUBLE_EQ(e.lambda_init, 1e-4);
  EXPECT_DOUBLE_EQ(e.epsilon, 0.02);
  EXPECT_EQ(e.r_init, 5u);
}

TEST(AdjustLambda, Examples) {
  EssState s;
  s.lambda = {2e-4};
  s.prev_entropy = {1.0};
  EXPECT_NEAR(adjust_lambda(s, 1, 1.0, 1.0 - 5e-4, 8.09e-4, 1.05, 0.95), 2.1e-4, 1e-18);
  EXPECT_EQ(s.prev_entropy[0], 1.0 - 5e-4);

  s.lambda = {1.0};
  EXPECT_DOUBLE_EQ(adjust_lambda(s, 1, 1.0, 0.75, 0.25, 1.05, 0.95), 0.95);  // tie shrinks
  EXPECT_DOUBLE_EQ(adjust_lambda(s, 1, 1.0, 0.5, 0.25, 1.05, 0.95), 0.95 * 0.95);
  EXPECT_THROW(adjust_lambda(s, 2, 1.0, 0.5, 0.25, 1.05, 0.95), ConfigError);
}

// Closed loop on a synthetic plant whose per-step reduction is lambda * g_t
// with g_t drawn from [0.8 g, 1.2 g]: lambda settles between the two
// crossing points lambda* / 1.2 and lambda* / 0.8 up to one factor of c1 or c2.
TEST(AdjustLambda, ClosedLoopStaysInBand) {
  Rng rng(1);
  const double g = 5.0, de = 1e-3, target = de / g;
  EssState s;
  s.lambda = {1e-4};
  s.prev_entropy = {100.0};
  double e = 100.0;
  for (int t = 0; t < 3000; ++t) {
    const double reduction = s.lambda[0] * g * uniform(rng, 0.8, 1.2);
    adjust_lambda(s, 1, e, e - reduction, de, 1.05, 0.95);
    e -= reduction;
    if (t >= 300) {
      EXPECT_GE(s.lambda[0], target / 1.2 * 0.95 * (1 - 1e-12)) << t;
      EXPECT_LE(s.lambda[0], target / 0.8 * 1.05 * (1 + 1e-12)) << t;
    }
  }
}

TEST(EssController, PhaseGuards) {
  SuperNetwork net = init_supernet(small_net());
  EssController ctl(net, quick_config());
  ctl.begin_search(10);
  ctl.begin_round();
  const Batch b = blob_batch(8, 1);
  EXPECT_THROW(ctl.arch_opt_step(b.images, b.labels), ConfigError);
  ctl.begin_arch_opt();
  EXPECT_THROW(ctl.warmup_step(b.images, b.labels), ConfigError);
}

TEST(EssController, WarmupLeavesLambdaAndTrainsAlpha) {
  SuperNetwork net = init_supernet(small_net());
  EssController ctl(net, quick_config());
  ctl.begin_search(10);
  ctl.begin_round();
  const Batch b = blob_batch(16, 2);
  const auto alpha_before = values(net.arch().parameters());
  ctl.warmup_step(b.images, b.labels);
  double grad_norm = 0.0;
  for (Parameter* p : net.arch().parameters()) {
    for (double g : p->tensor.grad()) grad_norm += g * g;
  }
  EXPECT_GT(grad_norm, 0.0);
  EXPECT_NE(values(net.arch().parameters()), alpha_before);
  EXPECT_EQ(ctl.state().lambda, std::vector<double>(3, 1e-4));
}

TEST(EssController, WarmupCanFreezeAlpha) {
  SuperNetwork net = init_supernet(small_net());
  EssConfig cfg = quick_config();
  cfg.warmup_updates_alpha = false;
  EssController ctl(net, cfg);
  ctl.begin_search(10);
  ctl.begin_round();
  const Batch b = blob_batch(16, 2);
  const auto alpha_before = values(net.arch().parameters());
  ctl.warmup_step(b.images, b.labels);
  EXPECT_EQ(values(net.arch().parameters()), alpha_before);
}

TEST(EssController, WarmupReducesTrainingLoss) {
  std::vector<double> change;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SuperNetwork net = init_supernet(small_net(seed));
    EssController ctl(net, quick_config());
    ctl.begin_search(10);
    ctl.begin_round();
    const Batch b = blob_batch(10, 100 + seed);
    const double first = ctl.warmup_step(b.images, b.labels).loss_ce;
    double last = first;
    for (int i = 1; i < 50; ++i) last = ctl.warmup_step(b.images, b.labels).loss_ce;
    change.push_back(last - first);
  }
  std::nth_element(change.begin(), change.begin() + 2, change.end());
  EXPECT_LT(change[2], 0.0);
}

TEST(EssController, ArchOptFreezesTheta) {
  SuperNetwork net = init_supernet(small_net());
  EssController ctl(net, quick_config());
  ctl.begin_search(10);
  ctl.begin_round();
  const Batch b = blob_batch(16, 3);
  ctl.warmup_step(b.images, b.labels);
  ctl.begin_arch_opt();
  const auto theta_before = values(net.theta());
  const auto alpha_before = values(net.arch().parameters());
  ctl.arch_opt_step(b.images, b.labels);
  EXPECT_EQ(values(net.theta()), theta_before);
  EXPECT_NE(values(net.arch().parameters()), alpha_before);
}

TEST(EssController, ZeroLambdaIsPlainCrossEntropyStep) {
  SuperNetwork net = init_supernet(small_net());
  randomize_alpha(net.arch(), 4);
  const Batch b = blob_batch(16, 4);

  // Reference: CE gradient on alpha, one masked Adam step per node.
  SuperNetwork ref = init_supernet(small_net());
  ref.arch().restore(net.arch().snapshot());
  for (Parameter* p : ref.theta()) p->tensor.set_requires_grad(false);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(ops::cross_entropy(ref.forward(b.images), b.labels));
  }
  const AdamHyper hyper = quick_config().alpha_opt;
  for (std::size_t k = 1; k <= 3; ++k) {
    Tensor& t = ref.arch().alpha(k, 3).tensor;
    AdamState st;
    st.reset(t.numel());
    adam_step(t.data(), t.grad(), st, hyper, ref.arch().alive(k, 3));
  }

  EssController ctl(net, quick_config());
  ctl.begin_search(10);
  ctl.begin_round();
  net.reinit_theta();
  for (Parameter* p : net.theta()) {
    // same theta as the reference network
    for (Parameter* q : ref.theta()) {
      if (q->id == p->id) std::copy(q->tensor.data().begin(), q->tensor.data().end(), p->tensor.data().begin());
    }
  }
  ctl.begin_arch_opt();
  std::fill(ctl.state().lambda.begin(), ctl.state().lambda.end(), 0.0);
  ctl.arch_opt_step(b.images, b.labels);
  ASSERT_TRUE(ctl.last_prune_log().pruned.empty());
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto got = net.arch().alpha(k, 3).tensor.data();
    const auto want = ref.arch().alpha(k, 3).tensor.data();
    for (std::size_t e = 0; e < got.size(); ++e) EXPECT_NEAR(got[e], want[e], 1e-14);
  }
  EXPECT_EQ(ctl.state().lambda, std::vector<double>(3, 0.0));
}

TEST(EssController, EntropyOnlyLossLowersEntropyEveryStep) {
  SuperNetwork net = init_supernet(small_net());
  randomize_alpha(net.arch(), 5);
  EssConfig cfg = quick_config();
  cfg.ce_loss_weight = 0.0;
  EssController ctl(net, cfg);
  ctl.begin_search(10);
  ctl.begin_round();
  ctl.begin_arch_opt();
  const Batch b = blob_batch(8, 5);
  for (int step = 0; step < 60; ++step) {
    ctl.arch_opt_step(b.images, b.labels);
    for (const StepDiagnostics& d : ctl.last_diagnostics()) {
      if (d.h_before <= 0.0) continue;
      EXPECT_LT(d.h_after_step, d.h_before) << "step " << step << " cell " << d.cell;
      EXPECT_LE(d.h_after, d.h_after_step + 1e-12);
    }
  }
}

TEST(EssController, TotalLossGradientIsComposedForm) {
  SuperNetwork net = init_supernet(small_net());
  randomize_alpha(net.arch(), 6);
  const Batch b = blob_batch(8, 6);
  for (Parameter* p : net.theta()) p->tensor.set_requires_grad(false);
  const std::vector<double> lambda{0.3, 1.7, 0.05};

  auto alpha_grads = [&](bool with_entropy) {
    for (Parameter* p : net.arch().parameters()) p->tensor.clear_grad();
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = ops::cross_entropy(net.forward(b.images), b.labels);
    if (with_entropy) {
      for (std::size_t k = 1; k <= 3; ++k) loss = ops::add(loss, ops::scale(cell_entropy_tensor(net.arch(), k), lambda[k - 1]));
    }
    tape.backward(loss);
    std::vector<std::vector<double>> g;
    for (Parameter* p : net.arch().parameters()) g.emplace_back(p->tensor.grad().begin(), p->tensor.grad().end());
    return g;
  };
  const auto ce = alpha_grads(false);
  const auto all = alpha_grads(true);
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto gh = entropy_grad_analytic(net.arch(), k);
    for (std::size_t e = 0; e < gh[0].size(); ++e) {
      EXPECT_NEAR(all[k - 1][e], ce[k - 1][e] + lambda[k - 1] * gh[0][e], 1e-8);
    }
  }
}

TEST(EssController, ReinitResetsThetaOnly) {
  SuperNetwork net = init_supernet(small_net());
  EssController ctl(net, quick_config());
  ctl.begin_search(10);
  ctl.begin_round();
  const Batch b = blob_batch(8, 7);
  ctl.warmup_step(b.images, b.labels);
  ctl.begin_arch_opt();
  ctl.arch_opt_step(b.images, b.labels);
  const auto alpha = values(net.arch().parameters());
  const auto theta = values(net.theta());
  const ArchSnapshot mask = net.arch().snapshot();
  const auto lambda = ctl.state().lambda;
  ctl.reinit_model_params();
  EXPECT_EQ(values(net.arch().parameters()), alpha);
  EXPECT_EQ(net.arch().snapshot().alive, mask.alive);
  EXPECT_EQ(ctl.state().lambda, lambda);
  EXPECT_NE(values(net.theta()), theta);
  for (const AdamState& s : ctl.theta_optimizer().states()) {
    EXPECT_EQ(s.step, 0);
    for (double m : s.m) EXPECT_EQ(m, 0.0);
    for (double v : s.v) EXPECT_EQ(v, 0.0);
  }
}

class SearchTest : public ::testing::Test {
 protected:
  Dataset data_ = [] {
    Rng rng(9);
    return make_synthetic_blobs(200, 4, 3, 8, rng);
  }();
  std::vector<std::size_t> all_() const {
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
};

TEST_F(SearchTest, ArchiveLabelsFollowCumulativeEpochs) {
  SuperNetwork net = init_supernet(small_net());
  EssConfig cfg;  // R = 5, T = 16
  BatchLoader loader(data_, all_(), 200, 1);
  const SearchResult r = run_search(net, loader, cfg);
  ASSERT_EQ(r.archive.size(), 5u);
  const std::vector<std::string> want{"16E", "32E", "48E", "64E", "80E"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.archive[i].label, want[i]);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_TRUE(r.archive[i].alive_subset_of(r.archive[i - 1]));
  EXPECT_EQ(r.state.epoch, 80u);
}

TEST_F(SearchTest, SingleRoundOfPureWarmup) {
  SuperNetwork net = init_supernet(small_net());
  EssConfig cfg = quick_config();
  cfg.r_init = 1;
  cfg.t_warm = cfg.t_search;
  BatchLoader loader(data_, all_(), 50, 1);
  const SearchResult r = run_search(net, loader, cfg);
  ASSERT_EQ(r.archive.size(), 1u);
  EXPECT_EQ(r.state.lambda, std::vector<double>(3, cfg.lambda_init));
  EXPECT_EQ(r.archive[0].alive_count(), net.arch().entry_count());
  EXPECT_EQ(r.state.phase, Phase::Warmup);
}

TEST_F(SearchTest, TinyRunShrinksWithPositiveLambda) {
  SuperNetwork net = init_supernet(small_net());
  const double start = total_entropy(net.arch());
  EssConfig cfg = quick_config();
  BatchLoader loader(data_, all_(), 20, 1);
  std::vector<double> lambdas;
  std::size_t arch_steps = 0;
  SearchObserver obs;
  obs.on_diagnostics = [&](const StepDiagnostics& d) {
    lambdas.push_back(d.lambda);
    arch_steps += d.cell == 1;
  };
  const SearchResult r = run_search(net, loader, cfg, obs);
  EXPECT_LT(total_entropy(net.arch()), start);
  EXPECT_EQ(arch_steps, 2u * 2u * 10u);
  for (double l : lambdas) {
    EXPECT_GT(l, 0.0);
    EXPECT_TRUE(std::isfinite(l));
  }
  for (std::size_t i = 1; i < r.archive.size(); ++i) EXPECT_TRUE(r.archive[i].alive_subset_of(r.archive[i - 1]));
}

TEST_F(SearchTest, LambdaMovesByExactFactors) {
  SuperNetwork net = init_supernet(small_net());
  EssConfig cfg = quick_config();
  BatchLoader loader(data_, all_(), 20, 1);
  std::vector<std::vector<double>> by_cell(3);
  SearchObserver obs;
  obs.on_diagnostics = [&](const StepDiagnostics& d) { by_cell[d.cell - 1].push_back(d.lambda); };
  run_search(net, loader, cfg, obs);
  for (const auto& series : by_cell) {
    for (std::size_t i = 1; i < series.size(); ++i) {
      const double ratio = series[i] / series[i - 1];
      EXPECT_TRUE(std::abs(ratio - 1.05) < 1e-12 || std::abs(ratio - 0.95) < 1e-12) << ratio;
    }
  }
}

TEST_F(SearchTest, AlphaPersistsAcrossRounds) {
  SuperNetwork net = init_supernet(small_net());
  EssConfig cfg = quick_config();
  EssController ctl(net, cfg);
  BatchLoader loader(data_, all_(), 50, 1);
  ctl.begin_search(loader.batches_per_epoch());
  ctl.begin_round();
  Tensor images;
  std::vector<int> labels;
  loader.start_epoch();
  loader.next(images, labels);
  ctl.warmup_step(images, labels);
  const auto alpha = values(net.arch().parameters());
  ctl.end_round();
  ctl.begin_round();
  EXPECT_EQ(values(net.arch().parameters()), alpha);
  EXPECT_EQ(ctl.state().round, 2u);
}

}  // namespace
}  // namespace shrinknas
