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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shrinknas/commands.hpp"
#include "shrinknas/complexity.hpp"
#include "shrinknas/discrete_net.hpp"
#include "shrinknas/discretizer.hpp"
#include "shrinknas/entropy.hpp"
#include "shrinknas/ops.hpp"
#include "shrinknas/run_config.hpp"
#include "shrinknas/supernet.hpp"
#include "shrinknas/tape.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace shrinknas;
using testing::check_gradients;
using testing::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("[%s] criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::map<std::string, double>> read_csv(const fs::path& p) {
  std::istringstream in(read(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
  }
  std::vector<std::map<std::string, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::map<std::string, double> row;
    std::size_t c = 0;
    for (std::string v; std::getline(ls, v, ',') && c < header.size(); ++c) row[header[c]] = std::stod(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::string where;
  auto track = [&](const testing::GradCheck& r, const char* what) {
    if (r.max_rel > worst) {
      worst = r.max_rel;
      where = std::string(what) + " " + r.worst;
    }
  };

  const Tensor a = random_tensor({2, 4, 6, 6}, rng);
  const Tensor b = random_tensor({2, 4, 6, 6}, rng);
  const Tensor c = random_tensor({2, 2, 6, 6}, rng);
  const Tensor w = random_tensor({4, 2, 3, 3}, rng);
  const Tensor gain = random_tensor({4}, rng);
  const Tensor bias = random_tensor({4}, rng);
  const Tensor lw = random_tensor({3, 4}, rng);
  const Tensor lb = random_tensor({3}, rng);
  const Tensor mix = random_tensor({2}, rng);
  const Tensor logits = random_tensor({3, 5}, rng, true, 2.0);
  const Tensor p4 = random_tensor({2, 4, 6, 6}, rng, false);
  const Tensor p6 = random_tensor({2, 6, 6, 6}, rng, false);
  const Tensor pl = random_tensor({2, 3}, rng, false);
  const Tensor ps = random_tensor({3, 5}, rng, false);
  const Tensor pg = random_tensor({5}, rng, false);
  const std::vector<std::size_t> idx{0, 4, 4, 9, 14};
  const std::vector<int> labels{1, 4, 0};

  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t dilation : {1u, 2u}) {
      for (std::size_t groups : {1u, 2u}) {
        const Tensor x = random_tensor({2, 4, 7, 7}, rng);
        const Tensor k = random_tensor({4, 4 / groups, 3, 3}, rng);
        const ops::Conv2dArgs args{.stride = stride, .padding = dilation, .dilation = dilation, .groups = groups};
        const std::size_t ho = ops::conv_output_size(7, 3, args);
        const Tensor probe = random_tensor({2, 4, ho, ho}, rng, false);
        track(check_gradients([&] { return ops::sum(ops::mul(ops::conv2d(x, k, args), probe)); }, {x, k}),
              "conv2d");
      }
    }
  }
  track(check_gradients([&] { return ops::sum(ops::mul(ops::add(a, b), p4)); }, {a, b}), "add");
  track(check_gradients([&] { return ops::sum(ops::mul(a, b)); }, {a, b}), "mul");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::scale(a, 0.7), p4)); }, {a}), "scale");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::relu(a), p4)); }, {a}), "relu");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::concat({a, c}), p6)); }, {a, c}), "concat");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::affine_channel_norm(a, gain, bias), p4)); },
                        {a, gain, bias}),
        "affine_channel_norm");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::linear(ops::global_avg_pool(a), lw, lb), pl)); },
                        {a, lw, lb}),
        "global_avg_pool/linear");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::weighted_sum({a, b}, mix), p4)); }, {a, b, mix}),
        "weighted_sum");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::softmax(logits, 1), ps)); }, {logits}), "softmax");
  track(check_gradients([&] { return ops::sum(ops::mul(ops::log_softmax(logits, 1), ps)); }, {logits}),
        "log_softmax");
  track(check_gradients([&] { return ops::cross_entropy(logits, labels); }, {logits}), "cross_entropy");
  const Tensor flat = random_tensor({15}, rng);
  track(check_gradients([&] { return ops::sum(ops::mul(ops::gather(flat, idx), pg)); }, {flat}), "gather");
  const std::vector<int> two{2, 0};
  track(check_gradients(
            [&] {
              Tensor h = ops::relu(ops::affine_channel_norm(ops::conv2d(c, w, {.padding = 1}), gain, bias));
              return ops::cross_entropy(ops::linear(ops::global_avg_pool(h), lw, lb), two);
            },
            {w, gain, bias, lw, lb}),
        "composite");

  SupernetConfig sc;
  sc.cells = 3;
  sc.nodes = 4;
  sc.space = OperatorSpace::preset(3);
  sc.channels = 4;
  sc.classes = 3;
  sc.seed = 7;
  SuperNetwork net = init_supernet(sc);
  std::vector<Tensor> alpha, theta;
  for (Parameter* p : net.arch().parameters()) {
    for (double& v : p->tensor.data()) v = uniform(rng, -1.0, 1.0);
    alpha.push_back(p->tensor);
  }
  for (Parameter* p : net.theta()) {
    for (double& v : p->tensor.data()) v = uniform(rng, -1.0, 1.0);
    theta.push_back(p->tensor);
  }
  const Tensor x = random_tensor({4, 3, 6, 6}, rng, false);
  const std::vector<int> y{0, 1, 2, 1};
  auto loss = [&] { return ops::cross_entropy(net.forward(x), y); };
  track(check_gradients(loss, alpha), "supernet alpha");
  track(check_gradients(loss, theta, 1e-4, 8), "supernet theta");

  double entropy_worst = 0.0;
  ArchParams arch(3, 6, 3);
  for (int draw = 0; draw < 1000; ++draw) {
    const double scale = draw % 4 == 0 ? 30.0 : 3.0;
    for (Parameter* p : arch.parameters()) {
      for (double& v : p->tensor.data()) v = scale * uniform(rng, -1.0, 1.0);
      p->tensor.clear_grad();
    }
    const std::size_t k = 1 + uniform_index(rng, 3);
    {
      Tape tape;
      TapeScope scope(tape);
      tape.backward(cell_entropy_tensor(arch, k));
    }
    const auto analytic = entropy_grad_analytic(arch, k);
    for (std::size_t j = 3; j < 6; ++j) {
      const auto g = arch.alpha(k, j).tensor.grad();
      for (std::size_t e = 0; e < g.size(); ++e) entropy_worst = std::max(entropy_worst, std::abs(g[e] - analytic[j - 3][e]));
    }
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = worst < 1e-5 && entropy_worst < 1e-9 && elapsed < 60.0;
  o.detail = fmt("max FD relative error %.2e (worst: %s); entropy analytic vs autodiff %.2e; %.1f s", worst,
                 where.c_str(), entropy_worst, elapsed);
  return o;
}

Outcome entropy_bounds() {
  Rng rng(202);
  std::size_t violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t m = 1 + uniform_index(rng, 30);
    std::vector<double> v(m);
    double s = 0.0;
    for (double& x : v) s += x = std::pow(uniform01(rng), 1.0 + 8.0 * uniform01(rng)) + 1e-300;
    for (double& x : v) x /= s;
    const double h = node_entropy(v);
    if (h < 0.0 || h > std::log(static_cast<double>(m)) + 1e-12) ++violations;
  }
  double uniform_err = 0.0;
  bool onehot_exact = true;
  for (std::size_t m = 1; m <= 64; ++m) {
    uniform_err = std::max(uniform_err, std::abs(node_entropy(std::vector<double>(m, 1.0 / double(m))) -
                                                 std::log(double(m))));
    for (std::size_t hot = 0; hot < m; ++hot) {
      std::vector<double> v(m, 0.0);
      v[hot] = 1.0;
      onehot_exact = onehot_exact && node_entropy(v) == 0.0;
    }
  }
  return {violations == 0 && uniform_err < 1e-9 && onehot_exact,
          fmt("%zu of 10000 random vectors outside [0, log M]; uniform max error %.1e; one-hot exactly 0: %s",
              violations, uniform_err, onehot_exact ? "yes" : "no")};
}

struct SearchRun {
  SearchSummary summary;
  double seconds = 0.0;
  std::vector<std::map<std::string, double>> diagnostics;
};

Outcome descent_check(const SearchRun& run) {
  std::size_t qualifying = 0, probe_down = 0, adam_down = 0;
  for (const auto& d : run.diagnostics) {
    const double gh = d.at("grad_h_norm");
    if (!(gh > 0.0) || d.at("h_before") <= 0.05) continue;
    const double bound = -d.at("grad_ce_norm") * d.at("cos_theta") / gh;
    if (d.at("lambda") < 10.0 * std::abs(bound)) continue;
    ++qualifying;
    probe_down += d.at("h_gradient_probe") < d.at("h_before");
    adam_down += d.at("h_after_step") < d.at("h_before");
  }
  const double frac = qualifying ? double(probe_down) / double(qualifying) : 0.0;
  const double adam_frac = qualifying ? double(adam_down) / double(qualifying) : 0.0;
  return {qualifying > 0 && frac >= 0.99,
          fmt("%zu qualifying (cell, step) pairs; gradient step lowers H in %.2f%%; realized Adam step in %.2f%%",
              qualifying, 100.0 * frac, 100.0 * adam_frac)};
}

Outcome budget_toy() {
  Rng rng(404);
  constexpr std::size_t n = 10;
  constexpr double eta = 1e-3;
  auto softmax = [](const std::vector<double>& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    std::vector<double> p(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
    for (double& v : p) v /= s;
    return p;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(n * n), b(n), alpha(n), grad_ce(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = uniform(rng, -1.0, 1.0);
      alpha[i] = uniform(rng, -1.5, 1.5);
      for (std::size_t j = 0; j < n; ++j) q[i * n + j] = uniform(rng, -0.3, 0.3);
    }
    for (std::size_t i = 0; i < n; ++i) {
      grad_ce[i] = b[i];
      for (std::size_t j = 0; j < n; ++j) grad_ce[i] += (q[i * n + j] + q[j * n + i]) * alpha[j];
    }
    const auto p = softmax(alpha);
    const auto gh = node_entropy_grad(p);
    const double de = 0.05 * eta * l2_norm(gh) * (l2_norm(gh) + l2_norm(grad_ce));
    const double lambda = lambda_exact(de, eta, gh, grad_ce);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = alpha[i] - eta * (grad_ce[i] + lambda * gh[i]);
    const double reduction = node_entropy(p) - node_entropy(softmax(next));
    worst = std::max(worst, std::abs(reduction - de) / de);
  }
  return {worst <= 0.05, fmt("100 random quadratic landscapes; worst |-dH - dE| / dE = %.3f%%", 100.0 * worst)};
}

Outcome budget_formula() {
  ArchParams a(12, 6, 3);
  const double per_cell = cell_entropy(a, 1);
  const double de = expected_entropy_reduction(total_entropy(a), 12, 100, 16, 5);
  return {std::abs(de - 8.0924e-4) <= 1e-8 && std::abs(per_cell - (std::log(6.0) + std::log(9.0) + std::log(12.0))) < 1e-12,
          fmt("uniform cell entropy %.6f (ln6 + ln9 + ln12), dE = %.6e", per_cell, de)};
}

Outcome tracking(const SearchRun& run) {
  const double de = run.summary.state.delta_e;
  std::map<std::pair<int, int>, std::vector<const std::map<std::string, double>*>> phases;  // (round, cell)
  bool lambda_ok = true;
  for (const auto& d : run.diagnostics) {
    phases[{int(d.at("round")), int(d.at("cell"))}].push_back(&d);
    lambda_ok = lambda_ok && d.at("lambda") > 0.0 && std::isfinite(d.at("lambda"));
  }
  for (double l : run.summary.state.lambda) lambda_ok = lambda_ok && l > 0.0 && std::isfinite(l);
  std::map<int, std::vector<double>> per_round;
  for (const auto& [key, rows] : phases) {
    const double drop = rows.front()->at("h_before") - rows.back()->at("h_after");
    per_round[key.first].push_back(drop / double(rows.size()));
  }
  bool ok = !per_round.empty() && lambda_ok;
  std::string detail = fmt("dE = %.3e;", de);
  for (const auto& [round, cells] : per_round) {
    double mean = 0.0;
    for (double v : cells) mean += v;
    mean /= double(cells.size());
    ok = ok && mean >= de / 3.0 && mean <= 3.0 * de;
    detail += fmt(" round %d mean reduction %.3e (%.2f x dE);", round, mean, mean / de);
  }
  detail += lambda_ok ? " lambda positive and finite" : " lambda left (0, inf)";
  return {ok, detail};
}

Outcome shrinking(const SearchRun& run) {
  const auto& archive = run.summary.archive;
  const auto& init = run.summary.state.initial_entropy;
  const ArchSnapshot& last = archive.back();
  ArchParams final_arch(last.cells, last.nodes, last.ops);
  final_arch.restore(last);
  const auto final_h = cell_entropies(final_arch);
  bool ok = run.seconds < 600.0;
  std::string ratios;
  for (std::size_t k = 0; k < final_h.size(); ++k) {
    const double r = final_h[k] / init[k];
    ok = ok && r < 0.4;
    ratios += fmt("%s%.3f", k ? ", " : "", r);
  }
  std::size_t previous = final_arch.entry_count();
  std::string counts = fmt("%zu", previous);
  for (const ArchSnapshot& s : archive) {
    ok = ok && s.alive_count() < previous;
    previous = s.alive_count();
    counts += fmt(" -> %zu", previous);
  }
  for (std::size_t i = 1; i < archive.size(); ++i) ok = ok && archive[i].alive_subset_of(archive[i - 1]);
  return {ok, fmt("%.1f s; final/initial entropy per cell [%s]; alive entries %s", run.seconds, ratios.c_str(),
                  counts.c_str())};
}

Outcome complexity_trend(const SearchRun& run) {
  const auto& snaps = run.summary.snapshots;
  bool non_increasing = !snaps.empty();
  bool strict = false;
  std::string trend;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    trend += fmt("%s%s %zu", i ? ", " : "", snaps[i].label.c_str(), snaps[i].params);
    if (i > 0) {
      non_increasing = non_increasing && snaps[i].params <= snaps[i - 1].params;
      strict = strict || snaps[i].params < snaps[i - 1].params;
    }
  }
  return {non_increasing && strict, "params " + trend};
}

Outcome discretizer_exactness() {
  bool ok = true;
  const std::vector<std::uint8_t> alive(3, 1);
  ok = ok && threshold_prune(std::vector<double>{0.5, 0.48, 0.02}, alive, 0.02).empty();
  ok = ok && threshold_prune(std::vector<double>{0.5, 0.481, 0.019}, alive, 0.02) == std::vector<std::size_t>{2};
  ok = ok && threshold_prune(std::vector<double>{0.5, 0.45, 0.03, 0.02}, std::vector<std::uint8_t>(4, 1), 0.02).empty();
  ok = ok && top2(std::vector<double>{0.4, 0.4, 0.2}) == std::pair<std::size_t, std::size_t>{0, 1};
  ok = ok && top2(std::vector<double>{0.5, 0.3, 0.4}) == std::pair<std::size_t, std::size_t>{0, 2};
  ok = ok && argmax(std::vector<double>{0.2, 0.5, 0.3}) == 1;
  const bool examples = ok;

  Rng rng(909);
  std::size_t nodes_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + uniform_index(rng, 4);
    ArchParams a(4, n, 3);
    for (Parameter* p : a.parameters()) {
      // Quantized alphas make ties common.
      for (double& v : p->tensor.data()) v = trial % 2 ? std::round(uniform(rng, -2.0, 2.0)) : uniform(rng, -2.0, 2.0);
    }
    const Genotype g = constrained_discretize(a, default_cell_kinds(4), OperatorSpace::preset(3));
    for (const auto& c : g.cells) {
      std::map<std::size_t, std::vector<GenotypeEdge>> in;
      for (const auto& e : c.edges) in[e.to].push_back(e);
      for (std::size_t j = 3; j < n; ++j) {
        ++nodes_checked;
        if (in[j].size() != 2) {
          ok = false;
          continue;
        }
        // Reference: per edge the best operator (lowest index on ties), then the
        // two best predecessors (lowest index on ties).
        std::vector<std::pair<double, std::size_t>> best;
        for (std::size_t i = 1; i < j; ++i) {
          const auto w = a.edgewise_weights(c.k, i, j);
          std::size_t o = 0;
          for (std::size_t q = 1; q < w.size(); ++q)
            if (w[q] > w[o]) o = q;
          best.push_back({w[o], i});
        }
        std::stable_sort(best.begin(), best.end(), [](auto x, auto y) { return x.first > y.first; });
        std::set<std::size_t> want{best[0].second, best[1].second};
        std::set<std::size_t> got{in[j][0].from, in[j][1].from};
        ok = ok && want == got;
      }
    }
  }
  return {ok, fmt("threshold and tie-break examples %s; %zu constrained nodes all with 2 inputs matching the "
                  "lowest-index reference",
                  examples ? "hold" : "fail", nodes_checked)};
}

Outcome oracle_equivalence() {
  Rng rng(1010);
  std::size_t param_ok = 0, flop_ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Genotype g = testing::random_genotype(rng);
    const std::size_t channels = 2 + uniform_index(rng, 6), classes = 2 + uniform_index(rng, 8);
    const std::size_t h = 4 + uniform_index(rng, 13), w = 4 + uniform_index(rng, 13);
    DiscreteNetwork net(g, channels, classes, 3, 0);
    std::size_t built = 0;
    for (Parameter* p : net.parameters()) built += p->tensor.numel();
    param_ok += count_params(g, channels, classes) == built;
    ops::reset_mac_count();
    net.forward(Tensor::zeros({1, 3, h, w}));
    flop_ok += count_flops(g, channels, classes, 3, h, w) == 2 * ops::mac_count();
  }
  return {param_ok == 20 && flop_ok == 20,
          fmt("params match construct-and-count on %zu/20, FLOPs match instrumented forward on %zu/20", param_ok,
              flop_ok)};
}

Outcome reproducibility(const SearchRun& a, const SearchRun& b) {
  std::vector<std::string> files{"entropy.csv"};
  for (const SnapshotInfo& s : a.summary.snapshots) files.push_back(s.genotype_file);
  std::size_t same = 0;
  for (const std::string& f : files) {
    const std::string x = read(a.summary.run_dir / f);
    same += !x.empty() && x == read(b.summary.run_dir / f);
  }
  return {same == files.size(), fmt("%zu/%zu files byte-identical across two seed-0 runs", same, files.size())};
}

SearchRun default_search(const fs::path& out) {
  RunConfig cfg;
  cfg.out = out.string();
  SearchRun run;
  const auto t0 = Clock::now();
  run.summary = cmd_search(cfg);
  run.seconds = seconds_since(t0);
  run.diagnostics = read_csv(run.summary.run_dir / "diagnostics.csv");
  return run;
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "shrinknas_acceptance";
  fs::remove_all(scratch);
  ::unsetenv(kOutRootEnv);

  report(1, "gradient correctness", gradient_correctness());
  report(2, "entropy bounds", entropy_bounds());
  const SearchRun run = default_search(scratch / "run_a");
  report(3, "descent on qualifying steps", descent_check(run));
  report(4, "one-step budget on quadratic toy", budget_toy());
  report(5, "entropy budget formula", budget_formula());
  report(6, "controller tracking", tracking(run));
  report(7, "shrinking end to end", shrinking(run));
  report(8, "complexity trend", complexity_trend(run));
  report(9, "discretizer exactness", discretizer_exactness());
  report(10, "oracle equivalence", oracle_equivalence());
  const SearchRun again = default_search(scratch / "run_b");
  report(11, "reproducibility", reproducibility(run, again));
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
