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

#include "shrinknas/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "shrinknas/checkpoint.hpp"
#include "shrinknas/data.hpp"
#include "shrinknas/discrete_net.hpp"
#include "shrinknas/discretizer.hpp"
#include "shrinknas/entropy.hpp"
#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"
#include "shrinknas/optim.hpp"
#include "shrinknas/tape.hpp"

namespace shrinknas {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

struct PreparedData {
  Dataset data;
  Split split;
};

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData p{make_dataset(cfg.data, cfg.seed), {}};
  p.split = split_indices(p.data.size(), cfg.data.train_fraction, cfg.seed + 1);
  normalize_per_channel(p.data, p.split.train);
  return p;
}

double accuracy(const DiscreteNetwork& net, const Dataset& data, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < idx.size(); b += 64) {
    std::span<const std::size_t> chunk(idx.data() + b, std::min<std::size_t>(64, idx.size() - b));
    const Tensor logits = net.forward(data.batch(chunk));
    const auto labels = data.batch_labels(chunk);
    const std::size_t c = logits.dim(1);
    auto d = logits.data();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t o = 1; o < c; ++o)
        if (d[i * c + o] > d[i * c + best]) best = o;
      correct += static_cast<int>(best) == labels[i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

fs::path resolve_out_dir(const std::string& out) {
  fs::path p(out);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kOutRootEnv); root != nullptr && *root != '\0') return fs::path(root) / p;
  return p;
}

SearchSummary cmd_search(const RunConfig& cfg, std::ostream* log) {
  SearchSummary summary;
  summary.run_dir = resolve_out_dir(cfg.out);
  make_dir(summary.run_dir);
  const fs::path dir = summary.run_dir;
  open_out(dir / "config.txt") << cfg.to_text();

  PreparedData prep = prepare_data(cfg);
  BatchLoader loader(prep.data, prep.split.train, cfg.batch_size, cfg.seed + 2, cfg.data.augment);
  summary.steps_per_epoch = loader.batches_per_epoch();

  SuperNetwork net = init_supernet(cfg.supernet());
  EssController ctl(net, cfg.ess);

  auto csv = open_out(dir / "entropy.csv");
  csv << "round,epoch,step,cell,entropy,lambda,loss_ce,loss_all\n";
  auto diag = open_out(dir / "diagnostics.csv");
  diag << "round,epoch,step,cell,lambda,grad_ce_norm,grad_h_norm,cos_theta,h_before,h_after_step,h_gradient_probe,h_after,pruned\n";
  auto prune = open_out(dir / "pruning.csv");
  prune << "step,cell,node,entry,weight\n";

  const std::vector<CellKind> kinds = default_cell_kinds(cfg.cells);
  const OperatorSpace space = OperatorSpace::from_id(cfg.space);
  ojson archive = ojson::array();

  SearchObserver obs;
  obs.on_row = [&](const EntropyRow& r) {
    csv << r.round << ',' << r.epoch << ',' << r.step << ',' << r.cell << ',' << g17(r.entropy) << ','
        << g17(r.lambda) << ',' << g17(r.loss_ce) << ',' << g17(r.loss_all) << '\n';
  };
  obs.on_diagnostics = [&](const StepDiagnostics& d) {
    diag << d.round << ',' << d.epoch << ',' << d.step << ',' << d.cell << ',' << g17(d.lambda) << ','
         << g17(d.grad_ce_norm) << ',' << g17(d.grad_h_norm) << ',' << g17(d.cos_theta) << ',' << g17(d.h_before)
         << ',' << g17(d.h_after_step) << ',' << g17(d.h_gradient_probe) << ',' << g17(d.h_after) << ','
         << d.pruned << '\n';
  };
  obs.on_prune = [&](const PruneLog& plog) {
    for (const PruneEvent& e : plog.pruned) {
      prune << ctl.state().step << ',' << e.cell << ',' << e.node << ',' << e.entry << ',' << g17(e.weight) << '\n';
    }
  };
  obs.on_snapshot = [&](const ArchSnapshot& snap) {
    ArchParams arch(snap.cells, snap.nodes, snap.ops);
    arch.restore(snap);
    const Genotype g = extract_genotype(arch, kinds, space);
    const std::string stem = "genotype_" + snap.label;
    save_genotype(g, (dir / (stem + ".json")).string());
    open_out(dir / (stem + ".dot")) << g.to_dot();
    SnapshotInfo info{snap.label, snap.alive_count(), count_params(g, cfg.channels, cfg.data.classes, cfg.data.channels),
                      count_flops(g, cfg.channels, cfg.data.classes, cfg.data.channels, cfg.data.resolution,
                                  cfg.data.resolution),
                      stem + ".json"};
    archive.push_back({{"label", info.label},
                       {"alive_entries", info.alive_entries},
                       {"params", info.params},
                       {"flops", info.flops},
                       {"genotype", info.genotype_file}});
    summary.snapshots.push_back(info);
    if (log) {
      *log << "snapshot " << info.label << ": " << info.alive_entries << " alive entries, " << info.params
           << " params, total entropy " << total_entropy(arch) << "\n";
    }
  };

  SearchResult result = run_search(ctl, loader, obs);
  open_out(dir / "archive.json") << archive.dump(2) << "\n";
  save_checkpoint((dir / "checkpoint.bin").string(), net, ctl, cfg.to_text());
  summary.archive = std::move(result.archive);
  summary.state = std::move(result.state);
  return summary;
}

Genotype cmd_discretize(const std::string& checkpoint, double epsilon, const std::string& mode,
                        const fs::path& out_dir, const std::string& name) {
  SuperNetwork net = load_checkpoint(checkpoint);
  Genotype g;
  if (mode == "dynamic") {
    dynamic_discretize(net.arch(), epsilon);
    g = extract_genotype(net);
  } else if (mode == "constrained") {
    g = constrained_discretize(net);
  } else {
    throw ConfigError("unknown discretization mode '" + mode + "' (expected dynamic or constrained)");
  }
  g.validate();
  make_dir(out_dir);
  save_genotype(g, (out_dir / (name + ".json")).string());
  open_out(out_dir / (name + ".dot")) << g.to_dot();
  return g;
}

EvalReport cmd_eval(const Genotype& genotype, const RunConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  genotype.validate();
  PreparedData prep = prepare_data(cfg);
  DiscreteNetwork net = rebuild_discrete(genotype, cfg.channels, cfg.data.classes, cfg.data.channels, cfg.seed + 3);
  BatchLoader loader(prep.data, prep.split.train, cfg.eval.batch_size, cfg.seed + 4, cfg.data.augment);
  const auto params = net.parameters();
  Sgd sgd(params, cfg.eval.lr, cfg.eval.momentum, cfg.eval.weight_decay);
  const auto total = static_cast<std::int64_t>(cfg.eval.epochs * loader.batches_per_epoch());
  std::int64_t t = 0;
  EvalReport report;
  Tensor images;
  std::vector<int> labels;
  for (std::size_t epoch = 1; epoch <= cfg.eval.epochs; ++epoch) {
    loader.start_epoch();
    double loss_sum = 0.0;
    std::size_t batches = 0;
    while (loader.next(images, labels)) {
      sgd.set_lr(cosine_lr(cfg.eval.lr, t++, total));
      sgd.zero_grad();
      Tape tape;
      TapeScope scope(tape);
      Tensor loss = ops::cross_entropy(net.forward(images), labels);
      tape.backward(loss);
      clip_grad_norm(params, cfg.eval.clip);
      sgd.step();
      loss_sum += loss.item();
      ++batches;
    }
    report.final_loss = loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1));
    if (log) *log << "epoch " << epoch << " loss " << report.final_loss << "\n";
  }
  report.train_accuracy = accuracy(net, prep.data, prep.split.train);
  report.test_accuracy = accuracy(net, prep.data, prep.split.test);
  report.complexity = complexity_report(genotype, cfg.channels, cfg.data.classes, cfg.data.channels,
                                        cfg.data.resolution, cfg.data.resolution);

  make_dir(out_dir);
  ojson j;
  j["train_accuracy"] = report.train_accuracy;
  j["test_accuracy"] = report.test_accuracy;
  j["final_loss"] = report.final_loss;
  j["epochs"] = cfg.eval.epochs;
  j["complexity"] = ojson::parse(report.complexity.to_json());
  j["structure"] = ojson::parse(structure_stats_json(structure_stats(genotype)));
  open_out(out_dir / "eval.json") << j.dump(2) << "\n";
  return report;
}

std::string cmd_report(const fs::path& run_dir, std::size_t max_points) {
  const fs::path csv_path = run_dir / "entropy.csv";
  if (!fs::exists(csv_path)) throw IoError("run directory " + run_dir.string() + " has no entropy.csv");
  if (max_points < 2) throw ConfigError("report needs at least 2 points per series");

  struct Point {
    std::size_t step;
    double entropy;
    double lambda;
  };
  std::map<std::size_t, std::vector<Point>> series;
  {
    std::istringstream in(read_file(csv_path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
      if (f.size() != 8) throw IoError("malformed entropy.csv line: " + line);
      series[std::stoul(f[3])].push_back({std::stoul(f[2]), std::stod(f[4]), std::stod(f[5])});
    }
  }
  if (series.empty()) throw IoError("entropy.csv has no rows");

  auto out = open_out(run_dir / "entropy_series.csv");
  out << "cell,step,entropy,lambda\n";
  ojson summary;
  summary["cells"] = ojson::array();
  double first_total = 0.0, last_total = 0.0;
  for (const auto& [cell, pts] : series) {
    const std::size_t n = pts.size();
    const std::size_t stride = (n + max_points - 1) / max_points;
    for (std::size_t i = 0; i < n; i += stride) {
      out << cell << ',' << pts[i].step << ',' << g17(pts[i].entropy) << ',' << g17(pts[i].lambda) << '\n';
    }
    if ((n - 1) % stride != 0) {
      out << cell << ',' << pts[n - 1].step << ',' << g17(pts[n - 1].entropy) << ',' << g17(pts[n - 1].lambda)
          << '\n';
    }
    summary["cells"].push_back({{"cell", cell}, {"first", pts.front().entropy}, {"final", pts.back().entropy}});
    first_total += pts.front().entropy;
    last_total += pts.back().entropy;
  }
  summary["first_total_entropy"] = first_total;
  summary["final_total_entropy"] = last_total;

  // The initial entropy precedes the first logged step; recompute it from the
  // run configuration when available.
  if (fs::exists(run_dir / "config.txt")) {
    RunConfig cfg;
    cfg.apply_text(read_file(run_dir / "config.txt"));
    const SupernetConfig sc = cfg.supernet();
    summary["initial_total_entropy"] = total_entropy(ArchParams(sc.cells, sc.nodes, sc.space.size()));
  }

  summary["snapshots"] = ojson::array();
  summary["complexity_trend"] = ojson::array();
  bool non_increasing = true;
  if (fs::exists(run_dir / "archive.json")) {
    const ojson archive = ojson::parse(read_file(run_dir / "archive.json"));
    std::size_t prev = 0;
    bool first = true;
    for (const auto& s : archive) {
      summary["snapshots"].push_back(s.at("label"));
      const std::size_t params = s.at("params").get<std::size_t>();
      summary["complexity_trend"].push_back(params);
      if (!first && params > prev) non_increasing = false;
      prev = params;
      first = false;
    }
  }
  summary["complexity_non_increasing"] = non_increasing;
  const std::string text = summary.dump(2) + "\n";
  open_out(run_dir / "summary.json") << text;
  return text;
}

}  // namespace shrinknas
