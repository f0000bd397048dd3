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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shrinknas/commands.hpp"
#include "shrinknas/error.hpp"
#include "shrinknas/genotype.hpp"
#include "shrinknas/run_config.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> space;
  std::optional<double> epsilon;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> epochs;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--operator-space", f.space, "O1, O2 or O3");
  cmd->add_option("--epsilon", f.epsilon, "pruning threshold");
  cmd->add_option("--rounds", f.rounds, "search rounds (R_init)");
  cmd->add_option("--epochs", f.epochs, "epochs per round (T_search); for eval, training epochs");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--set", f.sets, "extra key=value override, repeatable");
}

// Precedence: command line > config file > built-in defaults.
shrinknas::RunConfig build_config(const CommonFlags& f, bool eval_epochs) {
  shrinknas::RunConfig cfg;
  if (!f.config.empty()) cfg = shrinknas::load_run_config(f.config, cfg);
  for (const std::string& kv : f.sets) cfg.apply_text(kv);
  if (f.seed) cfg.seed = *f.seed;
  if (f.space) cfg.set("operator_space", *f.space);
  if (f.epsilon) cfg.ess.epsilon = *f.epsilon;
  if (f.rounds) cfg.ess.r_init = *f.rounds;
  if (f.epochs) {
    if (eval_epochs) cfg.eval.epochs = *f.epochs;
    else cfg.set("t_search", std::to_string(*f.epochs));
  }
  if (f.out) cfg.out = *f.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shrinknas: differentiable architecture search with entropy-driven super-network shrinking"};
  app.require_subcommand(1);

  CommonFlags search_flags, eval_flags;
  auto* search = app.add_subcommand("search", "run the shrinking search");
  add_common(search, search_flags);

  auto* discretize = app.add_subcommand("discretize", "derive a genotype from a checkpoint");
  std::string checkpoint, mode = "dynamic", disc_out, disc_name = "genotype";
  double disc_epsilon = 0.02;
  discretize->add_option("checkpoint", checkpoint, "checkpoint.bin from a search run")->required();
  discretize->add_option("--mode", mode, "dynamic or constrained")->check(CLI::IsMember({"dynamic", "constrained"}));
  discretize->add_option("--epsilon", disc_epsilon, "pruning threshold for dynamic mode");
  discretize->add_option("--out", disc_out, "output directory (default: the checkpoint's directory)");
  discretize->add_option("--name", disc_name, "output file stem");

  auto* eval = app.add_subcommand("eval", "retrain a genotype from scratch");
  std::string genotype_path;
  eval->add_option("genotype", genotype_path, "genotype JSON")->required();
  add_common(eval, eval_flags);

  auto* report = app.add_subcommand("report", "summarize a search run directory");
  std::string run_dir;
  std::size_t points = 200;
  report->add_option("run_dir", run_dir, "search output directory")->required();
  report->add_option("--points", points, "max points per cell series");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*search) {
      const shrinknas::RunConfig cfg = build_config(search_flags, false);
      const auto summary = shrinknas::cmd_search(cfg, &std::cout);
      std::cout << "run written to " << summary.run_dir.string() << "\n";
    } else if (*discretize) {
      namespace fs = std::filesystem;
      fs::path out = disc_out.empty() ? fs::path(checkpoint).parent_path() : shrinknas::resolve_out_dir(disc_out);
      const auto g = shrinknas::cmd_discretize(checkpoint, disc_epsilon, mode, out, disc_name);
      std::cout << "wrote " << (out / (disc_name + ".json")).string() << " with " << g.edge_count() << " edges\n";
    } else if (*eval) {
      const shrinknas::RunConfig cfg = build_config(eval_flags, true);
      const auto g = shrinknas::load_genotype(genotype_path);
      const auto out = shrinknas::resolve_out_dir(cfg.out);
      const auto r = shrinknas::cmd_eval(g, cfg, out, &std::cout);
      std::cout << "train accuracy " << r.train_accuracy << ", test accuracy " << r.test_accuracy << "\n"
                << r.complexity.to_table();
    } else if (*report) {
      std::cout << shrinknas::cmd_report(run_dir, points);
    }
  } catch (const shrinknas::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
