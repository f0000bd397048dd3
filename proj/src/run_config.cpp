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

#include "shrinknas/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "shrinknas/error.hpp"

namespace shrinknas {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

EssConfig RunConfig::tiny_ess_defaults() {
  EssConfig e;
  e.t_search = 8;
  e.t_warm = 4;
  e.r_init = 2;
  return e;
}

SupernetConfig RunConfig::supernet() const {
  SupernetConfig c;
  c.cells = cells;
  c.nodes = nodes;
  c.space = OperatorSpace::from_id(space);
  c.channels = channels;
  c.classes = data.classes;
  c.in_channels = data.channels;
  c.seed = seed;
  return c;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  using Z = std::size_t;
  if (key == "seed") seed = parse_int<std::uint64_t>(key, v);
  else if (key == "dataset") data.kind = std::string(v);
  else if (key == "dataset_path") data.path = std::string(v);
  else if (key == "samples") data.samples = parse_int<Z>(key, v);
  else if (key == "resolution") data.resolution = parse_int<Z>(key, v);
  else if (key == "classes") data.classes = parse_int<Z>(key, v);
  else if (key == "in_channels") data.channels = parse_int<Z>(key, v);
  else if (key == "train_fraction") data.train_fraction = parse_double(key, v);
  else if (key == "augment") data.augment = parse_bool(key, v);
  else if (key == "cells") cells = parse_int<Z>(key, v);
  else if (key == "nodes") nodes = parse_int<Z>(key, v);
  else if (key == "channels") channels = parse_int<Z>(key, v);
  else if (key == "operator_space") space = OperatorSpace::from_id(v).id();
  else if (key == "batch_size") batch_size = parse_int<Z>(key, v);
  else if (key == "c1") ess.c1 = parse_double(key, v);
  else if (key == "c2") ess.c2 = parse_double(key, v);
  else if (key == "lambda_init") ess.lambda_init = parse_double(key, v);
  else if (key == "t_search") {
    // T_warm follows T_search / 2 unless set explicitly afterwards.
    ess.t_search = parse_int<Z>(key, v);
    ess.t_warm = std::max<Z>(1, ess.t_search / 2);
  }
  else if (key == "t_warm") ess.t_warm = parse_int<Z>(key, v);
  else if (key == "r_init") ess.r_init = parse_int<Z>(key, v);
  else if (key == "eta_theta") ess.theta_opt.lr = parse_double(key, v);
  else if (key == "wd_theta") ess.theta_opt.weight_decay = parse_double(key, v);
  else if (key == "eta_alpha") ess.alpha_opt.lr = parse_double(key, v);
  else if (key == "wd_alpha") ess.alpha_opt.weight_decay = parse_double(key, v);
  else if (key == "epsilon") ess.epsilon = parse_double(key, v);
  else if (key == "delta_e") {
    if (v == "auto") ess.delta_e.reset();
    else ess.delta_e = parse_double(key, v);
  } else if (key == "warmup_updates_alpha") ess.warmup_updates_alpha = parse_bool(key, v);
  else if (key == "archopt_updates_theta") ess.archopt_updates_theta = parse_bool(key, v);
  else if (key == "h_min") ess.h_min = parse_double(key, v);
  else if (key == "eval_epochs") eval.epochs = parse_int<Z>(key, v);
  else if (key == "eval_lr") eval.lr = parse_double(key, v);
  else if (key == "eval_momentum") eval.momentum = parse_double(key, v);
  else if (key == "eval_weight_decay") eval.weight_decay = parse_double(key, v);
  else if (key == "eval_clip") eval.clip = parse_double(key, v);
  else if (key == "eval_batch_size") eval.batch_size = parse_int<Z>(key, v);
  else if (key == "out") out = std::string(v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "seed=" << seed << "\n"
     << "dataset=" << data.kind << "\n"
     << "dataset_path=" << data.path << "\n"
     << "samples=" << data.samples << "\n"
     << "resolution=" << data.resolution << "\n"
     << "classes=" << data.classes << "\n"
     << "in_channels=" << data.channels << "\n"
     << "train_fraction=" << fmt(data.train_fraction) << "\n"
     << "augment=" << b(data.augment) << "\n"
     << "cells=" << cells << "\n"
     << "nodes=" << nodes << "\n"
     << "channels=" << channels << "\n"
     << "operator_space=" << space << "\n"
     << "batch_size=" << batch_size << "\n"
     << "c1=" << fmt(ess.c1) << "\n"
     << "c2=" << fmt(ess.c2) << "\n"
     << "lambda_init=" << fmt(ess.lambda_init) << "\n"
     << "t_search=" << ess.t_search << "\n"
     << "t_warm=" << ess.t_warm << "\n"
     << "r_init=" << ess.r_init << "\n"
     << "eta_theta=" << fmt(ess.theta_opt.lr) << "\n"
     << "wd_theta=" << fmt(ess.theta_opt.weight_decay) << "\n"
     << "eta_alpha=" << fmt(ess.alpha_opt.lr) << "\n"
     << "wd_alpha=" << fmt(ess.alpha_opt.weight_decay) << "\n"
     << "epsilon=" << fmt(ess.epsilon) << "\n"
     << "delta_e=" << (ess.delta_e ? fmt(*ess.delta_e) : std::string("auto")) << "\n"
     << "warmup_updates_alpha=" << b(ess.warmup_updates_alpha) << "\n"
     << "archopt_updates_theta=" << b(ess.archopt_updates_theta) << "\n"
     << "h_min=" << fmt(ess.h_min) << "\n"
     << "eval_epochs=" << eval.epochs << "\n"
     << "eval_lr=" << fmt(eval.lr) << "\n"
     << "eval_momentum=" << fmt(eval.momentum) << "\n"
     << "eval_weight_decay=" << fmt(eval.weight_decay) << "\n"
     << "eval_clip=" << fmt(eval.clip) << "\n"
     << "eval_batch_size=" << eval.batch_size << "\n"
     << "out=" << out << "\n";
  return os.str();
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  base.apply_text(ss.str());
  return base;
}

}  // namespace shrinknas
