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

#include "shrinknas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "shrinknas/error.hpp"

namespace shrinknas {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'A', 'S', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

std::string take_string(std::istream& in, std::uint64_t n) {
  if (n > (1ULL << 32)) throw IoError("checkpoint string length is implausible");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError("checkpoint truncated");
  return s;
}

std::string alpha_name(std::size_t k, std::size_t j) {
  return "alpha/" + std::to_string(k) + "/" + std::to_string(j);
}
std::string alive_name(std::size_t k, std::size_t j) {
  return "alive/" + std::to_string(k) + "/" + std::to_string(j);
}

}  // namespace

const CheckpointRecord& CheckpointFile::get(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return r;
  throw IoError("checkpoint has no record '" + name + "'");
}

bool CheckpointFile::has(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return true;
  return false;
}

void CheckpointFile::add(std::string name, std::vector<double> values) {
  records.push_back({std::move(name), std::move(values), {}, false});
}

void CheckpointFile::add(std::string name, std::vector<std::uint8_t> values) {
  records.push_back({std::move(name), {}, std::move(values), true});
}

void CheckpointFile::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put<std::uint64_t>(out, records.size());
  for (const auto& r : records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put<std::uint8_t>(out, r.is_u8 ? 1 : 0);
    if (r.is_u8) {
      put<std::uint64_t>(out, r.u8.size());
      out.write(reinterpret_cast<const char*>(r.u8.data()), static_cast<std::streamsize>(r.u8.size()));
    } else {
      put<std::uint64_t>(out, r.f64.size());
      out.write(reinterpret_cast<const char*>(r.f64.data()),
                static_cast<std::streamsize>(r.f64.size() * sizeof(double)));
    }
  }
  if (!out) throw IoError("failed while writing checkpoint " + path);
}

CheckpointFile CheckpointFile::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path + " is not a shrinknas checkpoint");
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  CheckpointFile f;
  f.meta = take_string(in, take<std::uint64_t>(in));
  const auto count = take<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointRecord r;
    r.name = take_string(in, take<std::uint32_t>(in));
    const auto kind = take<std::uint8_t>(in);
    const auto n = take<std::uint64_t>(in);
    if (n > (1ULL << 34)) throw IoError("checkpoint record '" + r.name + "' is implausibly large");
    if (kind == 1) {
      r.is_u8 = true;
      r.u8.resize(n);
      in.read(reinterpret_cast<char*>(r.u8.data()), static_cast<std::streamsize>(n));
    } else if (kind == 0) {
      r.f64.resize(n);
      in.read(reinterpret_cast<char*>(r.f64.data()), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
      throw IoError("checkpoint record '" + r.name + "' has unknown kind " + std::to_string(kind));
    }
    if (!in) throw IoError("checkpoint truncated in record '" + r.name + "'");
    f.records.push_back(std::move(r));
  }
  return f;
}

void save_checkpoint(const std::string& path, SuperNetwork& net, EssController& controller,
                     const std::string& run_config_text) {
  const SupernetConfig& c = net.config();
  const EssState& st = controller.state();
  nlohmann::ordered_json meta;
  meta["supernet"] = {{"cells", c.cells},       {"nodes", c.nodes},     {"space", c.space.id()},
                      {"channels", c.channels}, {"classes", c.classes}, {"in_channels", c.in_channels},
                      {"seed", c.seed}};
  meta["ess"] = {{"round", st.round},
                 {"epoch", st.epoch},
                 {"step", st.step},
                 {"phase", st.phase == Phase::Warmup ? "warmup" : "arch_opt"},
                 {"delta_e", st.delta_e}};
  meta["run_config"] = run_config_text;

  CheckpointFile f;
  f.meta = meta.dump();
  ArchParams& arch = net.arch();
  std::size_t s = 0;
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    for (std::size_t j = 3; j < arch.nodes(); ++j, ++s) {
      auto a = arch.alpha(k, j).tensor.data();
      auto m = arch.alive(k, j);
      f.add(alpha_name(k, j), std::vector<double>(a.begin(), a.end()));
      f.add(alive_name(k, j), std::vector<std::uint8_t>(m.begin(), m.end()));
      const AdamState& as = controller.alpha_states()[s];
      f.add("adam_alpha/" + std::to_string(k) + "/" + std::to_string(j) + "/m", as.m);
      f.add("adam_alpha/" + std::to_string(k) + "/" + std::to_string(j) + "/v", as.v);
      f.add("adam_alpha/" + std::to_string(k) + "/" + std::to_string(j) + "/step",
            std::vector<double>{static_cast<double>(as.step)});
    }
  }
  const auto theta = net.theta();
  auto& theta_states = controller.theta_optimizer().states();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto d = theta[i]->tensor.data();
    f.add("theta/" + theta[i]->id, std::vector<double>(d.begin(), d.end()));
    if (i < theta_states.size()) {
      f.add("adam_theta/" + theta[i]->id + "/m", theta_states[i].m);
      f.add("adam_theta/" + theta[i]->id + "/v", theta_states[i].v);
      f.add("adam_theta/" + theta[i]->id + "/step", std::vector<double>{static_cast<double>(theta_states[i].step)});
    }
  }
  f.add("ess/lambda", st.lambda);
  f.add("ess/prev_entropy", st.prev_entropy);
  f.add("ess/initial_entropy", st.initial_entropy);
  f.write(path);
}

SuperNetwork load_checkpoint(const std::string& path, LoadedCheckpoint* info) {
  const CheckpointFile f = CheckpointFile::read(path);
  SupernetConfig c;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(f.meta);
    const auto& sn = meta.at("supernet");
    c.cells = sn.at("cells").get<std::size_t>();
    c.nodes = sn.at("nodes").get<std::size_t>();
    c.space = OperatorSpace::from_id(sn.at("space").get<std::string>());
    c.channels = sn.at("channels").get<std::size_t>();
    c.classes = sn.at("classes").get<std::size_t>();
    c.in_channels = sn.at("in_channels").get<std::size_t>();
    c.seed = sn.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint metadata is malformed: " + std::string(e.what()));
  }
  SuperNetwork net = init_supernet(c);
  ArchParams& arch = net.arch();
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    for (std::size_t j = 3; j < arch.nodes(); ++j) {
      const auto& a = f.get(alpha_name(k, j));
      const auto& m = f.get(alive_name(k, j));
      auto dst = arch.alpha(k, j).tensor.data();
      if (a.is_u8 || !m.is_u8 || a.f64.size() != dst.size() || m.u8.size() != dst.size()) {
        throw IoError("checkpoint architecture block " + std::to_string(k) + "/" + std::to_string(j) +
                      " has the wrong size or kind");
      }
      std::ranges::copy(a.f64, dst.begin());
      std::ranges::copy(m.u8, arch.alive_mut(k, j).begin());
    }
  }
  for (Parameter* p : net.theta()) {
    const auto& r = f.get("theta/" + p->id);
    if (r.is_u8 || r.f64.size() != p->tensor.numel()) throw IoError("checkpoint tensor '" + p->id + "' has wrong size");
    std::ranges::copy(r.f64, p->tensor.data().begin());
  }
  if (info) {
    info->config = c;
    info->run_config_text = meta.value("run_config", std::string{});
    const auto& ess = meta.at("ess");
    info->state.round = ess.value("round", std::size_t{0});
    info->state.epoch = ess.value("epoch", std::size_t{0});
    info->state.step = ess.value("step", std::size_t{0});
    info->state.delta_e = ess.value("delta_e", 0.0);
    info->state.phase = ess.value("phase", std::string{"warmup"}) == "warmup" ? Phase::Warmup : Phase::ArchOpt;
    info->state.lambda = f.get("ess/lambda").f64;
    info->state.prev_entropy = f.get("ess/prev_entropy").f64;
    info->state.initial_entropy = f.get("ess/initial_entropy").f64;
  }
  return net;
}

}  // namespace shrinknas
