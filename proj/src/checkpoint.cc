// src/checkpoint.cc

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "eend/checkpoint.h"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "eend/error.h"
#include "eend/tensor_io.h"

namespace eend {
namespace {

constexpr const char* kMagic = "eend-checkpoint 1";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put_name(std::ostream& os, const std::string& name) {
  const auto n = static_cast<std::uint32_t>(name.size());
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(n >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 4);
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
}

std::string get_name(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("truncated checkpoint");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  if (n > 4096) throw IoError("checkpoint tensor name too long");
  std::string name(n, '\0');
  if (!is.read(name.data(), n)) throw IoError("truncated checkpoint");
  return name;
}

std::size_t to_size(const std::map<std::string, std::string>& header,
                    const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw IoError("checkpoint header lacks " + key);
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw IoError("checkpoint header: bad value for " + key);
  }
}

double to_real(const std::map<std::string, std::string>& header, const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw IoError("checkpoint header lacks " + key);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw IoError("checkpoint header: bad value for " + key);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const ModelConfig& c = ckpt.params.config;
  const auto named = ckpt.params.named();
  const bool with_adam = !ckpt.adam_m.empty();
  if (with_adam && (ckpt.adam_m.size() != named.size() || ckpt.adam_v.size() != named.size()))
    throw DimensionError("optimizer state does not match parameter count");

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // write to a sibling and rename, so a crash never leaves a torn checkpoint
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << kMagic << '\n';
    os << "model.blocks = " << c.blocks << '\n'
       << "model.heads = " << c.heads << '\n'
       << "model.dim = " << c.model_dim << '\n'
       << "model.ff_dim = " << c.ff_dim << '\n'
       << "model.input_dim = " << c.input_dim << '\n'
       << "model.speakers = " << c.speakers << '\n';
    const TrainProgress& p = ckpt.progress;
    os << "state.step = " << p.step << '\n'
       << "state.epoch = " << p.epoch << '\n'
       << "state.batch = " << p.batch << '\n'
       << "state.best_der = " << format_double(p.best_der) << '\n'
       << "state.last_der = " << format_double(p.last_der) << '\n'
       << "state.epoch_items = " << p.epoch_items << '\n';
    for (std::size_t i = 0; i < p.epoch_loss.size(); ++i)
      os << "state.epoch_loss" << i << " = " << format_double(p.epoch_loss[i]) << '\n';
    os << "tensors = " << named.size() * (with_adam ? 3 : 1) << '\n'
       << "end\n";
    for (const auto& [name, tensor] : named) {
      put_name(os, name);
      write_tensor(os, *tensor);
    }
    if (with_adam) {
      for (std::size_t i = 0; i < named.size(); ++i) {
        put_name(os, "adam.m." + named[i].first);
        write_tensor(os, ckpt.adam_m[i]);
      }
      for (std::size_t i = 0; i < named.size(); ++i) {
        put_name(os, "adam.v." + named[i].first);
        write_tensor(os, ckpt.adam_v[i]);
      }
    }
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMagic)
    throw IoError(path.string() + ": not a checkpoint");
  std::map<std::string, std::string> header;
  bool closed = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      closed = true;
      break;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw IoError(path.string() + ": bad header line '" + line + "'");
    header[line.substr(0, eq)] = line.substr(eq + 3);
  }
  if (!closed) throw IoError(path.string() + ": unterminated header");

  ModelConfig c;
  c.blocks = to_size(header, "model.blocks");
  c.heads = to_size(header, "model.heads");
  c.model_dim = to_size(header, "model.dim");
  c.ff_dim = to_size(header, "model.ff_dim");
  c.input_dim = to_size(header, "model.input_dim");
  c.speakers = to_size(header, "model.speakers");
  c.validate();

  Checkpoint ckpt;
  // init_params only provides correctly shaped storage; every value is overwritten
  ckpt.params = init_params(c, 0);
  ckpt.progress.step = to_size(header, "state.step");
  ckpt.progress.epoch = to_size(header, "state.epoch");
  ckpt.progress.batch = to_size(header, "state.batch");
  ckpt.progress.best_der = to_real(header, "state.best_der");
  ckpt.progress.last_der = to_real(header, "state.last_der");
  ckpt.progress.epoch_items = to_size(header, "state.epoch_items");
  for (std::size_t i = 0; i < ckpt.progress.epoch_loss.size(); ++i)
    ckpt.progress.epoch_loss[i] = to_real(header, "state.epoch_loss" + std::to_string(i));
  const std::size_t count = to_size(header, "tensors");

  auto named = ckpt.params.named();
  if (count != named.size() && count != 3 * named.size())
    throw IoError(path.string() + ": unexpected tensor count " + std::to_string(count));
  auto read_into = [&](const std::string& expected, Tensor& dst) {
    const std::string name = get_name(is);
    if (name != expected)
      throw IoError(path.string() + ": expected tensor " + expected + ", found " + name);
    Tensor t = read_tensor(is);
    if (t.shape() != dst.shape())
      throw ConfigError(path.string() + ": tensor " + name + " has shape " +
                        shape_string(t.shape()) + ", model expects " +
                        shape_string(dst.shape()));
    dst = std::move(t);
  };
  for (auto& [name, tensor] : named) read_into(name, *tensor);
  if (count == 3 * named.size()) {
    for (auto& [name, tensor] : named) {
      ckpt.adam_m.emplace_back(tensor->shape());
      read_into("adam.m." + name, ckpt.adam_m.back());
    }
    for (auto& [name, tensor] : named) {
      ckpt.adam_v.emplace_back(tensor->shape());
      read_into("adam.v." + name, ckpt.adam_v.back());
    }
  }
  return ckpt;
}

}  // namespace eend
