// src/config.cc

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

#include "eend/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "eend/error.h"

namespace eend {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return value;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

template <typename T>
Field size_field(T ExperimentConfig::*section, std::size_t T::*member) {
  return {[=](const ExperimentConfig& c) { return std::to_string(c.*section.*member); },
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*section.*member = parse_unsigned<std::size_t>(k, v);
          }};
}

template <typename T>
Field real_field(T ExperimentConfig::*section, double T::*member) {
  return {[=](const ExperimentConfig& c) { return format_double(c.*section.*member); },
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*section.*member = parse_real(k, v);
          }};
}

Field spec_size(std::size_t ConversationSpec::*member) {
  return {[=](const ExperimentConfig& c) { return std::to_string(c.data.spec.*member); },
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.data.spec.*member = parse_unsigned<std::size_t>(k, v);
          }};
}

Field spec_real(double ConversationSpec::*member) {
  return {[=](const ExperimentConfig& c) { return format_double(c.data.spec.*member); },
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.data.spec.*member = parse_real(k, v);
          }};
}

using FieldTable = std::vector<std::pair<std::string, Field>>;

const FieldTable& fields() {
  static const FieldTable table = [] {
    FieldTable t;
    t.emplace_back("model.blocks", size_field(&ExperimentConfig::model, &ModelConfig::blocks));
    t.emplace_back("model.heads", size_field(&ExperimentConfig::model, &ModelConfig::heads));
    t.emplace_back("model.dim", size_field(&ExperimentConfig::model, &ModelConfig::model_dim));
    t.emplace_back("model.ff_dim", size_field(&ExperimentConfig::model, &ModelConfig::ff_dim));
    t.emplace_back("model.speakers", size_field(&ExperimentConfig::model, &ModelConfig::speakers));
    t.emplace_back("loss.alpha", real_field(&ExperimentConfig::loss, &LossConfig::alpha));
    t.emplace_back("loss.beta", real_field(&ExperimentConfig::loss, &LossConfig::beta));
    t.emplace_back("loss.svad_block", size_field(&ExperimentConfig::loss, &LossConfig::svad_block));
    t.emplace_back("loss.osd_block", size_field(&ExperimentConfig::loss, &LossConfig::osd_block));
    t.emplace_back("loss.selection",
                   Field{[](const ExperimentConfig& c) { return to_string(c.loss.selection); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.loss.selection = parse_selection_policy(v);
                         }});
    t.emplace_back("loss.shared_block",
                   Field{[](const ExperimentConfig& c) { return to_string(c.loss.shared); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.loss.shared = parse_shared_block_policy(v);
                         }});
    t.emplace_back("loss.osd_k", real_field(&ExperimentConfig::loss, &LossConfig::osd_k));
    t.emplace_back("optim.factor", real_field(&ExperimentConfig::schedule, &NoamSchedule::factor));
    t.emplace_back("optim.warmup", size_field(&ExperimentConfig::schedule, &NoamSchedule::warmup));
    t.emplace_back("optim.beta1", real_field(&ExperimentConfig::adam, &AdamConfig::beta1));
    t.emplace_back("optim.beta2", real_field(&ExperimentConfig::adam, &AdamConfig::beta2));
    t.emplace_back("optim.epsilon", real_field(&ExperimentConfig::adam, &AdamConfig::epsilon));
    t.emplace_back("data.seed",
                   Field{[](const ExperimentConfig& c) { return std::to_string(c.data.spec.seed); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.data.spec.seed = parse_unsigned<std::uint64_t>(k, v);
                         }});
    t.emplace_back("data.train", size_field(&ExperimentConfig::data, &DataConfig::train));
    t.emplace_back("data.val", size_field(&ExperimentConfig::data, &DataConfig::val));
    t.emplace_back("data.test", size_field(&ExperimentConfig::data, &DataConfig::test));
    t.emplace_back("data.dir",
                   Field{[](const ExperimentConfig& c) { return c.data.dir; },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.data.dir = v;
                         }});
    t.emplace_back("data.speakers", spec_size(&ConversationSpec::num_speakers));
    t.emplace_back("data.frames_raw", spec_size(&ConversationSpec::num_frames_raw));
    t.emplace_back("data.overlap_ratio", spec_real(&ConversationSpec::target_overlap_ratio));
    t.emplace_back("data.silence_ratio", spec_real(&ConversationSpec::silence_ratio));
    t.emplace_back("data.base_dim", spec_size(&ConversationSpec::base_feature_dim));
    t.emplace_back("data.noise_sigma", spec_real(&ConversationSpec::noise_sigma));
    t.emplace_back("data.min_segment", spec_size(&ConversationSpec::min_segment));
    t.emplace_back("data.max_segment", spec_size(&ConversationSpec::max_segment));
    t.emplace_back("data.context", spec_size(&ConversationSpec::context));
    t.emplace_back("data.subsample", spec_size(&ConversationSpec::subsample));
    t.emplace_back("data.frame_shift", spec_real(&ConversationSpec::frame_shift_s));
    t.emplace_back("train.epochs", size_field(&ExperimentConfig::train, &TrainConfig::epochs));
    t.emplace_back("train.batch_size", size_field(&ExperimentConfig::train, &TrainConfig::batch_size));
    t.emplace_back("train.seed",
                   Field{[](const ExperimentConfig& c) { return std::to_string(c.train.seed); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.train.seed = parse_unsigned<std::uint64_t>(k, v);
                         }});
    t.emplace_back("train.target_der", real_field(&ExperimentConfig::train, &TrainConfig::target_der));
    t.emplace_back("train.max_steps", size_field(&ExperimentConfig::train, &TrainConfig::max_steps));
    t.emplace_back("eval.threshold", real_field(&ExperimentConfig::eval, &EvalConfig::threshold));
    t.emplace_back("eval.median", size_field(&ExperimentConfig::eval, &EvalConfig::median));
    t.emplace_back("eval.collar", real_field(&ExperimentConfig::eval, &EvalConfig::collar_s));
    return t;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return field;
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  // desk-scale defaults
  model.model_dim = 64;
  model.ff_dim = 256;
  schedule.model_dim = model.model_dim;
}

void ExperimentConfig::validate() const {
  ModelConfig m = model;
  m.input_dim = data.spec.feature_dim();
  m.validate();
  data.spec.validate();
  if (model.speakers != data.spec.num_speakers)
    throw ConfigError("model.speakers must equal data.speakers");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (schedule.warmup == 0) throw ConfigError("optim.warmup must be positive");
  if (!(schedule.factor > 0.0)) throw ConfigError("optim.factor must be positive");
  if (!(loss.alpha >= 0.0) || !(loss.beta >= 0.0))
    throw ConfigError("loss weights must be non-negative");
  if (loss.alpha != 0.0 && (loss.svad_block < 1 || loss.svad_block > model.blocks))
    throw ConfigError("loss.svad_block outside 1.." + std::to_string(model.blocks));
  if (loss.beta != 0.0 && (loss.osd_block < 1 || loss.osd_block > model.blocks))
    throw ConfigError("loss.osd_block outside 1.." + std::to_string(model.blocks));
  if (eval.median % 2 == 0) throw ConfigError("eval.median must be odd");
  if (!(eval.collar_s >= 0.0)) throw ConfigError("eval.collar must be >= 0");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : fields()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

void set_value(ExperimentConfig& config, const std::string& key,
               const std::string& value) {
  find_field(key).set(config, key, value);
  config.schedule.model_dim = config.model.model_dim;
}

std::string get_value(const ExperimentConfig& config, const std::string& key) {
  return find_field(key).get(config);
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
    try {
      set_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string config_snapshot(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace eend
