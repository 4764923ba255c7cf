// include/eend/config.h

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

#ifndef EEND_CONFIG_H_
#define EEND_CONFIG_H_

// Experiment configuration as flat "section.key = value" text.
//
// Every field has a default, so an empty file is a valid configuration.
// Values are written back with full precision; parsing the snapshot of a
// configuration yields the same configuration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eend/losses.h"
#include "eend/model.h"
#include "eend/optimizer.h"
#include "eend/simulator.h"

namespace eend {

struct DataConfig {
  ConversationSpec spec;  // spec.seed is the dataset seed
  std::size_t train = 500;
  std::size_t val = 50;
  std::size_t test = 50;
  // Dataset root; empty means <out>/data.
  std::string dir;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  // Stop after the first epoch whose validation DER is below this (0 = off).
  double target_der = 0.0;
  // Stop after this many optimizer steps in total (0 = off).
  std::size_t max_steps = 0;
};

struct EvalConfig {
  double threshold = 0.5;
  std::size_t median = 11;
  double collar_s = 0.25;
};

struct ExperimentConfig {
  ModelConfig model;
  LossConfig loss;
  NoamSchedule schedule;
  AdamConfig adam;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;

  ExperimentConfig();
  // Throws ConfigError / SpecError.
  void validate() const;
};

// The keys understood by set_value, in snapshot order.
const std::vector<std::string>& config_keys();

// Throws ConfigError for an unknown key or a malformed value.
void set_value(ExperimentConfig& config, const std::string& key,
               const std::string& value);
std::string get_value(const ExperimentConfig& config, const std::string& key);

// Parses "key = value" lines; '#' starts a comment. Throws ConfigError
// naming the line for syntax errors, unknown or repeated keys.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// All keys, one per line, in config_keys() order.
std::string config_snapshot(const ExperimentConfig& config);

}  // namespace eend

#endif  // EEND_CONFIG_H_
