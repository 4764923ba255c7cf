// tools/eend.cc

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

// Command-line front end: gen, train, eval, attention, ablate.
//
// Exit status: 0 success, 1 bad input (arguments, configuration, files),
// 2 internal failure (e.g. a diverging run).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eend/config.h"
#include "eend/error.h"
#include "eend/experiment.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string checkpoint;
  std::string data;
  std::string recording;
  std::optional<std::size_t> block, head;
  std::vector<std::string> overrides;
};

eend::ExperimentConfig build_config(const Options& o, bool seed_is_data) {
  eend::ExperimentConfig config = o.config.empty() ? eend::ExperimentConfig{}
                                                   : eend::load_config(o.config);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw eend::ConfigError("--set expects key=value, got '" + kv + "'");
    eend::set_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) {
    if (seed_is_data)
      config.data.spec.seed = *o.seed;
    else
      config.train.seed = *o.seed;
  }
  return config;
}

int run_gen(const Options& o) {
  const eend::ExperimentConfig config = build_config(o, true);
  const eend::GenSummary s = eend::cmd_gen(config, o.out);
  std::printf("wrote %zu conversations to %s (mean overlap ratio %.4f)\n", s.entries.size(),
              s.root.string().c_str(), s.mean_overlap_ratio);
  return 0;
}

int run_train(const Options& o) {
  const eend::ExperimentConfig config = build_config(o, false);
  std::optional<fs::path> resume;
  if (!o.checkpoint.empty()) resume = o.checkpoint;
  const eend::TrainSummary s = eend::cmd_train(config, o.out, resume);
  std::printf("trained %zu epochs, %zu steps; best validation DER %.4f, last %.4f\n", s.epochs,
              s.steps, s.best_der, s.last_der);
  return 0;
}

int run_eval(const Options& o) {
  if (o.checkpoint.empty()) throw eend::ConfigError("eval needs --checkpoint");
  const eend::ExperimentConfig config = build_config(o, false);
  const fs::path split = o.data.empty() ? eend::dataset_root(config, o.out) / "test" : fs::path(o.data);
  const eend::EvalSummary s = eend::cmd_eval(o.checkpoint, config, split, o.out);
  if (s.empty()) {
    std::fprintf(stderr, "eend: no scored frames in %s\n", split.string().c_str());
    return 1;
  }
  std::printf("DER %.4f over %zu recordings (miss %zu, fa %zu, confusion %zu)\n", s.total.der(),
              s.recordings.size(), s.total.miss, s.total.false_alarm, s.total.confusion);
  return 0;
}

int run_attention(const Options& o) {
  if (o.checkpoint.empty()) throw eend::ConfigError("attention needs --checkpoint");
  if (o.recording.empty()) throw eend::ConfigError("attention needs --recording");
  fs::path file = o.recording;
  if (!fs::exists(file)) {
    const fs::path dir = o.data.empty() ? fs::path(o.out) / "data" / "test" : fs::path(o.data);
    file = dir / (o.recording + ".bin");
  }
  if (!fs::exists(file)) throw eend::IoError("recording " + o.recording + " not found");
  const eend::Conversation conv = eend::read_conversation(file);
  const eend::AttentionSummary s = eend::cmd_attention(o.checkpoint, conv, o.block, o.head, o.out);
  std::fputs(s.report.c_str(), stdout);
  return 0;
}

int run_ablate(const Options& o) {
  const eend::ExperimentConfig config = build_config(o, false);
  for (const eend::AblationRow& r : eend::cmd_ablate(config, o.out))
    std::printf("%s: validation DER %.4f, test DER %.4f\n", r.policy.c_str(), r.val_der,
                r.test_der);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-attentive end-to-end diarization with attention supervision"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Experiment configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed (dataset seed for gen, training seed otherwise)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--set", o.overrides, "Override a configuration key (key=value)");
  };
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "Train a model");
  add_common(train);
  train->add_option("--checkpoint", o.checkpoint, "Resume from this checkpoint");
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--data", o.data, "Split directory (default <dataset>/test)");
  CLI::App* attention = app.add_subcommand("attention", "Export attention maps");
  add_common(attention);
  attention->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required();
  attention->add_option("--recording", o.recording, "Recording id or file")->required();
  attention->add_option("--data", o.data, "Split directory holding the recording");
  attention->add_option("--block", o.block, "Encoder block, 1-based");
  attention->add_option("--head", o.head, "Head, 0-based");
  CLI::App* ablate = app.add_subcommand("ablate", "Compare head-selection policies");
  add_common(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return run_gen(o);
    if (*train) return run_train(o);
    if (*eval) return run_eval(o);
    if (*attention) return run_attention(o);
    if (*ablate) return run_ablate(o);
  } catch (const eend::TrainingError& e) {
    std::fprintf(stderr, "eend: %s\n", e.what());
    return 2;
  } catch (const eend::EvaluationError& e) {
    std::fprintf(stderr, "eend: %s\n", e.what());
    return 2;
  } catch (const eend::Error& e) {
    std::fprintf(stderr, "eend: %s\n", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "eend: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eend: internal error: %s\n", e.what());
    return 2;
  }
  return 1;
}
