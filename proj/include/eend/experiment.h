// include/eend/experiment.h

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

#ifndef EEND_EXPERIMENT_H_
#define EEND_EXPERIMENT_H_

// The command implementations behind the eend tool. Each writes its
// artifacts below an output directory and returns a summary for callers
// that drive experiments programmatically.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eend/checkpoint.h"
#include "eend/config.h"
#include "eend/dataset.h"
#include "eend/error.h"
#include "eend/metrics.h"
#include "eend/model.h"

namespace eend {

// Raised for runs that cannot complete for reasons outside the caller's
// inputs, e.g. a diverging loss. Maps to exit status 2 in the tool.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Dataset root for a run: data.dir if set, else <out>/data.
std::filesystem::path dataset_root(const ExperimentConfig& config,
                                   const std::filesystem::path& out);

// Parameters a run with this configuration starts from.
ModelParams initial_params(const ExperimentConfig& config);

struct GenSummary {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
  double mean_overlap_ratio = 0.0;  // over all files, 0 if there are none
};
GenSummary cmd_gen(const ExperimentConfig& config, const std::filesystem::path& out);

struct RecordingScore {
  std::string id;
  DerReport report;
};
struct EvalSummary {
  std::vector<RecordingScore> recordings;
  DerReport total;
  bool empty() const { return total.scored_frames == 0; }
};

// Forward pass, postprocess and scoring of every conversation.
EvalSummary evaluate(ModelParams& params, const std::vector<Conversation>& data,
                     const EvalConfig& eval);
// "id,miss,fa,confusion,der" rows plus a final aggregate row. With no scored
// frames the aggregate's der column reads "no-scored-frames".
std::string eval_csv(const EvalSummary& summary);

struct TrainSummary {
  std::size_t epochs = 0;  // epochs completed
  std::size_t steps = 0;
  double best_der = 0.0;
  double last_der = 0.0;
  std::vector<double> val_der;  // per epoch completed in this invocation
  std::filesystem::path best_checkpoint, last_checkpoint;
};

// Trains on <root>/train, validates on <root>/val after each epoch. Writes
// config.snapshot, metrics.csv and checkpoints/{best,last}.ckpt below out.
// With `resume`, continues from that checkpoint's parameters, optimizer
// state and position and appends to metrics.csv.
TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& out,
                       const std::optional<std::filesystem::path>& resume = std::nullopt);

// Scores a checkpoint on a split directory; writes <out>/eval.csv.
EvalSummary cmd_eval(const std::filesystem::path& checkpoint,
                     const ExperimentConfig& config,
                     const std::filesystem::path& split_dir,
                     const std::filesystem::path& out);

struct HeadTraces {
  std::size_t block = 0;           // 1-based
  std::vector<std::size_t> order;  // descending trace
  std::vector<double> traces;      // in head order
};
struct AttentionSummary {
  std::vector<std::filesystem::path> files;
  std::vector<HeadTraces> blocks;
  std::string report;  // the trace listing printed by the tool
};

// Exports attention maps of one recording as CSV and binary PGM under
// <out>/attention. block is 1-based and head 0-based; either may be left
// out to export all. Throws ConfigError when out of range.
AttentionSummary cmd_attention(const std::filesystem::path& checkpoint,
                               const Conversation& recording,
                               std::optional<std::size_t> block,
                               std::optional<std::size_t> head,
                               const std::filesystem::path& out);

// How closely the VAD-supervised heads of the loss's VAD block follow the
// speaker masks on a set of recordings. Heads are chosen per recording
// exactly as during training. The paired heads are scored under the best
// mask pairing; each remaining head of the block is scored against the mask
// it matches best.
struct HeadAgreement {
  double supervised_bce = 0.0;    // mean over recordings
  double unsupervised_bce = 0.0;  // mean over recordings
  std::size_t recordings = 0;
};
HeadAgreement head_agreement(ModelParams& params, const std::vector<Conversation>& data,
                             const LossConfig& loss);

// Mean trace of the heads that `before` selects for VAD supervision, measured
// in `before` and in `after` (same architecture, e.g. initial and trained).
struct TraceShift {
  double before = 0.0;
  double after = 0.0;
};
TraceShift selected_trace_shift(ModelParams& before, ModelParams& after,
                                const std::vector<Conversation>& data, const LossConfig& loss);

struct AblationRow {
  std::string policy;
  double val_der = 0.0;
  double test_der = 0.0;
  std::size_t epochs = 0;
};
// Trains once per head-selection policy into <out>/<policy> and writes
// <out>/ablation.csv comparing the best checkpoints.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& config,
                                    const std::filesystem::path& out);

}  // namespace eend

#endif  // EEND_EXPERIMENT_H_
