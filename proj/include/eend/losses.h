// include/eend/losses.h

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

#ifndef EEND_LOSSES_H_
#define EEND_LOSSES_H_

// Training objectives: the permutation-invariant diarization BCE, the
// speaker-wise VAD and overlap-detection auxiliary losses on attention
// weights, and the trace-based choice of which heads they supervise.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eend/graph.h"
#include "eend/model.h"
#include "eend/tensor.h"

namespace eend {

// Weight of a single-speaker frame in the overlap label sequence; chosen so
// that a single/single entry of the overlap mask is exactly 0.5.
inline const double kOsdSingleWeight = std::sqrt(0.5);

// Speaker permutations of 0..n-1 in lexicographic order.
std::vector<std::vector<std::size_t>> permutations(std::size_t n);

// Throws LabelError unless every entry is exactly 0 or 1.
void require_binary(const Tensor& labels);

// Column s of the result is column perm[s] of labels.
Tensor permute_columns(const Tensor& labels, const std::vector<std::size_t>& perm);

struct PermutationResult {
  // Output s is scored against label column best_perm[s].
  std::vector<std::size_t> best_perm;
  double loss = 0.0;
  Var loss_var;  // only the minimizing branch is on the tape
};

// Mean BCE under the best speaker permutation; ties go to the first
// permutation in lexicographic order.
PermutationResult diarization_loss(const Var& posteriors, const Tensor& labels);
// Value-only form over plain tensors.
PermutationResult diarization_loss(const Tensor& posteriors, const Tensor& labels);

// M = y y^T for column perm[speaker] of labels.
Tensor svad_mask(const Tensor& labels, const std::vector<std::size_t>& perm,
                 std::size_t speaker);

struct SvadResult {
  double loss = 0.0;
  // mask s is paired with attention[assignment[s]]
  std::vector<std::size_t> assignment;
  Var loss_var;
};

// Sum over masks of the mean BCE between mask and its paired attention
// matrix, minimized over all mask-to-head pairings.
SvadResult svad_loss(const std::vector<Tensor>& masks,
                     const std::vector<Var>& attention);

// psi_t = 0 (silence), k (one speaker), 1 (two or more).
Tensor osd_labels(const Tensor& labels, double k = kOsdSingleWeight);
Tensor osd_mask(const Tensor& psi);

struct OsdResult {
  double loss = 0.0;
  Var loss_var;
};
// Mean squared error between psi psi^T and the attention matrix.
OsdResult osd_loss(const Tensor& psi, const Var& attention);

double trace(const Tensor& square_matrix);

enum class SelectionPolicy { kIdentityTrace, kFixedFirst };
// How the overlap head is chosen when it shares a block with the VAD heads.
enum class SharedBlockPolicy { kDisjoint, kSharedTop };

std::string to_string(SelectionPolicy policy);
std::string to_string(SharedBlockPolicy policy);
SelectionPolicy parse_selection_policy(const std::string& name);
SharedBlockPolicy parse_shared_block_policy(const std::string& name);

struct HeadSelection {
  std::size_t block = 0;           // 1-based
  std::vector<std::size_t> order;  // heads by descending trace
  std::vector<double> traces;      // per head, in head order
  std::vector<std::size_t> svad_heads;
  std::optional<std::size_t> osd_head;
};

// Heads sorted by descending trace, ties to the lower head index.
std::vector<std::size_t> rank_heads_by_trace(const std::vector<Tensor>& heads);

// need_svad heads for the VAD loss and optionally one for the overlap loss.
// `same_block` says both losses supervise this block. Throws ConfigError
// when the block has too few heads.
HeadSelection select_heads(const std::vector<Tensor>& heads,
                           std::size_t need_svad, bool need_osd,
                           bool same_block,
                           SelectionPolicy policy = SelectionPolicy::kIdentityTrace,
                           SharedBlockPolicy shared = SharedBlockPolicy::kDisjoint,
                           std::size_t block = 0);

struct LossConfig {
  double alpha = 1.0;          // VAD loss weight
  double beta = 1.0;           // overlap loss weight
  std::size_t svad_block = 4;  // 1-based
  std::size_t osd_block = 1;   // 1-based
  SelectionPolicy selection = SelectionPolicy::kIdentityTrace;
  SharedBlockPolicy shared = SharedBlockPolicy::kDisjoint;
  double osd_k = kOsdSingleWeight;
};

struct LossBreakdown {
  double diarization = 0.0;
  double svad = 0.0;
  double osd = 0.0;
  double total = 0.0;
  std::vector<std::size_t> perm;
  std::optional<HeadSelection> svad_selection;
  std::optional<HeadSelection> osd_selection;
  std::vector<std::size_t> svad_assignment;
  Var total_var;
};

// L_d + alpha * L_S + beta * L_O. An auxiliary term with zero weight is left
// off the tape entirely. Throws ConfigError for block indices outside 1..P.
LossBreakdown total_loss(const ModelOutput& out, const Tensor& labels,
                         const LossConfig& config);

// "b2:h1+h3;b1:h0" style summary of the selected heads (1-based blocks,
// 0-based heads); empty when no auxiliary loss is active.
std::string describe_selection(const LossBreakdown& breakdown);

}  // namespace eend

#endif  // EEND_LOSSES_H_
