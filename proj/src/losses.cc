// src/losses.cc

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

#include "eend/losses.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "eend/error.h"
#include "eend/ops.h"

namespace eend {

std::vector<std::vector<std::size_t>> permutations(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

void require_binary(const Tensor& labels) {
  for (double v : labels.data())
    if (v != 0.0 && v != 1.0)
      throw LabelError("labels must be 0 or 1, found " + std::to_string(v));
}

Tensor permute_columns(const Tensor& labels,
                       const std::vector<std::size_t>& perm) {
  const std::size_t frames = labels.rows(), speakers = labels.cols();
  if (perm.size() != speakers)
    throw DimensionError("permutation size does not match speaker count");
  Tensor out({frames, speakers});
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t s = 0; s < speakers; ++s) out(t, s) = labels(t, perm[s]);
  return out;
}

namespace {

void check_pit_shapes(const Tensor& posteriors, const Tensor& labels) {
  if (posteriors.shape() != labels.shape() || posteriors.rank() != 2)
    throw DimensionError("posteriors " + shape_string(posteriors.shape()) +
                         " and labels " + shape_string(labels.shape()) +
                         " differ");
  if (labels.cols() > 3)
    throw ConfigError("permutation search is limited to 3 speakers");
  require_binary(labels);
}

// Index into permutations() of the minimizing permutation plus its value.
std::pair<std::size_t, double> best_permutation(
    const Tensor& posteriors, const Tensor& labels,
    const std::vector<std::vector<std::size_t>>& perms) {
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < perms.size(); ++i) {
    const double loss = bce_mean_value(posteriors, permute_columns(labels, perms[i]));
    if (loss < best_loss) {
      best_loss = loss;
      best = i;
    }
  }
  return {best, best_loss};
}

}  // namespace

PermutationResult diarization_loss(const Tensor& posteriors,
                                   const Tensor& labels) {
  check_pit_shapes(posteriors, labels);
  const auto perms = permutations(labels.cols());
  const auto [best, loss] = best_permutation(posteriors, labels, perms);
  return {perms[best], loss, Var()};
}

PermutationResult diarization_loss(const Var& posteriors, const Tensor& labels) {
  check_pit_shapes(posteriors.value(), labels);
  const auto perms = permutations(labels.cols());
  const auto [best, loss] = best_permutation(posteriors.value(), labels, perms);
  PermutationResult result{perms[best], loss, Var()};
  result.loss_var = bce_mean(posteriors, permute_columns(labels, perms[best]));
  return result;
}

Tensor svad_mask(const Tensor& labels, const std::vector<std::size_t>& perm,
                 std::size_t speaker) {
  require_binary(labels);
  if (speaker >= perm.size() || perm[speaker] >= labels.cols())
    throw DimensionError("speaker index out of range");
  const std::size_t frames = labels.rows(), column = perm[speaker];
  Tensor mask({frames, frames});
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t j = 0; j < frames; ++j)
      mask(i, j) = labels(i, column) * labels(j, column);
  return mask;
}

SvadResult svad_loss(const std::vector<Tensor>& masks,
                     const std::vector<Var>& attention) {
  if (masks.size() != attention.size() || masks.empty())
    throw DimensionError("svad_loss needs one attention matrix per mask");
  const std::size_t n = masks.size();
  // pairwise costs, then the cheapest pairing
  std::vector<double> cost(n * n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t h = 0; h < n; ++h)
      cost[s * n + h] = bce_mean_value(attention[h].value(), masks[s]);
  std::vector<std::size_t> best;
  double best_total = std::numeric_limits<double>::infinity();
  for (const auto& perm : permutations(n)) {
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) total += cost[s * n + perm[s]];
    if (total < best_total) {
      best_total = total;
      best = perm;
    }
  }
  SvadResult result;
  result.assignment = best;
  Var acc;
  for (std::size_t s = 0; s < n; ++s) {
    const Var term = bce_mean(attention[best[s]], masks[s]);
    acc = acc.valid() ? add(acc, term) : term;
  }
  result.loss_var = acc;
  result.loss = acc.value()[0];
  return result;
}

Tensor osd_labels(const Tensor& labels, double k) {
  require_binary(labels);
  Tensor psi({labels.rows()});
  for (std::size_t t = 0; t < labels.rows(); ++t) {
    double active = 0.0;
    for (std::size_t s = 0; s < labels.cols(); ++s) active += labels(t, s);
    psi[t] = active >= 2.0 ? 1.0 : (active >= 1.0 ? k : 0.0);
  }
  return psi;
}

Tensor osd_mask(const Tensor& psi) {
  const std::size_t frames = psi.size();
  Tensor mask({frames, frames});
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t j = 0; j < frames; ++j) mask(i, j) = psi[i] * psi[j];
  return mask;
}

OsdResult osd_loss(const Tensor& psi, const Var& attention) {
  const Tensor& a = attention.value();
  if (a.rank() != 2 || a.rows() != psi.size() || a.cols() != psi.size())
    throw DimensionError("osd_loss: attention " + shape_string(a.shape()) +
                         " does not match label length " +
                         std::to_string(psi.size()));
  OsdResult result;
  result.loss_var = mse_mean(attention, osd_mask(psi));
  result.loss = result.loss_var.value()[0];
  return result;
}

double trace(const Tensor& m) {
  if (m.rank() != 2 || m.rows() != m.cols())
    throw DimensionError("trace of non-square " + shape_string(m.shape()));
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) total += m(i, i);
  return total;
}

std::string to_string(SelectionPolicy policy) {
  return policy == SelectionPolicy::kIdentityTrace ? "identity-trace" : "fixed-first";
}

std::string to_string(SharedBlockPolicy policy) {
  return policy == SharedBlockPolicy::kDisjoint ? "disjoint" : "shared-top";
}

SelectionPolicy parse_selection_policy(const std::string& name) {
  if (name == "identity-trace") return SelectionPolicy::kIdentityTrace;
  if (name == "fixed-first") return SelectionPolicy::kFixedFirst;
  throw ConfigError("unknown head selection policy '" + name + "'");
}

SharedBlockPolicy parse_shared_block_policy(const std::string& name) {
  if (name == "disjoint") return SharedBlockPolicy::kDisjoint;
  if (name == "shared-top") return SharedBlockPolicy::kSharedTop;
  throw ConfigError("unknown shared-block policy '" + name + "'");
}

std::vector<std::size_t> rank_heads_by_trace(const std::vector<Tensor>& heads) {
  std::vector<double> traces;
  for (const Tensor& h : heads) traces.push_back(trace(h));
  std::vector<std::size_t> order(heads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return traces[a] > traces[b];
  });
  return order;
}

HeadSelection select_heads(const std::vector<Tensor>& heads,
                           std::size_t need_svad, bool need_osd,
                           bool same_block, SelectionPolicy policy,
                           SharedBlockPolicy shared, std::size_t block) {
  const bool disjoint = same_block && need_svad > 0 && need_osd &&
                        shared == SharedBlockPolicy::kDisjoint;
  const std::size_t needed = disjoint ? need_svad + 1 : std::max<std::size_t>(need_svad, need_osd ? 1 : 0);
  if (heads.size() < needed)
    throw ConfigError("block has " + std::to_string(heads.size()) +
                      " heads, selection needs " + std::to_string(needed));
  HeadSelection sel;
  sel.block = block;
  for (const Tensor& h : heads) sel.traces.push_back(trace(h));
  sel.order = rank_heads_by_trace(heads);
  std::vector<std::size_t> pool = sel.order;
  if (policy == SelectionPolicy::kFixedFirst)
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  sel.svad_heads.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(need_svad));
  if (need_osd) sel.osd_head = disjoint ? pool[need_svad] : pool[0];
  return sel;
}

LossBreakdown total_loss(const ModelOutput& out, const Tensor& labels,
                         const LossConfig& config) {
  const std::size_t num_blocks = out.attention.size();
  const bool use_svad = config.alpha != 0.0;
  const bool use_osd = config.beta != 0.0;
  if (use_svad && (config.svad_block < 1 || config.svad_block > num_blocks))
    throw ConfigError("svad_block " + std::to_string(config.svad_block) +
                      " outside 1.." + std::to_string(num_blocks));
  if (use_osd && (config.osd_block < 1 || config.osd_block > num_blocks))
    throw ConfigError("osd_block " + std::to_string(config.osd_block) +
                      " outside 1.." + std::to_string(num_blocks));

  LossBreakdown result;
  PermutationResult pit = diarization_loss(out.posteriors, labels);
  result.diarization = pit.loss;
  result.perm = pit.best_perm;
  Var total = pit.loss_var;

  const std::size_t speakers = labels.cols();
  const bool same_block = use_svad && use_osd && config.svad_block == config.osd_block;
  auto block_values = [&](std::size_t block) {
    std::vector<Tensor> values;
    for (const Var& a : out.attention[block - 1]) values.push_back(a.value());
    return values;
  };

  if (use_svad) {
    HeadSelection sel = select_heads(block_values(config.svad_block), speakers,
                                     same_block, same_block, config.selection,
                                     config.shared, config.svad_block);
    std::vector<Tensor> masks;
    std::vector<Var> heads;
    for (std::size_t s = 0; s < speakers; ++s) {
      masks.push_back(svad_mask(labels, pit.best_perm, s));
      heads.push_back(out.attention[config.svad_block - 1][sel.svad_heads[s]]);
    }
    SvadResult svad = svad_loss(masks, heads);
    result.svad = svad.loss;
    result.svad_assignment = svad.assignment;
    total = add(total, scale(svad.loss_var, config.alpha));
    if (same_block) result.osd_selection = sel;
    result.svad_selection = std::move(sel);
  }
  if (use_osd) {
    if (!same_block)
      result.osd_selection = select_heads(block_values(config.osd_block), 0, true,
                                          false, config.selection, config.shared,
                                          config.osd_block);
    const Var head = out.attention[config.osd_block - 1][*result.osd_selection->osd_head];
    OsdResult osd = osd_loss(osd_labels(labels, config.osd_k), head);
    result.osd = osd.loss;
    total = add(total, scale(osd.loss_var, config.beta));
  }
  result.total_var = total;
  result.total = total.value()[0];
  return result;
}

std::string describe_selection(const LossBreakdown& b) {
  std::ostringstream os;
  if (b.svad_selection) {
    os << 'b' << b.svad_selection->block << ":svad";
    for (std::size_t h : b.svad_selection->svad_heads) os << "+h" << h;
  }
  if (b.osd_selection && b.osd_selection->osd_head) {
    if (b.svad_selection) os << ';';
    os << 'b' << b.osd_selection->block << ":osd+h" << *b.osd_selection->osd_head;
  }
  return os.str();
}

}  // namespace eend
