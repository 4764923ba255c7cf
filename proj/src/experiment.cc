// src/experiment.cc

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

#include "eend/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "eend/error.h"
#include "eend/losses.h"
#include "eend/ops.h"
#include "eend/optimizer.h"

namespace eend {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

constexpr const char* kMetricsHeader = "kind,epoch,step,lr,L_d,L_S,L_O,L_total,heads,val_der\n";

std::string metrics_row(const char* kind, std::size_t epoch, std::size_t step, double lr,
                        const std::array<double, 4>& losses, const std::string& heads,
                        const std::string& val_der) {
  std::string row = std::string(kind) + "," + std::to_string(epoch) + "," +
                    std::to_string(step) + "," + format_double(lr);
  for (double v : losses) row += "," + format_double(v);
  return row + "," + heads + "," + val_der + "\n";
}

// Epoch e visits the training set in this order.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 1000 + epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_input_dim(const ModelConfig& model, const std::vector<Conversation>& data,
                     const std::string& what) {
  for (const Conversation& c : data) {
    if (c.features.cols() != model.input_dim)
      throw ConfigError(what + " recording " + c.id + " has " +
                        std::to_string(c.features.cols()) + " features, model expects " +
                        std::to_string(model.input_dim));
    if (c.labels.cols() != model.speakers)
      throw ConfigError(what + " recording " + c.id + " has " +
                        std::to_string(c.labels.cols()) + " speakers, model expects " +
                        std::to_string(model.speakers));
  }
}

void dump_nonfinite(const std::filesystem::path& out, std::size_t step,
                    const std::vector<const Conversation*>& batch,
                    const std::vector<LossBreakdown>& losses, const ModelParams& params) {
  std::ostringstream os;
  os << "non-finite loss at optimizer step " << step + 1 << "\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    os << batch[i]->id << " L_d=" << format_double(losses[i].diarization)
       << " L_S=" << format_double(losses[i].svad) << " L_O=" << format_double(losses[i].osd)
       << " L_total=" << format_double(losses[i].total) << "\n";
  for (const auto& [name, t] : params.named()) {
    double norm = 0.0;
    for (double v : t->data()) norm += v * v;
    os << name << " norm=" << format_double(std::sqrt(norm)) << "\n";
  }
  write_text(out / "diagnostics" / ("nonfinite_step" + std::to_string(step + 1) + ".txt"),
             os.str());
}

void write_pgm(const std::filesystem::path& path, const Tensor& a) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "P5\n" << a.cols() << ' ' << a.rows() << "\n255\n";
  for (double v : a.data()) {
    const double level = std::round(255.0 * std::clamp(v, 0.0, 1.0));
    os.put(static_cast<char>(static_cast<unsigned char>(level)));
  }
  if (!os) throw IoError("failed writing " + path.string());
}

std::string matrix_csv(const Tensor& a) {
  std::string out;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j) out += ',';
      out += format_double(a(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::filesystem::path dataset_root(const ExperimentConfig& config,
                                   const std::filesystem::path& out) {
  return config.data.dir.empty() ? out / "data" : std::filesystem::path(config.data.dir);
}

ModelParams initial_params(const ExperimentConfig& config) {
  ModelConfig model = config.model;
  model.input_dim = config.data.spec.feature_dim();
  return init_params(model, mix_seed(config.train.seed, 1));
}

GenSummary cmd_gen(const ExperimentConfig& config, const std::filesystem::path& out) {
  config.data.spec.validate();
  GenSummary summary;
  summary.root = dataset_root(config, out);
  summary.entries = generate_dataset(config.data, summary.root);
  double total = 0.0;
  for (const ManifestEntry& e : summary.entries) total += e.overlap_ratio;
  if (!summary.entries.empty())
    summary.mean_overlap_ratio = total / static_cast<double>(summary.entries.size());
  return summary;
}

EvalSummary evaluate(ModelParams& params, const std::vector<Conversation>& data,
                     const EvalConfig& eval) {
  EvalSummary summary;
  for (const Conversation& conv : data) {
    Graph g;
    const ModelOutput out = forward(g, params, conv.features);
    const DiarizationHypothesis hyp = postprocess(out.posteriors.value(), eval.threshold,
                                                  eval.median, conv.frame_duration_s);
    RecordingScore score{conv.id, der(hyp, conv.labels, eval.collar_s)};
    summary.total += score.report;
    summary.recordings.push_back(std::move(score));
  }
  return summary;
}

std::string eval_csv(const EvalSummary& summary) {
  std::string out = "id,miss,fa,confusion,der\n";
  auto row = [&](const std::string& id, const DerReport& r, const std::string& der_text) {
    out += id + "," + std::to_string(r.miss) + "," + std::to_string(r.false_alarm) + "," +
           std::to_string(r.confusion) + "," + der_text + "\n";
  };
  for (const RecordingScore& s : summary.recordings)
    row(s.id, s.report, format_double(s.report.der()));
  row("aggregate", summary.total,
      summary.empty() ? "no-scored-frames" : format_double(summary.total.der()));
  return out;
}

TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& out,
                       const std::optional<std::filesystem::path>& resume) {
  config.validate();
  const std::filesystem::path root = dataset_root(config, out);
  const std::vector<Conversation> train = load_split_dir(root / "train");
  const std::vector<Conversation> val = load_split_dir(root / "val");
  if (train.empty()) throw ConfigError("no training recordings in " + (root / "train").string());

  Checkpoint state;
  if (resume) {
    state = load_checkpoint(*resume);
    ModelConfig expected = config.model;
    expected.input_dim = config.data.spec.feature_dim();
    if (!(state.params.config == expected))
      throw ConfigError("checkpoint " + resume->string() +
                        " was trained with a different model configuration");
  } else {
    state.params = initial_params(config);
  }
  ModelParams& params = state.params;
  check_input_dim(params.config, train, "training");
  check_input_dim(params.config, val, "validation");
  params.set_requires_grad(true);

  Adam adam(config.adam, params.all());
  if (resume && !state.adam_m.empty()) {
    adam.first_moments() = state.adam_m;
    adam.second_moments() = state.adam_v;
  }
  adam.set_steps(state.progress.step);
  TrainProgress& progress = state.progress;

  std::filesystem::create_directories(out / "checkpoints");
  write_text(out / "config.snapshot", config_snapshot(config));
  const std::filesystem::path metrics_path = out / "metrics.csv";
  std::ofstream metrics;
  if (resume && std::filesystem::exists(metrics_path)) {
    metrics.open(metrics_path, std::ios::binary | std::ios::app);
  } else {
    metrics.open(metrics_path, std::ios::binary | std::ios::trunc);
    metrics << kMetricsHeader;
  }
  if (!metrics) throw IoError("cannot write " + metrics_path.string());

  TrainSummary summary;
  summary.best_checkpoint = out / "checkpoints" / "best.ckpt";
  summary.last_checkpoint = out / "checkpoints" / "last.ckpt";
  auto save = [&](const std::filesystem::path& path) {
    state.adam_m = adam.first_moments();
    state.adam_v = adam.second_moments();
    save_checkpoint(path, state);
  };

  const std::size_t batch_size = config.train.batch_size;
  const std::size_t batches = (train.size() + batch_size - 1) / batch_size;
  bool stop = false;
  while (!stop && progress.epoch < config.train.epochs) {
    const std::vector<std::size_t> order = epoch_order(config.train.seed, progress.epoch, train.size());
    double lr = 0.0;
    while (progress.batch < batches) {
      if (config.train.max_steps && progress.step >= config.train.max_steps) {
        stop = true;
        break;
      }
      const std::size_t begin = progress.batch * batch_size;
      const std::size_t end = std::min(begin + batch_size, train.size());
      std::vector<const Conversation*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train[order[i]]);

      params.zero_grad();
      std::vector<LossBreakdown> losses;
      std::array<double, 4> mean{};
      const double weight = 1.0 / static_cast<double>(batch.size());
      for (const Conversation* conv : batch) {
        Graph g;
        const ModelOutput fwd = forward(g, params, conv->features);
        LossBreakdown b = total_loss(fwd, conv->labels, config.loss);
        if (std::isfinite(b.total)) g.backward(b.total_var, weight);
        b.total_var = Var();
        mean[0] += weight * b.diarization;
        mean[1] += weight * b.svad;
        mean[2] += weight * b.osd;
        mean[3] += weight * b.total;
        losses.push_back(std::move(b));
      }
      if (!std::all_of(mean.begin(), mean.end(), [](double v) { return std::isfinite(v); })) {
        dump_nonfinite(out, progress.step, batch, losses, params);
        metrics.flush();
        throw TrainingError("non-finite loss at step " + std::to_string(progress.step + 1) +
                            "; batch dumped under " + (out / "diagnostics").string());
      }
      lr = config.schedule.rate(progress.step + 1);
      adam.step(lr);
      ++progress.step;
      ++progress.batch;
      for (std::size_t i = 0; i < 4; ++i) progress.epoch_loss[i] += mean[i] * static_cast<double>(batch.size());
      progress.epoch_items += batch.size();
      metrics << metrics_row("step", progress.epoch + 1, progress.step, lr, mean,
                             describe_selection(losses.front()), "");
    }
    if (stop) break;

    // end of epoch: validate, log, checkpoint
    const EvalSummary v = evaluate(params, val, config.eval);
    const double val_der = v.total.der();
    std::array<double, 4> epoch_mean{};
    for (std::size_t i = 0; i < 4; ++i)
      epoch_mean[i] = progress.epoch_loss[i] / static_cast<double>(std::max<std::size_t>(progress.epoch_items, 1));
    ++progress.epoch;
    progress.batch = 0;
    progress.epoch_loss = {};
    progress.epoch_items = 0;
    progress.last_der = val_der;
    summary.val_der.push_back(val_der);
    metrics << metrics_row("epoch", progress.epoch, progress.step,
                           config.schedule.rate(std::max<std::size_t>(progress.step, 1)),
                           epoch_mean, "", format_double(val_der));
    metrics.flush();
    if (val_der < progress.best_der || !std::filesystem::exists(summary.best_checkpoint)) {
      progress.best_der = std::min(progress.best_der, val_der);
      save(summary.best_checkpoint);
    }
    save(summary.last_checkpoint);
    if (config.train.target_der > 0.0 && val_der < config.train.target_der) stop = true;
  }
  // a stop inside an epoch still leaves a resumable checkpoint
  save(summary.last_checkpoint);
  metrics.flush();
  if (!metrics) throw IoError("failed writing " + metrics_path.string());
  summary.epochs = progress.epoch;
  summary.steps = progress.step;
  summary.best_der = progress.best_der;
  summary.last_der = progress.last_der;
  return summary;
}

EvalSummary cmd_eval(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                     const std::filesystem::path& split_dir, const std::filesystem::path& out) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::vector<Conversation> data = load_split_dir(split_dir);
  check_input_dim(ckpt.params.config, data, "evaluation");
  if (config.eval.median % 2 == 0) throw ConfigError("eval.median must be odd");
  EvalSummary summary = evaluate(ckpt.params, data, config.eval);
  write_text(out / "eval.csv", eval_csv(summary));
  return summary;
}

AttentionSummary cmd_attention(const std::filesystem::path& checkpoint,
                               const Conversation& recording,
                               std::optional<std::size_t> block,
                               std::optional<std::size_t> head,
                               const std::filesystem::path& out) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  const ModelConfig& c = ckpt.params.config;
  if (block && (*block < 1 || *block > c.blocks))
    throw ConfigError("block " + std::to_string(*block) + " outside 1.." + std::to_string(c.blocks));
  if (head && *head >= c.heads)
    throw ConfigError("head " + std::to_string(*head) + " outside 0.." + std::to_string(c.heads - 1));
  check_input_dim(c, {recording}, "attention");

  Graph g;
  const ModelOutput fwd = forward(g, ckpt.params, recording.features);
  const AttentionTensor att = collect_attention(fwd);
  AttentionSummary summary;
  const std::filesystem::path dir = out / "attention";
  std::filesystem::create_directories(dir);
  std::ostringstream report;
  for (std::size_t p = 1; p <= c.blocks; ++p) {
    if (block && p != *block) continue;
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < c.heads; ++h) heads.push_back(att.at(p - 1, h));
    const HeadSelection ranking = select_heads(heads, 0, false, false);
    summary.blocks.push_back({p, ranking.order, ranking.traces});
    report << "block " << p << " traces:";
    for (std::size_t h : ranking.order) report << " h" << h << '=' << format_double(ranking.traces[h]);
    report << '\n';
    for (std::size_t h = 0; h < c.heads; ++h) {
      if (head && h != *head) continue;
      const std::string stem = recording.id + "_block" + std::to_string(p) + "_head" + std::to_string(h);
      write_text(dir / (stem + ".csv"), matrix_csv(heads[h]));
      write_pgm(dir / (stem + ".pgm"), heads[h]);
      summary.files.push_back(dir / (stem + ".csv"));
      summary.files.push_back(dir / (stem + ".pgm"));
    }
  }
  summary.report = report.str();
  return summary;
}

namespace {

std::vector<Tensor> block_heads(const ModelOutput& out, std::size_t block) {
  std::vector<Tensor> heads;
  for (const Var& a : out.attention.at(block - 1)) heads.push_back(a.value());
  return heads;
}

HeadSelection vad_selection(const std::vector<Tensor>& heads, std::size_t speakers,
                            const LossConfig& loss) {
  const bool same_block = loss.beta != 0.0 && loss.svad_block == loss.osd_block;
  return select_heads(heads, speakers, same_block, same_block, loss.selection, loss.shared,
                      loss.svad_block);
}

}  // namespace

HeadAgreement head_agreement(ModelParams& params, const std::vector<Conversation>& data,
                             const LossConfig& loss) {
  HeadAgreement result;
  for (const Conversation& conv : data) {
    Graph g;
    const ModelOutput out = forward(g, params, conv.features);
    const std::size_t speakers = conv.labels.cols();
    const PermutationResult pit = diarization_loss(out.posteriors, conv.labels);
    const std::vector<Tensor> heads = block_heads(out, loss.svad_block);
    const HeadSelection sel = vad_selection(heads, speakers, loss);
    std::vector<Tensor> masks;
    std::vector<Var> supervised;
    for (std::size_t s = 0; s < speakers; ++s) {
      masks.push_back(svad_mask(conv.labels, pit.best_perm, s));
      supervised.push_back(out.attention[loss.svad_block - 1][sel.svad_heads[s]]);
    }
    result.supervised_bce += svad_loss(masks, supervised).loss / static_cast<double>(speakers);
    double others = 0.0;
    std::size_t count = 0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const bool used = std::find(sel.svad_heads.begin(), sel.svad_heads.end(), h) !=
                            sel.svad_heads.end() ||
                        (sel.osd_head && *sel.osd_head == h);
      if (used) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const Tensor& m : masks) best = std::min(best, bce_mean_value(heads[h], m));
      others += best;
      ++count;
    }
    if (count == 0) throw ConfigError("block has no unsupervised heads to compare against");
    result.unsupervised_bce += others / static_cast<double>(count);
    ++result.recordings;
  }
  if (result.recordings) {
    result.supervised_bce /= static_cast<double>(result.recordings);
    result.unsupervised_bce /= static_cast<double>(result.recordings);
  }
  return result;
}

TraceShift selected_trace_shift(ModelParams& before, ModelParams& after,
                                const std::vector<Conversation>& data, const LossConfig& loss) {
  TraceShift shift;
  std::size_t count = 0;
  for (const Conversation& conv : data) {
    Graph g0, g1;
    const std::vector<Tensor> h0 = block_heads(forward(g0, before, conv.features), loss.svad_block);
    const std::vector<Tensor> h1 = block_heads(forward(g1, after, conv.features), loss.svad_block);
    const HeadSelection sel = vad_selection(h0, conv.labels.cols(), loss);
    for (std::size_t h : sel.svad_heads) {
      shift.before += trace(h0[h]);
      shift.after += trace(h1[h]);
      ++count;
    }
  }
  if (count) {
    shift.before /= static_cast<double>(count);
    shift.after /= static_cast<double>(count);
  }
  return shift;
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& config,
                                    const std::filesystem::path& out) {
  config.validate();
  const std::filesystem::path root = dataset_root(config, out);
  std::vector<AblationRow> rows;
  std::string csv = "policy,val_der,test_der,epochs\n";
  for (SelectionPolicy policy : {SelectionPolicy::kIdentityTrace, SelectionPolicy::kFixedFirst}) {
    ExperimentConfig run = config;
    run.loss.selection = policy;
    run.data.dir = root.string();
    const std::filesystem::path run_dir = out / to_string(policy);
    const TrainSummary trained = cmd_train(run, run_dir);
    Checkpoint best = load_checkpoint(trained.best_checkpoint);
    const std::vector<Conversation> test = load_split_dir(root / "test");
    const EvalSummary scored = evaluate(best.params, test, run.eval);
    write_text(run_dir / "eval.csv", eval_csv(scored));
    AblationRow row{to_string(policy), trained.best_der, scored.total.der(), trained.epochs};
    csv += row.policy + "," + format_double(row.val_der) + "," + format_double(row.test_der) +
           "," + std::to_string(row.epochs) + "\n";
    rows.push_back(row);
  }
  write_text(out / "ablation.csv", csv);
  return rows;
}

}  // namespace eend
