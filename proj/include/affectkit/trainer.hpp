// trainer/trainer.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTKIT_TRAINER_HPP
#define AFFECTKIT_TRAINER_HPP

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "affectkit/checkpoint.hpp"
#include "affectkit/data.hpp"
#include "affectkit/models.hpp"
#include "affectkit/optim.hpp"

namespace affectkit {

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr = 0.0005;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  LossWeights weights{};
};

inline void validate(const TrainConfig& c) {
  check_input(c.batch_size >= 2, "batch size must be at least 2 for CCC");
  check_input(c.lr >= 0.0, "negative learning rate");
  check_input(c.max_epochs >= 1, "need at least one epoch");
  validate(c.weights);
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_ccc_mean = 0.0;
};

inline std::string history_csv(std::span<const EpochStats> history) {
  std::string out = "epoch,train_loss,valid_ccc_mean\n";
  for (const auto& e : history)
    out += std::to_string(e.epoch) + "," + format_sig9(e.train_loss) + "," +
           format_sig9(e.valid_ccc_mean) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Dataset assembly.

struct TrainUtt {
  std::string id;
  EmotionTriple labels;
  FeatureSequence feats;
};

// Loads the feature files for one split.  Records flagged noise_aware take
// their feature file from the parallel corrupted-variant manifest instead
// (matched by id), mirroring a static Train+noise set.
inline std::vector<TrainUtt> load_utterances(
    const Manifest& manifest, Split split,
    const Manifest* corrupted_variant = nullptr) {
  std::map<std::string, const ManifestRecord*> corrupted;
  if (corrupted_variant != nullptr)
    for (const auto& r : corrupted_variant->records) corrupted[r.id] = &r;
  std::vector<TrainUtt> out;
  for (const auto& r : manifest.records) {
    if (r.split != split) continue;
    TrainUtt u;
    u.id = r.id;
    u.labels = r.labels;
    if (r.noise_aware && corrupted_variant != nullptr) {
      auto it = corrupted.find(r.id);
      if (it == corrupted.end())
        throw InvalidInput("no corrupted variant for noise-aware record " +
                           r.id);
      u.feats =
          read_feature_file(corrupted_variant->resolve(it->second->feature_path));
    } else {
      check_input(!r.feature_path.empty(),
                  "record " + r.id + " has no feature file");
      u.feats = read_feature_file(manifest.resolve(r.feature_path));
    }
    check_input(u.feats.frames >= 1, "record " + r.id + " has zero frames");
    out.push_back(std::move(u));
  }
  return out;
}

struct Batch {
  Tensor x;  // [b, max_frames, dim] zero padded
  std::vector<std::size_t> lengths;
  Tensor targets;  // [b, 3]
};

inline Batch make_batch(std::span<const TrainUtt> utts,
                        std::span<const std::size_t> indices) {
  check_input(!indices.empty(), "empty batch");
  const std::size_t dim = utts[indices[0]].feats.dim;
  std::size_t max_frames = 1;
  for (std::size_t idx : indices)
    max_frames = std::max(max_frames, utts[idx].feats.frames);
  Batch b;
  b.x = Tensor({indices.size(), max_frames, dim});
  b.targets = Tensor({indices.size(), kNumDims});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const TrainUtt& u = utts[indices[i]];
    check_input(u.feats.dim == dim, "inconsistent feature widths in batch");
    for (std::size_t t = 0; t < u.feats.frames; ++t)
      for (std::size_t j = 0; j < dim; ++j) b.x.at(i, t, j) = u.feats.at(t, j);
    b.lengths.push_back(u.feats.frames);
    b.targets.at(i, 0) = u.labels.act;
    b.targets.at(i, 1) = u.labels.val;
    b.targets.at(i, 2) = u.labels.dom;
  }
  return b;
}

inline std::vector<EmotionTriple> predict_all(const TcGruModel& model,
                                              std::span<const TrainUtt> utts,
                                              std::size_t batch_size = 32) {
  std::vector<EmotionTriple> preds;
  preds.reserve(utts.size());
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < utts.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, utts.size() - start);
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = start + i;
    const Batch b = make_batch(utts, indices);
    TcGruCache cache;
    const ModelOutput out = model.forward(b.x, b.lengths, cache);
    for (std::size_t i = 0; i < n; ++i)
      preds.push_back({out.pred.at(i, 0), out.pred.at(i, 1), out.pred.at(i, 2)});
  }
  return preds;
}

inline PerDimCcc evaluate_model(const TcGruModel& model,
                                std::span<const TrainUtt> utts,
                                std::size_t batch_size = 32) {
  check_input(utts.size() >= 2, "need at least 2 utterances to evaluate");
  const auto preds = predict_all(model, utts, batch_size);
  std::vector<EmotionTriple> labels(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) labels[i] = utts[i].labels;
  return evaluate_predictions(preds, labels);
}

// ---------------------------------------------------------------------------
// Epoch driver shared by the uni-modal, fusion and distillation loops:
// seeded shuffling, short-batch dropping, best-valid selection, patience.

struct TrainOutcome {
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_valid = -2.0;
};

// step(indices) runs one optimizer step and returns the batch loss;
// eval() returns the validation CCC mean; snap() captures the current
// parameters whenever the validation score improves.
template <typename StepFn, typename EvalFn, typename SnapFn>
TrainOutcome run_epochs(std::size_t n_train, const TrainConfig& cfg,
                        StepFn&& step, EvalFn&& eval, SnapFn&& snap) {
  validate(cfg);
  check_input(n_train >= 2, "training split too small");
  Rng shuffle_rng(derive_seed(cfg.seed, 0x7261696e));
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  TrainOutcome outcome;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, n_train - start);
      if (n < 2) break;  // CCC undefined on a singleton remainder
      loss_sum += step(std::span<const std::size_t>(order.data() + start, n));
      ++n_batches;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
    stats.valid_ccc_mean = eval();
    outcome.history.push_back(stats);
    if (stats.valid_ccc_mean > outcome.best_valid) {
      outcome.best_valid = stats.valid_ccc_mean;
      outcome.best_epoch = epoch;
      since_best = 0;
      snap();
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Uni-modal training.

struct TrainResult {
  TcGruModel model;  // best-validation checkpoint
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  PerDimCcc best_valid;
};

inline TrainResult train_tcgru(const TcGruConfig& model_cfg,
                               std::span<const TrainUtt> train,
                               std::span<const TrainUtt> valid,
                               const TrainConfig& cfg) {
  check_input(!train.empty() && valid.size() >= 2,
              "empty training or undersized validation split");
  check_input(train[0].feats.dim == model_cfg.input_dim,
              "training feature width does not match the model");
  TcGruModel model(model_cfg, cfg.seed);
  auto params = model.params();
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  Adam opt(params, acfg);

  std::vector<Tensor> best = snapshot_params(params);
  auto step = [&](std::span<const std::size_t> indices) {
    const Batch b = make_batch(train, indices);
    opt.zero_grad();
    TcGruCache cache;
    const ModelOutput out = model.forward(b.x, b.lengths, cache);
    const CccLossResult r = ccc_loss_grad(out.pred, b.targets, cfg.weights);
    model.backward(r.grad, Tensor(), cache);
    opt.step();
    return r.loss;
  };
  auto eval = [&]() { return evaluate_model(model, valid, cfg.batch_size).mean(); };
  auto snap = [&]() { best = snapshot_params(params); };

  const TrainOutcome outcome = run_epochs(train.size(), cfg, step, eval, snap);
  restore_params(params, best);
  TrainResult result;
  result.model = std::move(model);
  result.history = outcome.history;
  result.best_epoch = outcome.best_epoch;
  result.best_valid = evaluate_model(result.model, valid, cfg.batch_size);
  return result;
}

// ---------------------------------------------------------------------------
// Fusion training: the acoustic trunk and head train jointly while the
// pre-trained lexical branches stay frozen.

struct FusionUtt {
  std::string id;
  EmotionTriple labels;
  FeatureSequence acoustic;
  std::vector<FeatureSequence> lexical;  // one per branch
};

inline std::vector<FusionUtt> zip_fusion_utterances(
    const Manifest& acoustic, std::span<const Manifest> lexical_manifests,
    Split split, const Manifest* corrupted_variant = nullptr) {
  std::vector<FusionUtt> out;
  std::vector<std::map<std::string, const ManifestRecord*>> lex_by_id(
      lexical_manifests.size());
  for (std::size_t li = 0; li < lexical_manifests.size(); ++li)
    for (const auto& r : lexical_manifests[li].records)
      lex_by_id[li][r.id] = &r;
  std::map<std::string, const ManifestRecord*> corrupted;
  if (corrupted_variant != nullptr)
    for (const auto& r : corrupted_variant->records) corrupted[r.id] = &r;
  for (const auto& r : acoustic.records) {
    if (r.split != split) continue;
    FusionUtt u;
    u.id = r.id;
    u.labels = r.labels;
    if (r.noise_aware && corrupted_variant != nullptr) {
      auto it = corrupted.find(r.id);
      if (it == corrupted.end())
        throw InvalidInput("no corrupted variant for noise-aware record " + r.id);
      u.acoustic =
          read_feature_file(corrupted_variant->resolve(it->second->feature_path));
    } else {
      u.acoustic = read_feature_file(acoustic.resolve(r.feature_path));
    }
    for (std::size_t li = 0; li < lexical_manifests.size(); ++li) {
      auto it = lex_by_id[li].find(r.id);
      if (it == lex_by_id[li].end())
        throw InvalidInput("lexical manifest " + std::to_string(li) +
                           " is missing id " + r.id);
      u.lexical.push_back(read_feature_file(
          lexical_manifests[li].resolve(it->second->feature_path)));
    }
    out.push_back(std::move(u));
  }
  return out;
}

struct FusionBatch {
  Tensor acoustic;
  std::vector<std::size_t> lengths;
  std::vector<Tensor> lexical;
  std::vector<std::vector<std::size_t>> lexical_lengths;
  Tensor targets;
};

inline FusionBatch make_fusion_batch(std::span<const FusionUtt> utts,
                                     std::span<const std::size_t> indices) {
  check_input(!indices.empty(), "empty batch");
  const std::size_t n_lex = utts[indices[0]].lexical.size();
  FusionBatch b;
  std::size_t max_frames = 1;
  for (std::size_t idx : indices)
    max_frames = std::max(max_frames, utts[idx].acoustic.frames);
  const std::size_t adim = utts[indices[0]].acoustic.dim;
  b.acoustic = Tensor({indices.size(), max_frames, adim});
  b.targets = Tensor({indices.size(), kNumDims});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const FusionUtt& u = utts[indices[i]];
    for (std::size_t t = 0; t < u.acoustic.frames; ++t)
      for (std::size_t j = 0; j < adim; ++j)
        b.acoustic.at(i, t, j) = u.acoustic.at(t, j);
    b.lengths.push_back(u.acoustic.frames);
    b.targets.at(i, 0) = u.labels.act;
    b.targets.at(i, 1) = u.labels.val;
    b.targets.at(i, 2) = u.labels.dom;
  }
  for (std::size_t li = 0; li < n_lex; ++li) {
    std::size_t max_f = 1, dim = utts[indices[0]].lexical[li].dim;
    for (std::size_t idx : indices)
      max_f = std::max(max_f, utts[idx].lexical[li].frames);
    Tensor lx({indices.size(), max_f, dim});
    std::vector<std::size_t> lens;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const FeatureSequence& f = utts[indices[i]].lexical[li];
      for (std::size_t t = 0; t < f.frames; ++t)
        for (std::size_t j = 0; j < dim; ++j) lx.at(i, t, j) = f.at(t, j);
      lens.push_back(f.frames);
    }
    b.lexical.push_back(std::move(lx));
    b.lexical_lengths.push_back(std::move(lens));
  }
  return b;
}

inline std::vector<EmotionTriple> predict_all(const FusionModel& model,
                                              std::span<const FusionUtt> utts,
                                              std::size_t batch_size = 32) {
  std::vector<EmotionTriple> preds;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < utts.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, utts.size() - start);
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = start + i;
    const FusionBatch b = make_fusion_batch(utts, indices);
    FusionCache cache;
    const ModelOutput out =
        model.forward(b.acoustic, b.lengths, b.lexical, b.lexical_lengths, cache);
    for (std::size_t i = 0; i < n; ++i)
      preds.push_back({out.pred.at(i, 0), out.pred.at(i, 1), out.pred.at(i, 2)});
  }
  return preds;
}

inline PerDimCcc evaluate_model(const FusionModel& model,
                                std::span<const FusionUtt> utts,
                                std::size_t batch_size = 32) {
  check_input(utts.size() >= 2, "need at least 2 utterances to evaluate");
  const auto preds = predict_all(model, utts, batch_size);
  std::vector<EmotionTriple> labels(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) labels[i] = utts[i].labels;
  return evaluate_predictions(preds, labels);
}

struct FusionTrainResult {
  FusionModel model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  PerDimCcc best_valid;
};

inline FusionTrainResult train_fusion(const FusionConfig& model_cfg,
                                      std::vector<TcGruModel> lexical_branches,
                                      std::span<const FusionUtt> train,
                                      std::span<const FusionUtt> valid,
                                      const TrainConfig& cfg) {
  check_input(!train.empty() && valid.size() >= 2,
              "empty training or undersized validation split");
  FusionModel model(model_cfg, std::move(lexical_branches), cfg.seed);
  if (!model.frozen())
    throw ContractViolation("lexical branches must be frozen for fusion training");
  auto params = model.trainable_params();
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  Adam opt(params, acfg);

  std::vector<Tensor> best = snapshot_params(params);
  auto step = [&](std::span<const std::size_t> indices) {
    const FusionBatch b = make_fusion_batch(train, indices);
    opt.zero_grad();
    FusionCache cache;
    const ModelOutput out =
        model.forward(b.acoustic, b.lengths, b.lexical, b.lexical_lengths, cache);
    const CccLossResult r = ccc_loss_grad(out.pred, b.targets, cfg.weights);
    model.backward(r.grad, Tensor(), cache);
    opt.step();
    return r.loss;
  };
  auto eval = [&]() { return evaluate_model(model, valid, cfg.batch_size).mean(); };
  auto snap = [&]() { best = snapshot_params(params); };

  const TrainOutcome outcome = run_epochs(train.size(), cfg, step, eval, snap);
  restore_params(params, best);
  FusionTrainResult result;
  result.model = std::move(model);
  result.history = outcome.history;
  result.best_epoch = outcome.best_epoch;
  result.best_valid = evaluate_model(result.model, valid, cfg.batch_size);
  return result;
}

// ---------------------------------------------------------------------------
// Condition matrix: CCC per system x evaluation condition, mirroring the
// noisy-evaluation table layout.

struct ConditionRow {
  std::string system;
  std::string condition;
  PerDimCcc ccc;
};

struct NamedDataset {
  std::string name;
  std::vector<TrainUtt> utts;
};

inline std::vector<ConditionRow> run_condition_matrix(
    const std::vector<std::pair<std::string, const TcGruModel*>>& systems,
    std::span<const NamedDataset> conditions, std::size_t batch_size = 32) {
  check_input(!systems.empty(), "no systems to evaluate");
  for (const auto& c : conditions)
    if (c.utts.size() < 2)
      throw InvalidInput("condition set '" + c.name + "' is missing or undersized");
  std::vector<ConditionRow> rows;
  for (const auto& [name, model] : systems) {
    for (const auto& c : conditions) {
      ConditionRow row;
      row.system = name;
      row.condition = c.name;
      row.ccc = evaluate_model(*model, c.utts, batch_size);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string condition_matrix_csv(std::span<const ConditionRow> rows) {
  std::string out = "system,condition,act_ccc,val_ccc,dom_ccc\n";
  for (const auto& r : rows)
    out += r.system + "," + r.condition + "," + format_fixed6(r.ccc.act) + "," +
           format_fixed6(r.ccc.val) + "," + format_fixed6(r.ccc.dom) + "\n";
  return out;
}

inline std::string eval_report_csv(
    std::span<const std::pair<std::string, std::pair<std::string, PerDimCcc>>> rows) {
  std::string out = "system,split,act_ccc,val_ccc,dom_ccc\n";
  for (const auto& [system, rest] : rows)
    out += system + "," + rest.first + "," + format_fixed6(rest.second.act) +
           "," + format_fixed6(rest.second.val) + "," +
           format_fixed6(rest.second.dom) + "\n";
  return out;
}

}  // namespace affectkit

#endif  // AFFECTKIT_TRAINER_HPP
