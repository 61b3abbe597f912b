// models/models.hpp

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

#ifndef AFFECTKIT_MODELS_HPP
#define AFFECTKIT_MODELS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affectkit/feature.hpp"
#include "affectkit/layers.hpp"
#include "affectkit/metrics.hpp"

namespace affectkit {

struct TcGruConfig {
  std::size_t input_dim = 43;   // MFBF0; 1024/768/2048 for ingested embeddings
  std::size_t tc_channels = 64;
  std::size_t tc_kernel = 5;
  std::size_t gru_hidden = 128;
  std::size_t gru_layers = 2;
  std::size_t embed_dim = 128;
  std::size_t output_dim = 3;
};

inline void validate(const TcGruConfig& c) {
  check_input(c.input_dim >= 1 && c.tc_channels >= 1 && c.gru_hidden >= 1 &&
                  c.gru_layers >= 1 && c.embed_dim >= 1 && c.output_dim >= 1,
              "all model dimensions must be at least 1");
  check_input(c.tc_kernel % 2 == 1, "tc kernel width must be odd");
}

struct EmotionEstimate {
  EmotionTriple triple;
  std::vector<double> embedding;  // pre-output embedding, exposed for distillation
};

struct ModelOutput {
  Tensor pred;   // [batch, 3]
  Tensor embed;  // [batch, embed_dim]
};

struct TcGruCache {
  DenseCache proj;
  TimeConvCache tc;
  GruCache gru;
  PoolCache pool;
  DenseCache embed;
  TanhCache embed_tanh;
  DenseCache head;
  std::size_t batch = 0, frames = 0;
};

// The basic estimator: input projection -> time convolution with skip ->
// stacked GRU -> masked temporal mean pooling -> embedding layer (tanh) ->
// linear output head.
class TcGruModel {
 public:
  TcGruModel() = default;

  TcGruModel(const TcGruConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    validate(cfg);
    Rng rng(seed);
    proj_ = Dense("proj", cfg.input_dim, cfg.tc_channels, rng);
    tc_ = TimeConv("tc", cfg.tc_channels, cfg.tc_kernel, rng);
    gru_ = Gru("gru", cfg.tc_channels, cfg.gru_hidden, cfg.gru_layers, rng);
    embed_ = Dense("embed", cfg.gru_hidden, cfg.embed_dim, rng);
    head_ = Dense("head", cfg.embed_dim, cfg.output_dim, rng);
  }

  const TcGruConfig& config() const { return cfg_; }

  ModelOutput forward(const Tensor& x, const std::vector<std::size_t>& lengths,
                      TcGruCache& cache) const {
    check_input(x.rank() == 3 && x.dim(2) == cfg_.input_dim,
                "feature width mismatch: got " +
                    std::to_string(x.rank() == 3 ? x.dim(2) : 0) + ", want " +
                    std::to_string(cfg_.input_dim));
    const std::size_t b = x.dim(0), f = x.dim(1);
    check_input(f >= 1, "need at least one frame");
    cache.batch = b;
    cache.frames = f;
    Tensor t = x;
    t.reshape({b * f, cfg_.input_dim});
    t = proj_.forward(t, cache.proj);
    t.reshape({b, f, cfg_.tc_channels});
    t = tc_.forward(t, cache.tc);
    t = gru_.forward(t, cache.gru);
    Tensor pooled = mean_pool_time(t, lengths, cache.pool);
    Tensor emb = embed_.forward(pooled, cache.embed);
    emb = tanh_forward(emb, cache.embed_tanh);
    ModelOutput out;
    out.pred = head_.forward(emb, cache.head);
    out.embed = std::move(emb);
    return out;
  }

  // dembed_extra (optional, may be empty) adds a gradient applied directly to
  // the embedding output, used by distillation losses.
  void backward(const Tensor& dpred, const Tensor& dembed_extra,
                const TcGruCache& cache) {
    Tensor demb = head_.backward(dpred, cache.head);
    if (!dembed_extra.empty()) {
      check_input(dembed_extra.same_shape(demb),
                  "extra embedding gradient shape mismatch");
      for (std::size_t i = 0; i < demb.size(); ++i)
        demb[i] += dembed_extra[i];
    }
    demb = tanh_backward(demb, cache.embed_tanh);
    Tensor dpool = embed_.backward(demb, cache.embed);
    Tensor dseq = mean_pool_time_backward(dpool, cache.pool);
    dseq = gru_.backward(dseq, cache.gru);
    dseq = tc_.backward(dseq, cache.tc);
    dseq.reshape({cache.batch * cache.frames, cfg_.tc_channels});
    proj_.backward(dseq, cache.proj);
  }

  EmotionEstimate predict(const FeatureSequence& feats) const {
    check_input(feats.frames >= 1, "cannot predict on an empty sequence");
    check_input(feats.dim == cfg_.input_dim, "feature width mismatch");
    Tensor x({1, feats.frames, feats.dim});
    std::copy(feats.data.begin(), feats.data.end(), x.data());
    TcGruCache cache;
    const ModelOutput out = forward(x, {feats.frames}, cache);
    EmotionEstimate est;
    est.triple = {out.pred.at(0, 0), out.pred.at(0, 1), out.pred.at(0, 2)};
    est.embedding.assign(out.embed.data(), out.embed.data() + cfg_.embed_dim);
    return est;
  }

  std::vector<Parameter*> params() {
    std::vector<Parameter*> out;
    proj_.collect(out);
    tc_.collect(out);
    gru_.collect(out);
    embed_.collect(out);
    head_.collect(out);
    return out;
  }

  std::vector<const Parameter*> params() const {
    auto mut = const_cast<TcGruModel*>(this)->params();
    return {mut.begin(), mut.end()};
  }

  Dense& head() { return head_; }

 private:
  TcGruConfig cfg_;
  Dense proj_;
  TimeConv tc_;
  Gru gru_;
  Dense embed_;
  Dense head_;
};

// Closed-form parameter inventory for a config; kept next to the model so
// checkpoints can be sanity-checked against it.
inline std::size_t tcgru_param_count(const TcGruConfig& c) {
  std::size_t n = c.input_dim * c.tc_channels + c.tc_channels;          // proj
  n += c.tc_kernel * c.tc_channels * c.tc_channels + c.tc_channels;     // tc
  for (std::size_t l = 0; l < c.gru_layers; ++l) {
    const std::size_t in = l == 0 ? c.tc_channels : c.gru_hidden;
    n += 3 * (in * c.gru_hidden + c.gru_hidden * c.gru_hidden + c.gru_hidden);
  }
  n += c.gru_hidden * c.embed_dim + c.embed_dim;                        // embed
  n += c.embed_dim * c.output_dim + c.output_dim;                       // head
  return n;
}

// ---------------------------------------------------------------------------
// Multi-modal fusion: an acoustic trunk over the concatenated acoustic
// embedding pair plus frozen lexical TC-GRU branches whose embeddings are
// concatenated into a shared head.

struct FusionConfig {
  std::size_t acoustic_pair_dim = 2048;  // concatenated per-frame acoustic pair
  std::size_t acoustic_proj_dim = 128;
  std::size_t tc_kernel = 5;
  std::size_t gru_hidden = 128;
  std::size_t trunk_embed_dim = 128;
  std::size_t fusion_embed_dim = 128;
  std::size_t output_dim = 3;
};

inline void validate(const FusionConfig& c) {
  check_input(c.acoustic_pair_dim >= 1 && c.acoustic_proj_dim >= 1 &&
                  c.gru_hidden >= 1 && c.trunk_embed_dim >= 1 &&
                  c.fusion_embed_dim >= 1 && c.output_dim >= 1,
              "all fusion dimensions must be at least 1");
  check_input(c.tc_kernel % 2 == 1, "tc kernel width must be odd");
}

struct FusionCache {
  DenseCache proj;
  TimeConvCache tc;
  GruCache gru;
  PoolCache pool;
  DenseCache trunk_embed;
  TanhCache trunk_tanh;
  DenseCache head;
  TanhCache head_tanh;
  DenseCache out;
  std::size_t batch = 0, frames = 0;
};

class FusionModel {
 public:
  FusionModel() = default;

  FusionModel(const FusionConfig& cfg, std::vector<TcGruModel> lexical_branches,
              std::uint64_t seed)
      : cfg_(cfg), lexical_(std::move(lexical_branches)), frozen_(true) {
    validate(cfg);
    std::size_t lex_width = 0;
    for (const auto& b : lexical_) lex_width += b.config().embed_dim;
    Rng rng(seed);
    proj_ = Dense("trunk.proj", cfg.acoustic_pair_dim, cfg.acoustic_proj_dim, rng);
    tc_ = TimeConv("trunk.tc", cfg.acoustic_proj_dim, cfg.tc_kernel, rng);
    gru_ = Gru("trunk.gru", cfg.acoustic_proj_dim, cfg.gru_hidden, 2, rng);
    trunk_embed_ = Dense("trunk.embed", cfg.gru_hidden, cfg.trunk_embed_dim, rng);
    head_ = Dense("head.fuse", cfg.trunk_embed_dim + lex_width,
                  cfg.fusion_embed_dim, rng);
    out_ = Dense("head.out", cfg.fusion_embed_dim, cfg.output_dim, rng);
  }

  const FusionConfig& config() const { return cfg_; }
  std::size_t n_lexical() const { return lexical_.size(); }
  const TcGruModel& lexical_branch(std::size_t i) const { return lexical_[i]; }
  TcGruModel& lexical_branch(std::size_t i) { return lexical_[i]; }
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

  // acoustic: [batch, frames, pair_dim]; lexical_feats: per branch, a padded
  // [batch, frames_i, dim_i] tensor plus per-sequence valid lengths.
  ModelOutput forward(const Tensor& acoustic,
                      const std::vector<std::size_t>& lengths,
                      const std::vector<Tensor>& lexical_feats,
                      const std::vector<std::vector<std::size_t>>& lexical_lengths,
                      FusionCache& cache) const {
    check_input(acoustic.rank() == 3 && acoustic.dim(2) == cfg_.acoustic_pair_dim,
                "acoustic pair width mismatch");
    check_input(lexical_feats.size() == lexical_.size() &&
                    lexical_lengths.size() == lexical_.size(),
                "one feature block per lexical branch");
    const std::size_t b = acoustic.dim(0), f = acoustic.dim(1);
    cache.batch = b;
    cache.frames = f;

    Tensor t = acoustic;
    t.reshape({b * f, cfg_.acoustic_pair_dim});
    t = proj_.forward(t, cache.proj);
    t.reshape({b, f, cfg_.acoustic_proj_dim});
    t = tc_.forward(t, cache.tc);
    t = gru_.forward(t, cache.gru);
    Tensor pooled = mean_pool_time(t, lengths, cache.pool);
    Tensor trunk = trunk_embed_.forward(pooled, cache.trunk_embed);
    trunk = tanh_forward(trunk, cache.trunk_tanh);

    // Frozen lexical branches contribute their embeddings only; no gradient
    // ever flows back into them.
    std::size_t lex_width = 0;
    for (const auto& br : lexical_) lex_width += br.config().embed_dim;
    Tensor concat({b, cfg_.trunk_embed_dim + lex_width});
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < cfg_.trunk_embed_dim; ++j)
        concat.at(i, j) = trunk.at(i, j);
    std::size_t offset = cfg_.trunk_embed_dim;
    for (std::size_t li = 0; li < lexical_.size(); ++li) {
      TcGruCache branch_cache;
      const ModelOutput branch = lexical_[li].forward(
          lexical_feats[li], lexical_lengths[li], branch_cache);
      const std::size_t w = lexical_[li].config().embed_dim;
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < w; ++j)
          concat.at(i, offset + j) = branch.embed.at(i, j);
      offset += w;
    }

    Tensor femb = head_.forward(concat, cache.head);
    femb = tanh_forward(femb, cache.head_tanh);
    ModelOutput outp;
    outp.pred = out_.forward(femb, cache.out);
    outp.embed = std::move(femb);
    return outp;
  }

  void backward(const Tensor& dpred, const Tensor& dembed_extra,
                const FusionCache& cache) {
    if (!frozen_)
      throw ContractViolation(
          "lexical branches must be frozen while training a fusion model");
    Tensor dfemb = out_.backward(dpred, cache.out);
    if (!dembed_extra.empty()) {
      check_input(dembed_extra.same_shape(dfemb),
                  "extra embedding gradient shape mismatch");
      for (std::size_t i = 0; i < dfemb.size(); ++i)
        dfemb[i] += dembed_extra[i];
    }
    dfemb = tanh_backward(dfemb, cache.head_tanh);
    Tensor dconcat = head_.backward(dfemb, cache.head);
    // Only the trunk slice propagates; lexical branches are frozen.
    const std::size_t b = cache.batch;
    Tensor dtrunk({b, cfg_.trunk_embed_dim});
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < cfg_.trunk_embed_dim; ++j)
        dtrunk.at(i, j) = dconcat.at(i, j);
    dtrunk = tanh_backward(dtrunk, cache.trunk_tanh);
    Tensor dpool = trunk_embed_.backward(dtrunk, cache.trunk_embed);
    Tensor dseq = mean_pool_time_backward(dpool, cache.pool);
    dseq = gru_.backward(dseq, cache.gru);
    dseq = tc_.backward(dseq, cache.tc);
    dseq.reshape({cache.batch * cache.frames, cfg_.acoustic_proj_dim});
    proj_.backward(dseq, cache.proj);
  }

  // Trunk + head parameters; lexical branches are excluded (frozen).
  std::vector<Parameter*> trainable_params() {
    std::vector<Parameter*> out;
    proj_.collect(out);
    tc_.collect(out);
    gru_.collect(out);
    trunk_embed_.collect(out);
    head_.collect(out);
    out_.collect(out);
    return out;
  }

  // Full inventory including frozen branches, for checkpoints.
  std::vector<Parameter*> all_params() {
    std::vector<Parameter*> out = trainable_params();
    for (std::size_t li = 0; li < lexical_.size(); ++li) {
      for (Parameter* p : lexical_[li].params()) out.push_back(p);
    }
    return out;
  }

 private:
  FusionConfig cfg_;
  Dense proj_;
  TimeConv tc_;
  Gru gru_;
  Dense trunk_embed_;
  Dense head_;
  Dense out_;
  std::vector<TcGruModel> lexical_;
  bool frozen_ = true;
};

// ---------------------------------------------------------------------------
// Corpus-level evaluation.

struct PerDimCcc {
  double act = 0.0;
  double val = 0.0;
  double dom = 0.0;

  double mean() const { return (act + val + dom) / 3.0; }
  double dim(std::size_t k) const {
    return k == 0 ? act : (k == 1 ? val : dom);
  }
};

inline PerDimCcc evaluate_predictions(std::span<const EmotionTriple> preds,
                                      std::span<const EmotionTriple> labels) {
  check_input(preds.size() == labels.size(), "prediction/label count mismatch");
  check_input(preds.size() >= 2, "need at least 2 utterances to evaluate");
  PerDimCcc out;
  std::vector<double> p(preds.size()), l(preds.size());
  for (std::size_t k = 0; k < kNumDims; ++k) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      p[i] = preds[i].dim(k);
      l[i] = labels[i].dim(k);
    }
    const double c = ccc(p, l).ccc;
    if (k == 0)
      out.act = c;
    else if (k == 1)
      out.val = c;
    else
      out.dom = c;
  }
  return out;
}

// Parameter snapshot/restore, used for best-epoch model selection.
inline std::vector<Tensor> snapshot_params(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

inline void restore_params(const std::vector<Parameter*>& params,
                           const std::vector<Tensor>& snapshot) {
  check_input(snapshot.size() == params.size(), "snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    check_input(snapshot[i].same_shape(params[i]->value),
                "snapshot shape mismatch for " + params[i]->name);
    params[i]->value = snapshot[i];
  }
}

}  // namespace affectkit

#endif  // AFFECTKIT_MODELS_HPP
