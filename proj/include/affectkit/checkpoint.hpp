// models/checkpoint.hpp

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
//
// Checkpoint container, all little-endian:
//   magic "AKCP" | u32 version (=1)
//   u32 n_config | per entry: u32 key_len, key, u32 val_len, val
//   u32 n_params | per param: u32 name_len, name, u32 rank, u32 dims[rank],
//                  f64 values[prod(dims)]
// Config entries echo the model architecture and hyperparameters so a
// checkpoint is self-describing.

#ifndef AFFECTKIT_CHECKPOINT_HPP
#define AFFECTKIT_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "affectkit/models.hpp"

namespace affectkit {

namespace ckpt_detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) s += static_cast<char>((bits >> (8 * i)) & 0xff);
}

inline void put_str(std::string& s, const std::string& v) {
  put_u32(s, static_cast<std::uint32_t>(v.size()));
  s += v;
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(bytes_[pos_ + i]))
              << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw FormatError("truncated checkpoint " + path_ + " at byte " +
                        std::to_string(pos_) + " (need " + std::to_string(n) +
                        " more, have " + std::to_string(bytes_.size() - pos_) +
                        ")");
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

struct CheckpointData {
  std::map<std::string, std::string> config;  // includes "arch"
  std::vector<std::pair<std::string, Tensor>> params;

  const std::string& config_at(const std::string& key) const {
    auto it = config.find(key);
    if (it == config.end())
      throw FormatError("checkpoint missing config key: " + key);
    return it->second;
  }
  std::size_t config_size_t(const std::string& key) const {
    return static_cast<std::size_t>(std::stoull(config_at(key)));
  }
};

inline void save_checkpoint(
    const std::string& path, const std::map<std::string, std::string>& config,
    const std::vector<std::pair<std::string, const Tensor*>>& params) {
  using namespace ckpt_detail;
  std::string out = "AKCP";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  for (const auto& [k, v] : config) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape())
      put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < tensor->size(); ++i) put_f64(out, (*tensor)[i]);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || bytes.compare(0, 4, "AKCP") != 0)
    throw FormatError("bad checkpoint magic in " + path);
  CheckpointData data;
  ckpt_detail::Reader body(bytes, path);
  body.u32();  // magic, already validated
  const std::uint32_t version = body.u32();
  if (version != 1)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path);
  const std::uint32_t n_config = body.u32();
  for (std::uint32_t i = 0; i < n_config; ++i) {
    std::string k = body.str();
    data.config[k] = body.str();
  }
  const std::uint32_t n_params = body.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string name = body.str();
    const std::uint32_t rank = body.u32();
    if (rank > 4) throw FormatError("implausible tensor rank in " + path);
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = body.u32();
      if (shape[d] == 0) throw FormatError("zero dimension in " + path);
      total *= shape[d];
    }
    Tensor t(shape);
    for (std::size_t v = 0; v < total; ++v) t[v] = body.f64();
    data.params.emplace_back(std::move(name), std::move(t));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Model adapters.

inline void save_checkpoint(const std::string& path, const TcGruModel& model,
                            std::map<std::string, std::string> extra = {}) {
  const TcGruConfig& c = model.config();
  std::map<std::string, std::string> config = std::move(extra);
  config["arch"] = "tcgru";
  config["input_dim"] = std::to_string(c.input_dim);
  config["tc_channels"] = std::to_string(c.tc_channels);
  config["tc_kernel"] = std::to_string(c.tc_kernel);
  config["gru_hidden"] = std::to_string(c.gru_hidden);
  config["gru_layers"] = std::to_string(c.gru_layers);
  config["embed_dim"] = std::to_string(c.embed_dim);
  config["output_dim"] = std::to_string(c.output_dim);
  std::vector<std::pair<std::string, const Tensor*>> params;
  for (const Parameter* p : model.params())
    params.emplace_back(p->name, &p->value);
  save_checkpoint(path, config, params);
}

inline TcGruConfig tcgru_config_from(const CheckpointData& data,
                                     const std::string& prefix = "") {
  TcGruConfig c;
  c.input_dim = data.config_size_t(prefix + "input_dim");
  c.tc_channels = data.config_size_t(prefix + "tc_channels");
  c.tc_kernel = data.config_size_t(prefix + "tc_kernel");
  c.gru_hidden = data.config_size_t(prefix + "gru_hidden");
  c.gru_layers = data.config_size_t(prefix + "gru_layers");
  c.embed_dim = data.config_size_t(prefix + "embed_dim");
  c.output_dim = data.config_size_t(prefix + "output_dim");
  return c;
}

inline void assign_params(const std::vector<Parameter*>& params,
                          const CheckpointData& data,
                          const std::string& prefix, const std::string& path) {
  std::map<std::string, const Tensor*> lookup;
  for (const auto& [name, tensor] : data.params) lookup[name] = &tensor;
  for (Parameter* p : params) {
    auto it = lookup.find(prefix + p->name);
    if (it == lookup.end())
      throw FormatError("checkpoint " + path + " missing parameter " + prefix +
                        p->name);
    check_input(it->second->shape() == p->value.shape(),
                "checkpoint shape mismatch for " + prefix + p->name);
    p->value = *it->second;
  }
}

inline TcGruModel load_tcgru(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  if (data.config_at("arch") != "tcgru")
    throw FormatError("checkpoint " + path + " is not a tcgru model");
  TcGruModel model(tcgru_config_from(data), 0);
  assign_params(model.params(), data, "", path);
  return model;
}

inline void save_checkpoint(const std::string& path, FusionModel& model,
                            std::map<std::string, std::string> extra = {}) {
  const FusionConfig& c = model.config();
  std::map<std::string, std::string> config = std::move(extra);
  config["arch"] = "fusion";
  config["acoustic_pair_dim"] = std::to_string(c.acoustic_pair_dim);
  config["acoustic_proj_dim"] = std::to_string(c.acoustic_proj_dim);
  config["tc_kernel"] = std::to_string(c.tc_kernel);
  config["gru_hidden"] = std::to_string(c.gru_hidden);
  config["trunk_embed_dim"] = std::to_string(c.trunk_embed_dim);
  config["fusion_embed_dim"] = std::to_string(c.fusion_embed_dim);
  config["output_dim"] = std::to_string(c.output_dim);
  config["n_lexical"] = std::to_string(model.n_lexical());
  std::vector<std::pair<std::string, const Tensor*>> params;
  for (Parameter* p : model.trainable_params())
    params.emplace_back(p->name, &p->value);
  for (std::size_t li = 0; li < model.n_lexical(); ++li) {
    const std::string prefix = "lex" + std::to_string(li) + ".";
    const TcGruConfig& lc = model.lexical_branch(li).config();
    config[prefix + "input_dim"] = std::to_string(lc.input_dim);
    config[prefix + "tc_channels"] = std::to_string(lc.tc_channels);
    config[prefix + "tc_kernel"] = std::to_string(lc.tc_kernel);
    config[prefix + "gru_hidden"] = std::to_string(lc.gru_hidden);
    config[prefix + "gru_layers"] = std::to_string(lc.gru_layers);
    config[prefix + "embed_dim"] = std::to_string(lc.embed_dim);
    config[prefix + "output_dim"] = std::to_string(lc.output_dim);
    for (Parameter* p : model.lexical_branch(li).params())
      params.emplace_back(prefix + p->name, &p->value);
  }
  save_checkpoint(path, config, params);
}

inline FusionModel load_fusion(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  if (data.config_at("arch") != "fusion")
    throw FormatError("checkpoint " + path + " is not a fusion model");
  FusionConfig c;
  c.acoustic_pair_dim = data.config_size_t("acoustic_pair_dim");
  c.acoustic_proj_dim = data.config_size_t("acoustic_proj_dim");
  c.tc_kernel = data.config_size_t("tc_kernel");
  c.gru_hidden = data.config_size_t("gru_hidden");
  c.trunk_embed_dim = data.config_size_t("trunk_embed_dim");
  c.fusion_embed_dim = data.config_size_t("fusion_embed_dim");
  c.output_dim = data.config_size_t("output_dim");
  const std::size_t n_lex = data.config_size_t("n_lexical");
  std::vector<TcGruModel> branches;
  for (std::size_t li = 0; li < n_lex; ++li) {
    const std::string prefix = "lex" + std::to_string(li) + ".";
    branches.emplace_back(tcgru_config_from(data, prefix), 0);
  }
  FusionModel model(c, std::move(branches), 0);
  assign_params(model.trainable_params(), data, "", path);
  for (std::size_t li = 0; li < model.n_lexical(); ++li)
    assign_params(model.lexical_branch(li).params(), data,
                  "lex" + std::to_string(li) + ".", path);
  return model;
}

}  // namespace affectkit

#endif  // AFFECTKIT_CHECKPOINT_HPP
