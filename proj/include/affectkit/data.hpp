// data/data.hpp

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

#ifndef AFFECTKIT_DATA_HPP
#define AFFECTKIT_DATA_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "affectkit/csv.hpp"
#include "affectkit/error.hpp"
#include "affectkit/feature.hpp"
#include "affectkit/metrics.hpp"
#include "affectkit/rng.hpp"

namespace affectkit {

// ---------------------------------------------------------------------------
// Feature file: magic "AFE1", u32le dim, u32le frame count, then frames*dim
// float32 little-endian values, row-major.

inline constexpr char kFeatureMagic[4] = {'A', 'F', 'E', '1'};

inline void write_feature_file(const std::string& path,
                               const FeatureSequence& feats) {
  check_input(feats.dim >= 1, "cannot write a zero-width feature file");
  std::string out(kFeatureMagic, 4);
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
  };
  put_u32(static_cast<std::uint32_t>(feats.dim));
  put_u32(static_cast<std::uint32_t>(feats.frames));
  for (double v : feats.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int i = 0; i < 4; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

inline FeatureSequence read_feature_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
    throw FormatError("bad feature-file magic in " + path);
  auto get_u32 = [&bytes](std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes[pos + i]))
           << (8 * i);
    return v;
  };
  const std::uint32_t dim = get_u32(4);
  const std::uint32_t frames = get_u32(8);
  if (dim == 0) throw FormatError("zero feature dimension in " + path);
  const std::size_t expect = 12 + std::size_t{4} * dim * frames;
  if (bytes.size() != expect)
    throw FormatError("feature file " + path + " has " +
                      std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expect));
  FeatureSequence out(frames, dim);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    std::uint32_t bits = get_u32(12 + 4 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    out.data[i] = static_cast<double>(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifests.

enum class Split { kTrain, kValid, kEval };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    default: return "eval";
  }
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "eval") return Split::kEval;
  throw FormatError("unknown split '" + s + "' (want train|valid|eval)");
}

struct ManifestRecord {
  std::string id;
  Split split = Split::kTrain;
  EmotionTriple labels;
  std::string feature_path;    // may be empty until features are extracted
  std::string wav_path;        // optional
  std::string ref_transcript;  // optional
  std::string hyp_transcript;  // optional
  bool noise_aware = false;    // in-memory flag, not serialized
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::string base_dir;  // directory of the manifest file; paths are relative
  double label_min = 1.0;
  double label_max = 7.0;

  std::string resolve(const std::string& rel) const {
    if (rel.empty() || rel.front() == '/' || base_dir.empty()) return rel;
    return base_dir + "/" + rel;
  }

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.split == s ? 1 : 0;
    return n;
  }
};

inline constexpr const char* kManifestHeader =
    "id,split,act,val,dom,feature_path,wav_path,ref_transcript,hyp_transcript";

inline void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << kManifestHeader << "\n";
  for (const auto& r : m.records) {
    f << csv_join({r.id, to_string(r.split), format_sig9(r.labels.act),
                   format_sig9(r.labels.val), format_sig9(r.labels.dom),
                   r.feature_path, r.wav_path, r.ref_transcript,
                   r.hyp_transcript})
      << "\n";
  }
  if (!f) throw IoError("short write: " + path);
}

inline Manifest load_manifest(const std::string& path, double label_min = 1.0,
                              double label_max = 7.0, bool check_paths = true) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw FormatError("empty manifest: " + path);
  if (csv_join(rows[0]) != kManifestHeader)
    throw FormatError("manifest " + path + " must start with header '" +
                      kManifestHeader + "'");
  Manifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  m.label_min = label_min;
  m.label_max = label_max;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 9)
      throw FormatError("manifest " + path + " row " + std::to_string(i + 1) +
                        " has " + std::to_string(row.size()) +
                        " fields, want 9");
    ManifestRecord r;
    r.id = row[0];
    if (r.id.empty())
      throw FormatError("manifest " + path + " row " + std::to_string(i + 1) +
                        " has an empty id");
    if (!seen.insert(r.id).second)
      throw FormatError("duplicate id '" + r.id + "' in " + path);
    r.split = split_from_string(row[1]);
    try {
      r.labels = {std::stod(row[2]), std::stod(row[3]), std::stod(row[4])};
    } catch (const std::exception&) {
      throw FormatError("bad label in " + path + " row " +
                        std::to_string(i + 1));
    }
    for (std::size_t k = 0; k < kNumDims; ++k) {
      const double v = r.labels.dim(k);
      if (!(v >= label_min && v <= label_max))
        throw FormatError("label " + std::string(kDimNames[k]) + "=" +
                          format_sig9(v) + " out of range [" +
                          format_sig9(label_min) + "," + format_sig9(label_max) +
                          "] in " + path + " row " + std::to_string(i + 1) +
                          " (id " + r.id + ")");
    }
    r.feature_path = row[5];
    r.wav_path = row[6];
    r.ref_transcript = row[7];
    r.hyp_transcript = row[8];
    if (check_paths) {
      for (const std::string& p : {r.feature_path, r.wav_path}) {
        if (!p.empty() && !std::filesystem::exists(m.resolve(p)))
          throw IoError("manifest " + path + " references missing file " +
                        m.resolve(p) + " (id " + r.id + ")");
      }
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

// Flags round(fraction * n_train) train records, chosen by a seeded shuffle
// of the train ids; valid/eval records are never flagged and labels are
// untouched.
inline Manifest mark_noise_aware(Manifest m, double fraction,
                                 std::uint64_t seed) {
  check_input(fraction >= 0.0 && fraction <= 1.0,
              "noise-aware fraction must be in [0,1]");
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].split == Split::kTrain) train_idx.push_back(i);
  const std::size_t n_flag = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(train_idx.size())));
  Rng rng(seed);
  rng.shuffle(train_idx);
  for (auto& r : m.records) r.noise_aware = false;
  for (std::size_t i = 0; i < n_flag; ++i)
    m.records[train_idx[i]].noise_aware = true;
  return m;
}

// ---------------------------------------------------------------------------
// Synthetic desk-scale corpus.  Latent (a,v,d) are drawn uniform over the
// label range and become the labels.  The acoustic channel carries activation
// in its mean level and dominance in the amplitude of a temporal modulation,
// with only a weak valence component; the lexical channel carries valence
// strongly and the other two weakly.  A corrupted acoustic variant per
// strength adds a fixed-direction bias plus white noise in feature space,
// standing in for SNR degradation in pipeline tests that skip audio.

struct SyntheticSpec {
  std::size_t n_train = 1000;
  std::size_t n_valid = 200;
  std::size_t n_eval = 200;
  std::size_t min_frames = 30;
  std::size_t max_frames = 60;
  std::size_t acoustic_dim = 16;
  std::size_t lexical_dim = 12;
  double label_min = 1.0;
  double label_max = 7.0;
  double acoustic_noise = 0.4;
  double lexical_noise = 0.4;
  double valence_acoustic_coupling = 0.06;  // weak v signal in acoustic
  double offdim_lexical_coupling = 0.1;     // weak a,d signal in lexical
  std::vector<double> corruption_strengths = {0.5, 1.0, 2.0};
  double corruption_bias = 0.6;  // fixed-direction share of the corruption
  std::uint64_t seed = 1234;
};

inline void validate(const SyntheticSpec& s) {
  check_input(s.acoustic_dim >= 2 && s.lexical_dim >= 2,
              "synthetic channels need at least 2 dims");
  check_input(s.min_frames >= 2 && s.min_frames <= s.max_frames,
              "bad frame range");
  check_input(s.label_min < s.label_max, "bad label range");
  check_input(s.n_train + s.n_valid + s.n_eval >= 2, "corpus too small");
}

struct SyntheticUtt {
  std::string id;
  Split split = Split::kTrain;
  EmotionTriple labels;
  FeatureSequence acoustic;
  FeatureSequence lexical;
  std::vector<FeatureSequence> corrupted;  // one per corruption strength
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  std::vector<SyntheticUtt> utts;
};

namespace synth_detail {

inline std::vector<double> random_unit(std::size_t n, Rng& rng,
                                       bool centered) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  if (centered) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    for (auto& x : v) x -= mean;
  }
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace synth_detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  SyntheticCorpus corpus;
  corpus.spec = spec;
  Rng rng(spec.seed);

  const std::size_t da = spec.acoustic_dim, dl = spec.lexical_dim;
  // Corpus-wide directions.  The activation direction is the constant vector
  // so the utterance mean level tracks a; the valence direction is centered
  // so it stays out of that statistic.
  std::vector<double> u_act(da, 1.0 / std::sqrt(static_cast<double>(da)));
  const auto u_dom = synth_detail::random_unit(da, rng, false);
  const auto u_val = synth_detail::random_unit(da, rng, true);
  const auto u_bias = synth_detail::random_unit(da, rng, false);
  const auto ul_val = synth_detail::random_unit(dl, rng, false);
  const auto ul_act = synth_detail::random_unit(dl, rng, false);
  const auto ul_dom = synth_detail::random_unit(dl, rng, false);

  const std::size_t total = spec.n_train + spec.n_valid + spec.n_eval;
  const double mid = 0.5 * (spec.label_min + spec.label_max);
  const double half = 0.5 * (spec.label_max - spec.label_min);
  const double omega = 2.0 * kPi / 7.3;

  for (std::size_t u = 0; u < total; ++u) {
    SyntheticUtt utt;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "utt%05zu", u);
    utt.id = buf;
    utt.split = u < spec.n_train
                    ? Split::kTrain
                    : (u < spec.n_train + spec.n_valid ? Split::kValid
                                                       : Split::kEval);
    utt.labels = {rng.uniform(spec.label_min, spec.label_max),
                  rng.uniform(spec.label_min, spec.label_max),
                  rng.uniform(spec.label_min, spec.label_max)};
    const double a_s = (utt.labels.act - mid) / half;
    const double v_s = (utt.labels.val - mid) / half;
    const double d_s = (utt.labels.dom - mid) / half;
    const double amp = 0.8 + 0.6 * d_s;  // in [0.2, 1.4]
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const std::size_t frames =
        spec.min_frames + rng.index(spec.max_frames - spec.min_frames + 1);

    utt.acoustic = FeatureSequence(frames, da);
    for (std::size_t t = 0; t < frames; ++t) {
      const double mod = amp * std::sin(omega * static_cast<double>(t) + phase);
      for (std::size_t j = 0; j < da; ++j)
        utt.acoustic.at(t, j) = a_s * u_act[j] + mod * u_dom[j] +
                                spec.valence_acoustic_coupling * v_s * u_val[j] +
                                spec.acoustic_noise * rng.normal();
    }
    utt.lexical = FeatureSequence(frames, dl);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t j = 0; j < dl; ++j)
        utt.lexical.at(t, j) =
            v_s * ul_val[j] +
            spec.offdim_lexical_coupling * (a_s * ul_act[j] + d_s * ul_dom[j]) +
            spec.lexical_noise * rng.normal();
    }
    for (double strength : spec.corruption_strengths) {
      FeatureSequence c = utt.acoustic;
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t j = 0; j < da; ++j)
          c.at(t, j) += strength * (spec.corruption_bias * u_bias[j] +
                                    rng.normal());
      utt.corrupted.push_back(std::move(c));
    }
    corpus.utts.push_back(std::move(utt));
  }
  return corpus;
}

// Written layout under out_dir:
//   features/<id>.ac.feat, features/<id>.lex.feat,
//   features/<id>.ac.c<k>.feat            (k = 1..n_strengths)
//   manifest.acoustic.csv, manifest.lexical.csv, manifest.acoustic.c<k>.csv
struct SyntheticPaths {
  std::string acoustic_manifest;
  std::string lexical_manifest;
  std::vector<std::string> corrupted_manifests;
};

inline SyntheticPaths write_synthetic(const SyntheticCorpus& corpus,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "features");
  Manifest acoustic, lexical;
  acoustic.label_min = lexical.label_min = corpus.spec.label_min;
  acoustic.label_max = lexical.label_max = corpus.spec.label_max;
  std::vector<Manifest> corrupted(corpus.spec.corruption_strengths.size());
  for (const auto& utt : corpus.utts) {
    const std::string ac_rel = "features/" + utt.id + ".ac.feat";
    const std::string lex_rel = "features/" + utt.id + ".lex.feat";
    write_feature_file(out_dir + "/" + ac_rel, utt.acoustic);
    write_feature_file(out_dir + "/" + lex_rel, utt.lexical);
    ManifestRecord r;
    r.id = utt.id;
    r.split = utt.split;
    r.labels = utt.labels;
    r.feature_path = ac_rel;
    acoustic.records.push_back(r);
    r.feature_path = lex_rel;
    lexical.records.push_back(r);
    for (std::size_t k = 0; k < utt.corrupted.size(); ++k) {
      const std::string c_rel =
          "features/" + utt.id + ".ac.c" + std::to_string(k + 1) + ".feat";
      write_feature_file(out_dir + "/" + c_rel, utt.corrupted[k]);
      r.feature_path = c_rel;
      corrupted[k].records.push_back(r);
    }
  }
  SyntheticPaths paths;
  paths.acoustic_manifest = out_dir + "/manifest.acoustic.csv";
  paths.lexical_manifest = out_dir + "/manifest.lexical.csv";
  write_manifest(paths.acoustic_manifest, acoustic);
  write_manifest(paths.lexical_manifest, lexical);
  for (std::size_t k = 0; k < corrupted.size(); ++k) {
    paths.corrupted_manifests.push_back(
        out_dir + "/manifest.acoustic.c" + std::to_string(k + 1) + ".csv");
    write_manifest(paths.corrupted_manifests[k], corrupted[k]);
  }
  return paths;
}

}  // namespace affectkit

#endif  // AFFECTKIT_DATA_HPP
