// tests/test_data.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "affectkit/data.hpp"
#include "oracles.hpp"

using namespace affectkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path.string() : (path / rel).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("feature file round trip") {
  TempDir dir("affectkit_feat_test");
  Rng rng(1);

  SECTION("write/read is stable and exact at storage precision") {
    FeatureSequence f(10, 43);
    for (auto& v : f.data) v = rng.normal();
    const auto path = dir.str("a.feat");
    write_feature_file(path, f);
    const FeatureSequence r = read_feature_file(path);
    REQUIRE(r.frames == 10);
    REQUIRE(r.dim == 43);
    for (std::size_t i = 0; i < f.data.size(); ++i)
      CHECK(r.data[i] == static_cast<double>(static_cast<float>(f.data[i])));
    // a second write of the read-back data is byte-identical
    const auto path2 = dir.str("b.feat");
    write_feature_file(path2, r);
    CHECK(slurp(path) == slurp(path2));
    const FeatureSequence r2 = read_feature_file(path2);
    CHECK(r2.data == r.data);
  }

  SECTION("zero-frame file is valid and empty") {
    const auto path = dir.str("empty.feat");
    write_feature_file(path, FeatureSequence(0, 8));
    const auto r = read_feature_file(path);
    CHECK(r.frames == 0);
    CHECK(r.dim == 8);
    CHECK(r.data.empty());
  }

  SECTION("truncation reports expected vs actual byte counts") {
    FeatureSequence f(4, 3);
    for (auto& v : f.data) v = rng.normal();
    const auto path = dir.str("trunc.feat");
    write_feature_file(path, f);
    const std::string bytes = slurp(path);
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    out.close();
    try {
      read_feature_file(path);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(std::to_string(bytes.size())) != std::string::npos);
      CHECK(msg.find(std::to_string(bytes.size() - 5)) != std::string::npos);
    }
  }

  SECTION("bad magic and zero dim are rejected") {
    const auto path = dir.str("junk.feat");
    std::ofstream out(path, std::ios::binary);
    out << "NOPE00000000";
    out.close();
    CHECK_THROWS_AS(read_feature_file(path), FormatError);
    CHECK_THROWS_AS(write_feature_file(dir.str("zdim.feat"), FeatureSequence(3, 0)),
                    InvalidInput);
  }
}

TEST_CASE("manifest load and validation") {
  TempDir dir("affectkit_manifest_test");
  // referenced feature files must exist
  write_feature_file(dir.str("f1.feat"), FeatureSequence(2, 3));
  write_feature_file(dir.str("f2.feat"), FeatureSequence(2, 3));
  write_feature_file(dir.str("f3.feat"), FeatureSequence(2, 3));

  auto write_lines = [&](const std::string& name,
                         const std::vector<std::string>& lines) {
    std::ofstream out(dir.str(name));
    for (const auto& l : lines) out << l << "\n";
    return dir.str(name);
  };

  SECTION("a valid 3-row manifest loads") {
    const auto path = write_lines(
        "ok.csv", {kManifestHeader,
                   "u1,train,1.5,2,3,f1.feat,,hello there,hello their",
                   "u2,valid,4,5,6,f2.feat,,,", "u3,eval,7,1,4,f3.feat,,,"});
    const Manifest m = load_manifest(path);
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].labels.act == 1.5);
    CHECK(m.records[0].ref_transcript == "hello there");
    CHECK(m.records[1].split == Split::kValid);
    CHECK(m.count(Split::kTrain) == 1);

    // round trip through write_manifest preserves content
    const auto copy = dir.str("copy.csv");
    write_manifest(copy, m);
    const Manifest m2 = load_manifest(copy);
    REQUIRE(m2.records.size() == 3);
    CHECK(m2.records[0].id == "u1");
    CHECK(m2.records[0].labels.val == 2.0);
    CHECK(m2.records[2].hyp_transcript == "");
  }

  SECTION("duplicate ids are rejected by name") {
    const auto path = write_lines(
        "dup.csv", {kManifestHeader, "u1,train,1,2,3,f1.feat,,,",
                    "u1,train,2,3,4,f2.feat,,,"});
    try {
      load_manifest(path);
      FAIL("expected format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("u1") != std::string::npos);
    }
  }

  SECTION("out-of-range labels are rejected with the row named") {
    const auto path = write_lines(
        "range.csv", {kManifestHeader, "u1,train,1,2,3,f1.feat,,,",
                      "u2,train,9.0,2,3,f2.feat,,,"});
    try {
      load_manifest(path, 1.0, 7.0);
      FAIL("expected format error");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("u2") != std::string::npos);
    }
  }

  SECTION("missing referenced files are rejected") {
    const auto path = write_lines(
        "missing.csv", {kManifestHeader, "u1,train,1,2,3,gone.feat,,,"});
    CHECK_THROWS_AS(load_manifest(path), IoError);
    const Manifest lazy = load_manifest(path, 1.0, 7.0, false);
    CHECK(lazy.records.size() == 1);
  }

  SECTION("transcripts with commas survive CSV quoting") {
    Manifest m;
    ManifestRecord r;
    r.id = "q1";
    r.split = Split::kEval;
    r.labels = {2, 3, 4};
    r.feature_path = "f1.feat";
    r.ref_transcript = "well, you know";
    r.hyp_transcript = "well \"you\" know";
    m.records.push_back(r);
    const auto path = dir.str("quoted.csv");
    write_manifest(path, m);
    const Manifest m2 = load_manifest(path);
    CHECK(m2.records[0].ref_transcript == "well, you know");
    CHECK(m2.records[0].hyp_transcript == "well \"you\" know");
  }
}

TEST_CASE("mark_noise_aware") {
  Manifest m;
  for (int i = 0; i < 200; ++i) {
    ManifestRecord r;
    r.id = "t" + std::to_string(i);
    r.split = Split::kTrain;
    r.labels = {1.0 + (i % 7), 1.0 + ((i * 3) % 7), 1.0 + ((i * 5) % 7)};
    m.records.push_back(r);
  }
  for (int i = 0; i < 50; ++i) {
    ManifestRecord r;
    r.id = "v" + std::to_string(i);
    r.split = i % 2 ? Split::kValid : Split::kEval;
    r.labels = {4, 4, 4};
    m.records.push_back(r);
  }

  SECTION("fraction zero flags nothing") {
    const Manifest out = mark_noise_aware(m, 0.0, 5);
    for (const auto& r : out.records) CHECK_FALSE(r.noise_aware);
  }

  SECTION("9 percent of 200 train records is exactly 18") {
    const Manifest out = mark_noise_aware(m, 0.09, 5);
    std::size_t flagged = 0;
    for (const auto& r : out.records) {
      if (r.noise_aware) {
        ++flagged;
        CHECK(r.split == Split::kTrain);
      }
    }
    CHECK(flagged == 18);
  }

  SECTION("same seed flags the same set; labels untouched") {
    const Manifest a = mark_noise_aware(m, 0.25, 11);
    const Manifest b = mark_noise_aware(m, 0.25, 11);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].noise_aware == b.records[i].noise_aware);
      CHECK(a.records[i].labels.act == m.records[i].labels.act);
    }
    const Manifest c = mark_noise_aware(m, 0.25, 12);
    bool differs = false;
    for (std::size_t i = 0; i < a.records.size(); ++i)
      differs |= a.records[i].noise_aware != c.records[i].noise_aware;
    CHECK(differs);
  }
}

TEST_CASE("synthetic corpus oracles") {
  SyntheticSpec spec;
  spec.n_train = 1000;
  spec.n_valid = 0;
  spec.n_eval = 2;
  spec.corruption_strengths = {};
  spec.seed = 424242;
  const SyntheticCorpus corpus = generate_synthetic(spec);
  REQUIRE(corpus.utts.size() == 1002);

  std::vector<std::vector<double>> mean_energy, dim_means;
  std::vector<std::vector<double>> lex_dim_means;
  std::vector<double> act, val;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& u = corpus.utts[i];
    double total = 0.0;
    std::vector<double> per_dim(u.acoustic.dim, 0.0);
    for (std::size_t t = 0; t < u.acoustic.frames; ++t)
      for (std::size_t j = 0; j < u.acoustic.dim; ++j) {
        total += u.acoustic.at(t, j);
        per_dim[j] += u.acoustic.at(t, j);
      }
    const double nf = static_cast<double>(u.acoustic.frames);
    for (auto& v : per_dim) v /= nf;
    mean_energy.push_back({total / (nf * static_cast<double>(u.acoustic.dim))});
    dim_means.push_back(per_dim);
    std::vector<double> lex_means(u.lexical.dim, 0.0);
    for (std::size_t t = 0; t < u.lexical.frames; ++t)
      for (std::size_t j = 0; j < u.lexical.dim; ++j)
        lex_means[j] += u.lexical.at(t, j);
    for (auto& v : lex_means) v /= nf;
    lex_dim_means.push_back(lex_means);
    act.push_back(u.labels.act);
    val.push_back(u.labels.val);
  }

  SECTION("least squares recovers activation from mean acoustic energy") {
    const auto fitted = akt::ols_fit(mean_energy, act);
    CHECK(akt::ccc_reference(fitted, act) >= 0.9);
  }

  SECTION("valence is only weakly linearly decodable from acoustic features") {
    const auto fitted = akt::ols_fit(dim_means, val);
    CHECK(akt::ccc_reference(fitted, val) <= 0.5);
  }

  SECTION("valence is strongly decodable from the lexical channel") {
    const auto fitted = akt::ols_fit(lex_dim_means, val);
    CHECK(akt::ccc_reference(fitted, val) >= 0.8);
  }

  SECTION("identical seeds generate identical corpora") {
    const SyntheticCorpus again = generate_synthetic(spec);
    REQUIRE(again.utts.size() == corpus.utts.size());
    for (std::size_t i : {std::size_t{0}, std::size_t{500}, std::size_t{999}}) {
      CHECK(again.utts[i].labels.act == corpus.utts[i].labels.act);
      CHECK(again.utts[i].acoustic.data == corpus.utts[i].acoustic.data);
      CHECK(again.utts[i].lexical.data == corpus.utts[i].lexical.data);
    }
  }
}

TEST_CASE("synthetic label marginals are uniform") {
  SyntheticSpec spec;
  spec.n_train = 5000;
  spec.n_valid = 0;
  spec.n_eval = 0;
  spec.min_frames = 2;
  spec.max_frames = 3;
  spec.acoustic_dim = 2;
  spec.lexical_dim = 2;
  spec.corruption_strengths = {};
  spec.seed = 777;
  const SyntheticCorpus corpus = generate_synthetic(spec);
  for (std::size_t k = 0; k < kNumDims; ++k) {
    std::vector<double> v;
    v.reserve(corpus.utts.size());
    for (const auto& u : corpus.utts) v.push_back(u.labels.dim(k));
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double cdf = (v[i] - spec.label_min) / (spec.label_max - spec.label_min);
      const double lo = static_cast<double>(i) / n;
      const double hi = static_cast<double>(i + 1) / n;
      ks = std::max({ks, std::fabs(cdf - lo), std::fabs(cdf - hi)});
    }
    CHECK(ks <= 0.05);
  }
}

TEST_CASE("synthetic corpus writes a loadable file layout") {
  TempDir dir("affectkit_synth_write");
  SyntheticSpec spec;
  spec.n_train = 6;
  spec.n_valid = 3;
  spec.n_eval = 3;
  spec.min_frames = 4;
  spec.max_frames = 8;
  spec.acoustic_dim = 5;
  spec.lexical_dim = 4;
  spec.corruption_strengths = {0.5, 1.5};
  spec.seed = 9;
  const SyntheticCorpus corpus = generate_synthetic(spec);
  const SyntheticPaths paths = write_synthetic(corpus, dir.str());

  const Manifest ac = load_manifest(paths.acoustic_manifest);
  const Manifest lex = load_manifest(paths.lexical_manifest);
  REQUIRE(ac.records.size() == 12);
  REQUIRE(lex.records.size() == 12);
  CHECK(ac.count(Split::kTrain) == 6);
  CHECK(ac.count(Split::kValid) == 3);
  CHECK(ac.count(Split::kEval) == 3);
  REQUIRE(paths.corrupted_manifests.size() == 2);

  // features referenced by the manifests reload to the generated content at
  // float32 precision
  const auto& u0 = corpus.utts[0];
  const FeatureSequence back =
      read_feature_file(ac.resolve(ac.records[0].feature_path));
  REQUIRE(back.frames == u0.acoustic.frames);
  for (std::size_t i = 0; i < back.data.size(); ++i)
    CHECK(back.data[i] ==
          static_cast<double>(static_cast<float>(u0.acoustic.data[i])));

  const Manifest c1 = load_manifest(paths.corrupted_manifests[0]);
  CHECK(c1.records[0].feature_path.find(".c1.") != std::string::npos);

  // corrupted variants differ from the clean channel
  const FeatureSequence cf =
      read_feature_file(c1.resolve(c1.records[0].feature_path));
  double diff = 0.0;
  for (std::size_t i = 0; i < cf.data.size(); ++i)
    diff += std::fabs(cf.data[i] - back.data[i]);
  CHECK(diff > 0.1);
}
