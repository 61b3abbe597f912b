// tests/test_metrics.cpp

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

#include <cmath>
#include <string>
#include <vector>

#include "affectkit/metrics.hpp"
#include "affectkit/rng.hpp"
#include "oracles.hpp"

using namespace affectkit;

TEST_CASE("ccc worked examples") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(ccc(x, std::vector<double>{1, 2, 3}).ccc == Catch::Approx(1.0).margin(1e-12));
  CHECK(ccc(x, std::vector<double>{5, 5, 5}).ccc == Catch::Approx(0.0).margin(1e-12));
  // covar = 2/3, var_x = var_y = 2/3, mean gap 1 -> 2*(2/3) / (2/3+2/3+1) = 4/7
  const auto b = ccc(x, std::vector<double>{2, 3, 4});
  CHECK(b.ccc == Catch::Approx(4.0 / 7.0).margin(1e-12));
  CHECK(b.covar == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(b.var_x == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(b.mean_x == Catch::Approx(2.0).margin(1e-12));
  CHECK(b.mean_y == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("ccc reconstructs from its moments") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(16), y(16);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(-3, 3);
      y[i] = rng.uniform(-3, 3);
    }
    const auto b = ccc(x, y);
    const double dm = b.mean_x - b.mean_y;
    const double rebuilt = 2.0 * b.covar / (b.var_x + b.var_y + dm * dm);
    CHECK(b.ccc == Catch::Approx(rebuilt).margin(1e-12));
  }
}

TEST_CASE("ccc matches the raw-moment reference") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-5, 5);
      y[i] = rng.uniform(-5, 5);
    }
    CHECK(ccc(x, y).ccc == Catch::Approx(akt::ccc_reference(x, y)).margin(1e-9));
  }
}

TEST_CASE("ccc properties") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.index(20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-4, 4);
      y[i] = rng.uniform(-4, 4);
    }
    const double a = ccc(x, y).ccc;
    const double b = ccc(y, x).ccc;
    CHECK(a == Catch::Approx(b).margin(1e-12));  // symmetry
    CHECK(std::fabs(a) <= 1.0 + 1e-12);          // magnitude bound
  }

  // Shift sensitivity: ccc(x, x+b) < 1 for b != 0 distinguishes CCC from
  // Pearson correlation.
  std::vector<double> x = {0.3, -1.2, 2.0, 0.7, -0.4};
  CHECK(ccc(x, x).ccc == Catch::Approx(1.0).margin(1e-12));
  std::vector<double> shifted = x;
  for (auto& v : shifted) v += 0.5;
  CHECK(ccc(x, shifted).ccc < 1.0 - 1e-6);

  // Perfect negative agreement about the mean.
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> neg = x;
  for (auto& v : neg) v = -v + 2.0 * mean;
  CHECK(ccc(x, neg).ccc == Catch::Approx(-1.0).margin(1e-12));

  // Scaling: ccc(x, a*x) = 1 only at a = 1.
  std::vector<double> scaled = x;
  for (auto& v : scaled) v *= 1.7;
  CHECK(ccc(x, scaled).ccc < 1.0 - 1e-6);
}

TEST_CASE("ccc input validation") {
  std::vector<double> x = {1, 2, 3};
  CHECK_THROWS_AS(ccc(x, std::vector<double>{1, 2}), InvalidInput);
  CHECK_THROWS_AS(ccc(std::vector<double>{1}, std::vector<double>{2}), InvalidInput);
  std::vector<double> bad = {1, std::nan(""), 3};
  CHECK_THROWS_AS(ccc(x, bad), InvalidInput);
}

namespace {

// Builds a batch column with a requested CCC against the fixed target
// [-1, 1]: x = [-t, t] with t solving 2t/(t^2+1) = c.
double t_for_ccc(double c) { return (1.0 - std::sqrt(1.0 - c * c)) / c; }

}  // namespace

TEST_CASE("ccc_loss worked examples") {
  std::vector<EmotionTriple> target = {{-1, -1, -1}, {1, 1, 1}};

  SECTION("perfect agreement gives -1") {
    std::vector<EmotionTriple> pred = target;
    CHECK(ccc_loss(pred, target) == Catch::Approx(-1.0).margin(1e-12));
  }

  SECTION("per-dimension combination with equal thirds") {
    // Per-dimension CCCs (act, val, dom) = (0.71, 0.33, 0.64); the loss is
    // minus their arithmetic mean = -0.56.
    const double ta = t_for_ccc(0.71), tv = t_for_ccc(0.33), td = t_for_ccc(0.64);
    std::vector<EmotionTriple> pred = {{-ta, -tv, -td}, {ta, tv, td}};
    CHECK(ccc_loss(pred, target) == Catch::Approx(-0.56).margin(1e-9));
  }

  SECTION("alpha=1 collapses onto valence") {
    const double tv = t_for_ccc(0.5);
    std::vector<EmotionTriple> pred = {{0.4, -tv, -0.9}, {-0.2, tv, 0.3}};
    CHECK(ccc_loss(pred, target, LossWeights{1.0, 0.0}) ==
          Catch::Approx(-0.5).margin(1e-9));
  }

  SECTION("batch permutation invariance") {
    std::vector<EmotionTriple> pred = {{0.1, 0.4, -0.3}, {0.9, -0.6, 0.2},
                                       {-1.2, 0.3, 0.8}};
    std::vector<EmotionTriple> tgt = {{0.0, 0.5, -0.1}, {1.1, -0.2, 0.4},
                                      {-0.9, 0.1, 0.6}};
    const double base = ccc_loss(pred, tgt);
    std::vector<EmotionTriple> pred2 = {pred[2], pred[0], pred[1]};
    std::vector<EmotionTriple> tgt2 = {tgt[2], tgt[0], tgt[1]};
    CHECK(ccc_loss(pred2, tgt2) == Catch::Approx(base).margin(1e-12));
  }

  SECTION("rejects undersized batches and bad weights") {
    std::vector<EmotionTriple> one = {{1, 2, 3}};
    CHECK_THROWS_AS(ccc_loss(one, one), InvalidInput);
    std::vector<EmotionTriple> two = {{1, 2, 3}, {2, 3, 4}};
    CHECK_THROWS_AS(ccc_loss(two, two, LossWeights{0.8, 0.8}), InvalidInput);
  }
}

TEST_CASE("align worked examples") {
  auto toks = [](const std::string& s) { return normalize_tokens(s); };

  auto a = align(toks("a b c"), toks("a b c"));
  CHECK(a.hits == 3);
  CHECK(a.substitutions == 0);
  CHECK(a.deletions == 0);
  CHECK(a.insertions == 0);

  a = align(toks("a b c"), toks(""));
  CHECK(a.hits == 0);
  CHECK(a.deletions == 3);
  CHECK(a.insertions == 0);

  a = align(toks("a b c"), toks("a x c d"));
  CHECK(a.hits == 2);
  CHECK(a.substitutions == 1);
  CHECK(a.deletions == 0);
  CHECK(a.insertions == 1);
}

TEST_CASE("align accounting invariants and substitution preference") {
  Rng rng(31);
  const std::vector<std::string> symbols = {"a", "b", "c"};
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<std::string> ref(rng.index(7)), hyp(rng.index(7));
    for (auto& t : ref) t = symbols[rng.index(3)];
    for (auto& t : hyp) t = symbols[rng.index(3)];
    const auto a = align(ref, hyp);
    CHECK(a.hits + a.substitutions + a.deletions == a.ref_len);
    CHECK(a.hits + a.substitutions + a.insertions == a.hyp_len);
    CHECK(a.substitutions + a.deletions + a.insertions ==
          akt::edit_distance_memo(ref, hyp));
  }

  // "ab" vs "ba" has a co-optimal hit-bearing path; the backtrace prefers
  // the all-substitution one.
  std::vector<std::string> ref = {"a", "b"}, hyp = {"b", "a"};
  const auto a = align(ref, hyp);
  CHECK(a.substitutions == 2);
  CHECK(a.hits == 0);
}

TEST_CASE("edit distance oracles agree on short sequences") {
  const std::vector<std::string> symbols = {"a", "b", "c"};
  const auto seqs = akt::all_sequences(symbols, 3);
  for (const auto& r : seqs)
    for (const auto& h : seqs)
      CHECK(akt::edit_distance_enum(r, h) == akt::edit_distance_memo(r, h));
}

TEST_CASE("transcript_metrics worked examples") {
  Alignment a{3, 0, 0, 0, 3, 3};
  auto m = transcript_metrics(a);
  CHECK(m.wer == 0.0);
  CHECK(m.mer == 0.0);
  CHECK(m.wil == 0.0);

  a = {2, 1, 0, 1, 3, 4};
  m = transcript_metrics(a);
  CHECK(m.wer == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(m.mer == Catch::Approx(0.5).margin(1e-12));
  CHECK(m.wil == Catch::Approx(2.0 / 3.0).margin(1e-12));

  a = {0, 0, 3, 0, 3, 0};
  m = transcript_metrics(a);
  CHECK(m.wer == 1.0);
  CHECK(m.mer == 1.0);
  CHECK(m.wil == 1.0);

  CHECK_THROWS_AS(transcript_metrics(Alignment{0, 0, 0, 0, 0, 0}), InvalidInput);
}

TEST_CASE("transcript metric bounds on random alignments") {
  Rng rng(47);
  const std::vector<std::string> symbols = {"x", "y", "z", "w"};
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<std::string> ref(1 + rng.index(8)), hyp(rng.index(9));
    for (auto& t : ref) t = symbols[rng.index(4)];
    for (auto& t : hyp) t = symbols[rng.index(4)];
    const auto m = transcript_metrics(align(ref, hyp));
    CHECK(m.mer <= m.wer + 1e-12);
    CHECK(m.wil >= -1e-12);
    CHECK(m.wil <= 1.0 + 1e-12);
    CHECK(m.mer >= -1e-12);
    CHECK(m.mer <= 1.0 + 1e-12);
  }
}

TEST_CASE("token normalization") {
  auto t = normalize_tokens("Hello, World!  two");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == "hello");
  CHECK(t[1] == "world");
  CHECK(t[2] == "two");
  CHECK(normalize_tokens("  ...  ").empty());
  TokenizeConfig keep;
  keep.lowercase = false;
  keep.strip_punct = false;
  auto raw = normalize_tokens("Ab, c", keep);
  REQUIRE(raw.size() == 2);
  CHECK(raw[0] == "Ab,");
}

namespace {

WerRecord make_record(double act, double val, double dom, const std::string& ref,
                      const std::string& hyp) {
  WerRecord r;
  r.labels = {act, val, dom};
  r.ref_tokens = normalize_tokens(ref);
  r.hyp_tokens = normalize_tokens(hyp);
  return r;
}

}  // namespace

TEST_CASE("wer_by_band partitions and pools") {
  const std::optional<BandEdges> edges[3] = {BandEdges{3.0, 5.0},
                                             BandEdges{3.0, 5.0},
                                             BandEdges{3.0, 5.0}};

  SECTION("identical transcripts give zero error everywhere") {
    std::vector<WerRecord> recs = {make_record(2, 4, 6, "a b", "a b"),
                                   make_record(6, 2, 4, "c d e", "c d e")};
    const auto report = wer_by_band(recs, edges);
    for (const auto& row : report.rows) {
      if (row.metrics) {
        CHECK(row.metrics->wer == 0.0);
        CHECK(row.metrics->wil == 0.0);
      }
    }
  }

  SECTION("a high-valence record lands only in the valence high band") {
    std::vector<WerRecord> recs = {make_record(4, 6.5, 4, "a b", "a x")};
    const auto report = wer_by_band(recs, edges);
    for (const auto& row : report.rows) {
      const bool expect_here =
          (row.dimension == "val" && row.band == "high") ||
          (row.dimension != "val" && row.band == "neutral");
      CHECK(row.n_utts == (expect_here ? 1u : 0u));
      CHECK(row.metrics.has_value() == expect_here);
    }
  }

  SECTION("pooled WER equals summed errors over summed ref tokens") {
    // Both records sit in the activation low band: 1+2 errors over 2+4
    // reference tokens -> pooled WER 0.5.
    std::vector<WerRecord> recs = {
        make_record(1.5, 4, 4, "a b", "a x"),
        make_record(2.0, 4, 4, "c d e f", "c d"),
    };
    const auto report = wer_by_band(recs, edges);
    for (const auto& row : report.rows) {
      if (row.dimension == "act" && row.band == "low") {
        REQUIRE(row.metrics.has_value());
        CHECK(row.n_utts == 2);
        CHECK(row.metrics->wer == Catch::Approx(0.5).margin(1e-12));
      }
      if (row.dimension == "act" && row.band == "high") {
        CHECK(row.n_utts == 0);
        CHECK_FALSE(row.metrics.has_value());
      }
    }
  }

  SECTION("tertile default edges are recorded") {
    std::vector<WerRecord> recs;
    for (int i = 0; i < 9; ++i)
      recs.push_back(make_record(1.0 + i * 0.5, 4, 4, "a", "a"));
    const std::optional<BandEdges> none[3] = {std::nullopt, std::nullopt,
                                              std::nullopt};
    const auto report = wer_by_band(recs, none);
    CHECK(report.edges_source == "tertile");
    CHECK(report.edges[0].low_cut < report.edges[0].high_cut);
    const auto csv = banded_report_csv(report);
    CHECK(csv.find("source=tertile") != std::string::npos);
    CHECK(csv.find("dimension,band,n_utts,wer,mer,wil") != std::string::npos);
  }
}
