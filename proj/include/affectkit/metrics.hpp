// metrics/metrics.hpp

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

#ifndef AFFECTKIT_METRICS_HPP
#define AFFECTKIT_METRICS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectkit/csv.hpp"
#include "affectkit/error.hpp"

namespace affectkit {

// Dimensional emotion target: activation, valence, dominance on the label
// scale (7-point likert by default).
struct EmotionTriple {
  double act = 0.0;
  double val = 0.0;
  double dom = 0.0;

  double dim(std::size_t k) const {
    switch (k) {
      case 0: return act;
      case 1: return val;
      case 2: return dom;
      default: throw InvalidInput("emotion dimension index out of range");
    }
  }
  double& dim(std::size_t k) {
    switch (k) {
      case 0: return act;
      case 1: return val;
      case 2: return dom;
      default: throw InvalidInput("emotion dimension index out of range");
    }
  }
};

inline constexpr const char* kDimNames[3] = {"act", "val", "dom"};
inline constexpr std::size_t kNumDims = 3;

// Denominator guard for degenerate (constant/constant, equal-mean) inputs.
inline constexpr double kCccDenEps = 1e-12;

// Concordance correlation coefficient with its component moments:
//   CCC = 2*rho*sx*sy / (sx^2 + sy^2 + (mx - my)^2)
// computed with population (1/N) moments.  rho*sx*sy is kept as `covar`.
struct CccBreakdown {
  double ccc = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double covar = 0.0;
};

inline CccBreakdown ccc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidInput("ccc: length mismatch (" + std::to_string(x.size()) +
                       " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw InvalidInput("ccc: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InvalidInput("ccc: non-finite value at index " + std::to_string(i));
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  CccBreakdown out;
  out.mean_x = mx;
  out.mean_y = my;
  out.var_x = vx;
  out.var_y = vy;
  out.covar = cxy;
  const double den = vx + vy + (mx - my) * (mx - my);
  out.ccc = den < kCccDenEps ? 0.0 : 2.0 * cxy / den;
  return out;
}

// Weights of the combined loss: alpha on valence, beta on activation,
// 1 - alpha - beta on dominance.
struct LossWeights {
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
};

inline void validate(const LossWeights& w) {
  check_input(w.alpha >= 0.0 && w.beta >= 0.0 && w.alpha + w.beta <= 1.0,
              "loss weights must satisfy alpha,beta >= 0 and alpha+beta <= 1");
}

// L_ccc = -(alpha*CCC_v + beta*CCC_a + (1-alpha-beta)*CCC_d), each CCC taken
// across the batch dimension.
inline double ccc_loss(std::span<const EmotionTriple> pred,
                       std::span<const EmotionTriple> target,
                       const LossWeights& w = {}) {
  validate(w);
  if (pred.size() != target.size())
    throw InvalidInput("ccc_loss: batch size mismatch");
  if (pred.size() < 2)
    throw InvalidInput("ccc_loss: CCC is undefined on batches smaller than 2");
  double per_dim[3];
  std::vector<double> px(pred.size()), tx(pred.size());
  for (std::size_t k = 0; k < kNumDims; ++k) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      px[i] = pred[i].dim(k);
      tx[i] = target[i].dim(k);
    }
    per_dim[k] = ccc(px, tx).ccc;
  }
  const double wa = w.beta;                    // activation
  const double wv = w.alpha;                   // valence
  const double wd = 1.0 - w.alpha - w.beta;    // dominance
  return -(wv * per_dim[1] + wa * per_dim[0] + wd * per_dim[2]);
}

// ---------------------------------------------------------------------------
// Transcript error metrics.

struct Alignment {
  std::size_t hits = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;
  std::size_t hyp_len = 0;

  Alignment& operator+=(const Alignment& o) {
    hits += o.hits;
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    hyp_len += o.hyp_len;
    return *this;
  }
};

struct TokenizeConfig {
  bool lowercase = true;
  bool strip_punct = true;
};

// Lowercase, strip punctuation, split on whitespace.  Tokens that become
// empty after stripping are dropped.
inline std::vector<std::string> normalize_tokens(const std::string& text,
                                                 const TokenizeConfig& cfg = {}) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (cfg.strip_punct && std::ispunct(c)) {
      continue;
    } else {
      cur += cfg.lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    }
  }
  flush();
  return tokens;
}

// Minimum-edit-distance alignment with unit costs.  At backtrace ties the
// preference order is substitution (diagonal), then insertion, then deletion.
inline Alignment align(std::span<const std::string> ref,
                       std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t ins = at(i, j - 1) + 1;
      const std::size_t del = at(i - 1, j) + 1;
      at(i, j) = std::min({sub, ins, del});
    }
  }
  Alignment a;
  a.ref_len = n;
  a.hyp_len = m;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] == hyp[j - 1])
        ++a.hits;
      else
        ++a.substitutions;
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++a.insertions;
      --j;
    } else {
      ++a.deletions;
      --i;
    }
  }
  return a;
}

struct TranscriptMetrics {
  double wer = 0.0;  // (S+D+I)/ref_len, may exceed 1
  double mer = 0.0;  // (S+D+I)/(H+S+D+I)
  double wil = 0.0;  // 1 - H^2/(ref_len*hyp_len)
};

inline TranscriptMetrics transcript_metrics(const Alignment& a) {
  if (a.ref_len == 0)
    throw InvalidInput("transcript_metrics: empty reference");
  const double errors =
      static_cast<double>(a.substitutions + a.deletions + a.insertions);
  TranscriptMetrics out;
  out.wer = errors / static_cast<double>(a.ref_len);
  out.mer = errors / static_cast<double>(a.hits + a.substitutions +
                                         a.deletions + a.insertions);
  if (a.hyp_len == 0) {
    out.wil = 1.0;
  } else {
    const double h = static_cast<double>(a.hits);
    out.wil = 1.0 - h * h / (static_cast<double>(a.ref_len) *
                             static_cast<double>(a.hyp_len));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Banded WER report (error metrics by low/neutral/high label range, each
// dimension treated independently).

struct WerRecord {
  EmotionTriple labels;
  std::vector<std::string> ref_tokens;
  std::vector<std::string> hyp_tokens;
};

struct BandEdges {
  double low_cut = 0.0;
  double high_cut = 0.0;
};

inline constexpr const char* kBandNames[3] = {"low", "neutral", "high"};

struct BandedRow {
  std::string dimension;
  std::string band;
  std::size_t n_utts = 0;
  Alignment pooled;
  std::optional<TranscriptMetrics> metrics;  // empty band -> null metrics
};

struct BandedReport {
  std::vector<BandedRow> rows;              // 3 dims x 3 bands
  BandEdges edges[3];
  std::string edges_source = "config";      // "config" or "tertile"
};

// Nearest-rank quantile of a sorted copy; pinned so reports are reproducible.
inline double quantile_nearest_rank(std::vector<double> v, double q) {
  check_input(!v.empty(), "quantile of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  if (rank > n) rank = n;
  return v[rank - 1];
}

inline BandEdges tertile_edges(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  BandEdges e;
  e.low_cut = quantile_nearest_rank(v, 1.0 / 3.0);
  e.high_cut = quantile_nearest_rank(v, 2.0 / 3.0);
  return e;
}

// Pooled per-band metrics: counts are summed over the records in a band and
// the WER/MER/WIL formulas are applied to the sums.
inline BandedReport wer_by_band(std::span<const WerRecord> records,
                                const std::optional<BandEdges> (&edges)[3]) {
  BandedReport report;
  for (std::size_t k = 0; k < kNumDims; ++k) {
    if (edges[k].has_value()) {
      report.edges[k] = *edges[k];
      check_input(report.edges[k].low_cut < report.edges[k].high_cut,
                  "band edges must satisfy low_cut < high_cut");
    } else {
      // Tertiles of a degenerate label distribution may coincide; all
      // records then fall in the neutral band.
      std::vector<double> vals;
      vals.reserve(records.size());
      for (const auto& r : records) vals.push_back(r.labels.dim(k));
      report.edges[k] = tertile_edges(vals);
      report.edges_source = "tertile";
    }
  }
  for (std::size_t k = 0; k < kNumDims; ++k) {
    Alignment pooled[3];
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& r : records) {
      const double v = r.labels.dim(k);
      std::size_t band = 1;
      if (v < report.edges[k].low_cut)
        band = 0;
      else if (v > report.edges[k].high_cut)
        band = 2;
      pooled[band] += align(r.ref_tokens, r.hyp_tokens);
      ++counts[band];
    }
    for (std::size_t b = 0; b < 3; ++b) {
      BandedRow row;
      row.dimension = kDimNames[k];
      row.band = kBandNames[b];
      row.n_utts = counts[b];
      row.pooled = pooled[b];
      if (counts[b] > 0 && pooled[b].ref_len > 0)
        row.metrics = transcript_metrics(pooled[b]);
      report.rows.push_back(row);
    }
  }
  return report;
}

// CSV schema: dimension,band,n_utts,wer,mer,wil with 6-decimal floats.
// Band edges (and whether they came from tertiles) are recorded as comment
// lines above the header.
inline std::string banded_report_csv(const BandedReport& report) {
  std::string out;
  for (std::size_t k = 0; k < kNumDims; ++k) {
    out += "# " + std::string(kDimNames[k]) +
           " band edges: low_cut=" + format_fixed6(report.edges[k].low_cut) +
           " high_cut=" + format_fixed6(report.edges[k].high_cut) +
           " source=" + report.edges_source + "\n";
  }
  out += "dimension,band,n_utts,wer,mer,wil\n";
  for (const auto& row : report.rows) {
    out += row.dimension + "," + row.band + "," + std::to_string(row.n_utts);
    if (row.metrics) {
      out += "," + format_fixed6(row.metrics->wer) + "," +
             format_fixed6(row.metrics->mer) + "," +
             format_fixed6(row.metrics->wil);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

}  // namespace affectkit

#endif  // AFFECTKIT_METRICS_HPP
