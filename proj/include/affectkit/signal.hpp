// signal/signal.hpp

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

#ifndef AFFECTKIT_SIGNAL_HPP
#define AFFECTKIT_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectkit/error.hpp"
#include "affectkit/feature.hpp"
#include "affectkit/rng.hpp"
#include "affectkit/wav.hpp"

namespace affectkit {

// Front-end settings for the 43-dim MFBF0 feature: 40 log mel-filterbank
// energies plus pitch, pitch-delta and voicing.
struct FrontendConfig {
  double frame_len = 0.025;   // seconds
  double frame_hop = 0.010;   // seconds
  std::size_t n_mel = 40;
  double fmin = 20.0;         // Hz
  double fmax = 7600.0;       // Hz
  double pitch_fmin = 60.0;   // Hz
  double pitch_fmax = 400.0;  // Hz
  double log_floor = 1e-10;
  double voicing_threshold = 0.5;

  std::size_t win_samples(double sample_rate) const {
    return static_cast<std::size_t>(std::llround(frame_len * sample_rate));
  }
  std::size_t hop_samples(double sample_rate) const {
    return static_cast<std::size_t>(std::llround(frame_hop * sample_rate));
  }
};

inline void validate_frontend(const FrontendConfig& cfg, double sample_rate) {
  check_input(sample_rate > 0, "sample rate must be positive");
  check_input(cfg.frame_hop > 0 && cfg.frame_hop <= cfg.frame_len,
              "need 0 < frame_hop <= frame_len");
  check_input(cfg.n_mel >= 1, "need at least one mel band");
  check_input(cfg.fmin < cfg.fmax && cfg.fmax <= sample_rate / 2.0 + 1e-9,
              "need fmin < fmax <= Nyquist");
  check_input(cfg.pitch_fmin < cfg.pitch_fmax &&
                  cfg.pitch_fmax < sample_rate / 2.0,
              "need pitch_fmin < pitch_fmax < Nyquist");
}

inline std::size_t frame_count(std::size_t n_samples, std::size_t win,
                               std::size_t hop) {
  if (n_samples < win) return 0;
  return 1 + (n_samples - win) / hop;
}

inline std::vector<double> hann_window(std::size_t win) {
  std::vector<double> w(win);
  for (std::size_t n = 0; n < win; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                static_cast<double>(win - 1));
  return w;
}

// Hann-windowed power spectrogram, frames x (win/2 + 1).  The DFT length
// equals the window length, so a sinusoid exactly on a bin stays confined to
// a 3-bin neighborhood.  Direct evaluation with precomputed twiddles; fine
// at the frame sizes this front-end uses.
inline FeatureSequence stft_power(const Waveform& w, const FrontendConfig& cfg) {
  validate_frontend(cfg, w.sample_rate);
  const std::size_t win = cfg.win_samples(w.sample_rate);
  const std::size_t hop = cfg.hop_samples(w.sample_rate);
  check_input(win >= 2, "frame too short");
  if (w.samples.size() < win)
    throw InvalidInput("waveform shorter than one frame (" +
                       std::to_string(w.samples.size()) + " < " +
                       std::to_string(win) + " samples)");
  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);
  const std::size_t n_bins = win / 2 + 1;
  const auto window = hann_window(win);

  std::vector<double> cos_t(n_bins * win), sin_t(n_bins * win);
  for (std::size_t k = 0; k < n_bins; ++k) {
    for (std::size_t n = 0; n < win; ++n) {
      const double a = 2.0 * kPi * static_cast<double>(k) *
                       static_cast<double>(n) / static_cast<double>(win);
      cos_t[k * win + n] = std::cos(a);
      sin_t[k * win + n] = std::sin(a);
    }
  }

  FeatureSequence out(n_frames, n_bins);
  std::vector<double> frame(win);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) {
      if (!std::isfinite(x[n])) throw InvalidInput("non-finite sample");
      frame[n] = x[n] * window[n];
    }
    for (std::size_t k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      const double* ct = cos_t.data() + k * win;
      const double* st = sin_t.data() + k * win;
      for (std::size_t n = 0; n < win; ++n) {
        re += frame[n] * ct[n];
        im -= frame[n] * st[n];
      }
      out.at(t, k) = re * re + im * im;
    }
  }
  return out;
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

// Mel-spaced center frequencies, n_mel + 2 points spanning [fmin, fmax].
inline std::vector<double> mel_center_frequencies(const FrontendConfig& cfg) {
  const double mlo = hz_to_mel(cfg.fmin), mhi = hz_to_mel(cfg.fmax);
  std::vector<double> centers(cfg.n_mel + 2);
  for (std::size_t i = 0; i < centers.size(); ++i)
    centers[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) /
                                     static_cast<double>(cfg.n_mel + 1));
  return centers;
}

// Log mel-filterbank energies from a power spectrogram.  Triangular filters
// with unit peak; log(max(energy, log_floor)).
inline FeatureSequence mel_energies(const FeatureSequence& spec,
                                    double sample_rate,
                                    const FrontendConfig& cfg) {
  validate_frontend(cfg, sample_rate);
  check_input(spec.dim >= 2, "spectrogram must have at least two bins");
  const std::size_t win = (spec.dim - 1) * 2;
  const auto centers = mel_center_frequencies(cfg);

  std::vector<std::vector<double>> filters(cfg.n_mel,
                                           std::vector<double>(spec.dim, 0.0));
  for (std::size_t j = 0; j < cfg.n_mel; ++j) {
    const double lo = centers[j], mid = centers[j + 1], hi = centers[j + 2];
    for (std::size_t k = 0; k < spec.dim; ++k) {
      const double f = static_cast<double>(k) * sample_rate /
                       static_cast<double>(win);
      if (f <= lo || f >= hi) continue;
      filters[j][k] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }

  FeatureSequence out(spec.frames, cfg.n_mel);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t j = 0; j < cfg.n_mel; ++j) {
      double e = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k)
        e += filters[j][k] * spec.at(t, k);
      out.at(t, j) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

// Per-frame f0 (Hz), f0 delta (Hz/frame) and voicing in [0,1] from the
// normalized autocorrelation over lags [sr/pitch_fmax, sr/pitch_fmin].
// The reported lag is the smallest one within 0.01 of the peak value, which
// damps octave errors on strongly periodic frames.
inline FeatureSequence pitch_voicing(const Waveform& w, const FrontendConfig& cfg) {
  validate_frontend(cfg, w.sample_rate);
  const std::size_t win = cfg.win_samples(w.sample_rate);
  const std::size_t hop = cfg.hop_samples(w.sample_rate);
  if (w.samples.size() < win)
    throw InvalidInput("waveform shorter than one frame");
  const std::size_t lag_min = static_cast<std::size_t>(
      std::ceil(w.sample_rate / cfg.pitch_fmax));
  const std::size_t lag_max = static_cast<std::size_t>(
      std::floor(w.sample_rate / cfg.pitch_fmin));
  check_input(lag_min >= 1 && lag_max < win,
              "pitch lag range does not fit in the analysis frame");

  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);
  FeatureSequence out(n_frames, 3);
  double prev_f0 = 0.0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    double best = 0.0;
    std::size_t best_lag = 0;
    std::vector<double> corr(lag_max + 1, 0.0);
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      const std::size_t m = win - lag;
      for (std::size_t n = 0; n < m; ++n) {
        num += x[n] * x[n + lag];
        e0 += x[n] * x[n];
        e1 += x[n + lag] * x[n + lag];
      }
      const double den = std::sqrt(e0 * e1);
      const double r = den > 0.0 ? num / den : 0.0;
      corr[lag] = r;
      if (r > best) {
        best = r;
        best_lag = lag;
      }
    }
    if (best_lag > 0) {
      for (std::size_t lag = lag_min; lag < best_lag; ++lag) {
        if (corr[lag] >= best - 0.01) {
          best_lag = lag;
          break;
        }
      }
    }
    const double voicing = std::clamp(best, 0.0, 1.0);
    const double f0 = (best_lag > 0 && voicing >= cfg.voicing_threshold)
                          ? w.sample_rate / static_cast<double>(best_lag)
                          : 0.0;
    out.at(t, 0) = f0;
    out.at(t, 1) = t == 0 ? 0.0 : f0 - prev_f0;
    out.at(t, 2) = voicing;
    prev_f0 = f0;
  }
  return out;
}

// MFBF0 = [n_mel log mel energies | f0 | f0-delta | voicing] per frame,
// with identical framing for both paths (43 columns at the defaults).
inline FeatureSequence extract_mfbf0(const Waveform& w, const FrontendConfig& cfg = {}) {
  const FeatureSequence mel = mel_energies(stft_power(w, cfg), w.sample_rate, cfg);
  const FeatureSequence pv = pitch_voicing(w, cfg);
  check_input(mel.frames == pv.frames, "front-end framing mismatch");
  FeatureSequence out(mel.frames, cfg.n_mel + 3);
  for (std::size_t t = 0; t < mel.frames; ++t) {
    for (std::size_t j = 0; j < cfg.n_mel; ++j) out.at(t, j) = mel.at(t, j);
    out.at(t, cfg.n_mel + 0) = pv.at(t, 0);
    out.at(t, cfg.n_mel + 1) = pv.at(t, 1);
    out.at(t, cfg.n_mel + 2) = pv.at(t, 2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corruption pipeline: SNR-banded noise addition followed by reverberation.

// One evaluation condition: an SNR band plus optional reverberation, either
// a supplied impulse response or a synthetic one from rt60.
struct CorruptionSpec {
  double snr_low_db = 0.0;
  double snr_high_db = 0.0;
  std::optional<Waveform> rir;
  std::optional<double> rt60;  // seconds, for a synthetic impulse response
  std::uint64_t seed = 0;
};

inline void validate(const CorruptionSpec& spec) {
  check_input(spec.snr_low_db <= spec.snr_high_db,
              "need snr_low_db <= snr_high_db");
  if (spec.rt60) check_input(*spec.rt60 > 0, "rt60 must be positive");
}

struct MixResult {
  Waveform mixed;
  double gain = 0.0;           // applied to the noise
  double snr_db = 0.0;         // achieved pre-clipping (= requested)
  double clip_fraction = 0.0;  // fraction of samples clamped to [-1,1]
};

inline double mean_square(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

// clean + g*noise with g chosen so 10*log10(P_clean / P_scaled_noise) equals
// snr_db; powers are mean squares over the clean-signal extent.  The output
// is clamped to [-1, 1]; the clip fraction is reported rather than
// renormalizing, so the clean-signal level is never silently changed.
inline MixResult mix_at_snr(const Waveform& clean, const Waveform& noise,
                            double snr_db) {
  check_input(clean.sample_rate == noise.sample_rate,
              "sample rate mismatch between clean and noise");
  check_input(!clean.samples.empty(), "empty clean signal");
  check_input(noise.samples.size() >= clean.samples.size(),
              "noise shorter than clean signal; pre-tile the noise");
  const std::size_t n = clean.samples.size();
  const double p_clean = mean_square(clean.samples);
  const double p_noise = mean_square({noise.samples.data(), n});
  check_input(p_clean > 0.0, "zero-power clean signal; SNR undefined");
  check_input(p_noise > 0.0, "zero-power noise; SNR undefined");

  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  MixResult out;
  out.gain = gain;
  out.snr_db = 10.0 * std::log10(p_clean / (gain * gain * p_noise));
  out.mixed.sample_rate = clean.sample_rate;
  out.mixed.samples.resize(n);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = clean.samples[i] + gain * noise.samples[i];
    if (v > 1.0) {
      v = 1.0;
      ++clipped;
    } else if (v < -1.0) {
      v = -1.0;
      ++clipped;
    }
    out.mixed.samples[i] = v;
  }
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return out;
}

// Uniform draw from the spec's SNR band.
inline double sample_snr(const CorruptionSpec& spec, Rng& rng) {
  validate(spec);
  return rng.uniform(spec.snr_low_db, spec.snr_high_db);
}

// 60 dB amplitude decay at t = rt60.
inline constexpr double kRt60DecayLog = 6.90775527898213705205397436405309;

// Synthetic room impulse response: unit direct-path sample at t=0 followed
// by white noise under an exponential envelope that reaches -60 dB at rt60.
inline Waveform synth_rir(double rt60, double sample_rate, double duration,
                          Rng& rng) {
  check_input(rt60 > 0, "rt60 must be positive");
  check_input(duration >= rt60, "RIR duration must cover rt60");
  Waveform h;
  h.sample_rate = sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  h.samples.resize(n, 0.0);
  h.samples[0] = 1.0;
  const double tail_sigma = 0.35;
  for (std::size_t t = 1; t < n; ++t) {
    const double env = std::exp(-kRt60DecayLog * static_cast<double>(t) /
                                (rt60 * sample_rate));
    h.samples[t] = tail_sigma * rng.normal() * env;
  }
  return h;
}

inline std::string format_rt60(double rt60) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", rt60);
  return buf;
}

struct CorruptResult {
  Waveform out;
  double snr_db = 0.0;         // the sampled target
  double gain = 0.0;           // noise gain actually applied
  double clip_fraction = 0.0;  // from the mixing stage
  double peak_scale = 1.0;     // post-reverb normalization divisor, if any
  std::string rir_id = "none";
};

// Noise mixing at a sampled SNR, then reverberation, truncated to the input
// length and peak-normalized only if the convolution exceeds full scale.
inline CorruptResult corrupt(const Waveform& clean, const Waveform& noise,
                             const CorruptionSpec& spec, Rng& rng) {
  validate(spec);
  CorruptResult result;
  result.snr_db = sample_snr(spec, rng);
  MixResult mix = mix_at_snr(clean, noise, result.snr_db);
  result.gain = mix.gain;
  result.clip_fraction = mix.clip_fraction;

  const Waveform* rir = nullptr;
  Waveform synthetic;
  if (spec.rir) {
    check_input(spec.rir->sample_rate == clean.sample_rate,
                "RIR sample rate mismatch");
    rir = &*spec.rir;
    result.rir_id = "supplied";
  } else if (spec.rt60) {
    synthetic = synth_rir(*spec.rt60, clean.sample_rate, *spec.rt60, rng);
    rir = &synthetic;
    result.rir_id = "synth_rt60_" + format_rt60(*spec.rt60);
  }

  if (rir == nullptr) {
    result.out = std::move(mix.mixed);
    return result;
  }

  const std::size_t n = mix.mixed.samples.size();
  result.out.sample_rate = clean.sample_rate;
  result.out.samples.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const std::size_t jmax = std::min(i + 1, rir->samples.size());
    for (std::size_t j = 0; j < jmax; ++j)
      acc += rir->samples[j] * mix.mixed.samples[i - j];
    result.out.samples[i] = acc;
  }
  double peak = 0.0;
  for (double v : result.out.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 1.0) {
    for (double& v : result.out.samples) v /= peak;
    result.peak_scale = peak;
  }
  return result;
}

}  // namespace affectkit

#endif  // AFFECTKIT_SIGNAL_HPP
