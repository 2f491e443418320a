// Copyright 2026 The TriDep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tridep/speech_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tridep/error.hpp"
#include "tridep/spectral.hpp"

namespace tridep::speech {

SpeechSegmentMatrix preprocess_speech(const dsp::SignalBuffer& wav, int recording_index,
                                      const PreprocessOptions& opts) {
  SpeechSegmentMatrix out;
  out.recording_index = recording_index;
  if (wav.empty()) return out;

  auto sig = dsp::resample(wav, kSampleRate);
  sig = dsp::to_mono(sig);
  sig = dsp::amplitude_normalize(sig);
  auto trimmed = dsp::trim_silence(sig, opts.silence_threshold_db);
  if (!trimmed) return out;
  sig = dsp::median_denoise(*trimmed, opts.median_kernel);

  const auto seg = dsp::window_segments(sig, {kWindowSeconds, kHopSeconds, true});
  out.rows = seg.segments;
  out.data = seg.data;
  return out;
}

// ---------------------------------------------------------------------------
// MFCC

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelBank {
  // kMelFilters x (kFftSize/2 + 1)
  std::vector<double> weights;
};

const MelBank& mel_bank() {
  static const MelBank bank = [] {
    constexpr std::size_t nbins = kFftSize / 2 + 1;
    MelBank b;
    b.weights.assign(kMelFilters * nbins, 0.0);
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(kSampleRate / 2.0);
    std::array<double, kMelFilters + 2> edges{};
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                        static_cast<double>(kMelFilters + 1));
    }
    for (std::size_t m = 0; m < kMelFilters; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      for (std::size_t k = 0; k < nbins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(kFftSize);
        const double w = std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid));
        b.weights[m * nbins + k] = std::max(0.0, w);
      }
    }
    return b;
  }();
  return bank;
}

const std::vector<double>& dct_matrix() {
  // kMfccCoefficients x kMelFilters, orthonormal DCT-II rows.
  static const std::vector<double> m = [] {
    std::vector<double> d(kMfccCoefficients * kMelFilters);
    const double n = static_cast<double>(kMelFilters);
    for (std::size_t k = 0; k < kMfccCoefficients; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (std::size_t i = 0; i < kMelFilters; ++i) {
        d[k * kMelFilters + i] =
            scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
      }
    }
    return d;
  }();
  return m;
}

std::size_t frame_count(std::size_t n) {
  if (n <= kFrameSamples) return 1;
  return 1 + (n - kFrameSamples) / kFrameHop;
}

// Copies frame f (zero-padded past the end) into `out`.
void load_frame(std::span<const double> x, std::size_t f, std::span<double> out) {
  const std::size_t start = f * kFrameHop;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t j = start + i;
    out[i] = j < x.size() ? x[j] : 0.0;
  }
}

}  // namespace

std::array<double, kMfccCoefficients> mfcc(std::span<const double> segment) {
  constexpr std::size_t nbins = kFftSize / 2 + 1;
  const auto& bank = mel_bank();
  const auto& dct = dct_matrix();
  static const auto window = dsp::hann_window(kFrameSamples, /*periodic=*/true);

  std::array<double, kMfccCoefficients> acc{};
  const std::size_t frames = frame_count(segment.size());
  std::vector<double> frame(kFrameSamples);
  std::array<double, kMelFilters> log_mel{};
  for (std::size_t f = 0; f < frames; ++f) {
    load_frame(segment, f, frame);
    for (std::size_t i = 0; i < kFrameSamples; ++i) frame[i] *= window[i];
    const auto power = dsp::power_spectrum(frame, kFftSize);
    for (std::size_t m = 0; m < kMelFilters; ++m) {
      double e = 0.0;
      const double* w = bank.weights.data() + m * nbins;
      for (std::size_t k = 0; k < nbins; ++k) e += w[k] * power[k];
      log_mel[m] = std::log(std::max(e, kLogFloor));
    }
    for (std::size_t k = 0; k < kMfccCoefficients; ++k) {
      double c = 0.0;
      for (std::size_t m = 0; m < kMelFilters; ++m) c += dct[k * kMelFilters + m] * log_mel[m];
      acc[k] += c;
    }
  }
  for (double& v : acc) v /= static_cast<double>(frames);
  return acc;
}

// ---------------------------------------------------------------------------
// Prosody

namespace {

constexpr double kGateAbsoluteRms = 1e-3;
constexpr double kGateRelative = 0.05;  // ~ -26 dB below the loudest frame
constexpr double kPeakFraction = 0.9;
constexpr double kNucleusDipDb = 2.0;
constexpr double kNucleusRangeDb = 25.0;
constexpr int kDecimation = 4;

// Normalized cross-correlation of x[0..n-lag) with x[lag..n).
double normalized_autocorr(std::span<const double> x, std::size_t lag) {
  if (lag >= x.size()) return 0.0;
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) {
    xy += x[i] * x[i + lag];
    xx += x[i] * x[i];
    yy += x[i + lag] * x[i + lag];
  }
  const double denom = std::sqrt(xx * yy);
  return denom > 0.0 ? xy / denom : 0.0;
}

std::vector<double> demean(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(x.size(), 1));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - mean;
  return out;
}

// Smallest-lag interior local maximum reaching kPeakFraction of the global
// maximum; falls back to the global maximum. Boundary lags are excluded
// because short lags correlate strongly for any smooth signal.
std::size_t pick_period(const std::vector<double>& r, std::size_t lo) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (r[i] > r[arg]) arg = i;
  }
  double best = -2.0;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] >= r[i - 1] && r[i] >= r[i + 1]) best = std::max(best, r[i]);
  }
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] >= r[i - 1] && r[i] >= r[i + 1] && r[i] >= kPeakFraction * best) return lo + i;
  }
  return lo + arg;
}

struct FrameAnalysis {
  std::vector<double> rms;
  std::vector<double> f0;  // 0 when unvoiced
};

FrameAnalysis analyze_frames(std::span<const double> segment) {
  const std::size_t frames = frame_count(segment.size());
  FrameAnalysis a;
  a.rms.resize(frames);
  a.f0.assign(frames, 0.0);

  std::vector<double> frame(kFrameSamples);
  double loudest = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    load_frame(segment, f, frame);
    double e = 0.0;
    for (double v : frame) e += v * v;
    a.rms[f] = std::sqrt(e / static_cast<double>(kFrameSamples));
    loudest = std::max(loudest, a.rms[f]);
  }
  const double gate = std::max(kGateAbsoluteRms, kGateRelative * loudest);

  // Coarse lag search on a 4 kHz copy, refined at full rate.
  dsp::SignalBuffer full(1, segment.size(), kSampleRate);
  std::copy(segment.begin(), segment.end(), full.channel(0).begin());
  const auto coarse = dsp::resample(full, kSampleRate / kDecimation);
  const auto low = coarse.channel(0);
  const std::size_t coarse_frame = kFrameSamples / kDecimation;
  const std::size_t coarse_hop = kFrameHop / kDecimation;
  const auto coarse_min = static_cast<std::size_t>(kSampleRate / kDecimation / kMaxF0Hz);
  const auto coarse_max = static_cast<std::size_t>(kSampleRate / kDecimation / kMinF0Hz);
  const auto fine_min = static_cast<std::size_t>(kSampleRate / kMaxF0Hz);
  const auto fine_max = static_cast<std::size_t>(kSampleRate / kMinF0Hz);

  std::vector<double> coarse_buf(coarse_frame);
  for (std::size_t f = 0; f < frames; ++f) {
    if (a.rms[f] < gate) continue;
    for (std::size_t i = 0; i < coarse_frame; ++i) {
      const std::size_t j = f * coarse_hop + i;
      coarse_buf[i] = j < low.size() ? low[j] : 0.0;
    }
    const auto cx = demean(coarse_buf);
    std::vector<double> r;
    for (std::size_t lag = coarse_min; lag <= coarse_max; ++lag) {
      r.push_back(normalized_autocorr(cx, lag));
    }
    const std::size_t coarse_lag = pick_period(r, coarse_min);

    load_frame(segment, f, frame);
    const auto fx = demean(frame);
    const std::size_t centre = coarse_lag * kDecimation;
    const std::size_t lo = std::max(fine_min, centre > 6 ? centre - 6 : 0);
    const std::size_t hi = std::min(fine_max, centre + 6);
    std::size_t best_lag = lo;
    double best = -2.0;
    for (std::size_t lag = lo; lag <= hi; ++lag) {
      const double v = normalized_autocorr(fx, lag);
      if (v > best) {
        best = v;
        best_lag = lag;
      }
    }
    if (best <= kVoicingThreshold) continue;

    double lag = static_cast<double>(best_lag);
    if (best_lag > fine_min && best_lag < fine_max) {
      const double ym = normalized_autocorr(fx, best_lag - 1);
      const double yp = normalized_autocorr(fx, best_lag + 1);
      const double denom = ym - 2.0 * best + yp;
      if (denom < 0.0) lag += std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
    }
    lag = std::clamp(lag, static_cast<double>(fine_min), static_cast<double>(fine_max));
    a.f0[f] = kSampleRate / lag;
  }
  return a;
}

double count_nuclei(const FrameAnalysis& a) {
  const std::size_t n = a.rms.size();
  if (n < 3) return 0.0;
  std::vector<double> db(n);
  for (std::size_t i = 0; i < n; ++i) db[i] = 20.0 * std::log10(a.rms[i] + kLogFloor);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(n - 1, i + 1);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += db[j];
    env[i] = s / static_cast<double>(hi - lo + 1);
  }
  const double top = *std::max_element(env.begin(), env.end());
  const double floor_db = top - kNucleusRangeDb;

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(env[i] > env[i - 1] && env[i] >= env[i + 1])) continue;
    if (env[i] < floor_db || a.f0[i] <= 0.0) continue;
    if (peaks.empty()) {
      peaks.push_back(i);
      continue;
    }
    const std::size_t prev = peaks.back();
    const double dip = *std::min_element(env.begin() + static_cast<std::ptrdiff_t>(prev),
                                          env.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    if (dip <= std::min(env[prev], env[i]) - kNucleusDipDb) {
      peaks.push_back(i);
    } else if (env[i] > env[prev]) {
      peaks.back() = i;
    }
  }
  return static_cast<double>(peaks.size());
}

}  // namespace

std::vector<double> frame_pitch(std::span<const double> segment) {
  return analyze_frames(segment).f0;
}

std::array<double, kProsodyFeatures> prosody(std::span<const double> segment) {
  std::array<double, kProsodyFeatures> out{};
  const auto a = analyze_frames(segment);
  const std::size_t frames = a.rms.size();

  double log_energy = 0.0;
  for (double r : a.rms) log_energy += std::log(std::max(r * r, kLogFloor));
  out[0] = log_energy / static_cast<double>(frames);

  double f0_sum = 0.0;
  std::size_t voiced = 0;
  for (double f : a.f0) {
    if (f > 0.0) {
      f0_sum += f;
      ++voiced;
    }
  }
  out[1] = voiced > 0 ? f0_sum / static_cast<double>(voiced) : 0.0;

  double e = 0.0;
  for (double v : segment) e += v * v;
  out[2] = segment.empty() ? 0.0 : std::sqrt(e / static_cast<double>(segment.size()));

  out[3] = 1.0 - static_cast<double>(voiced) / static_cast<double>(frames);
  out[4] = static_cast<double>(voiced) * static_cast<double>(kFrameHop) / kSampleRate;
  const double seconds = static_cast<double>(segment.size()) / kSampleRate;
  out[5] = seconds > 0.0 ? count_nuclei(a) / seconds : 0.0;
  return out;
}

FeatureMatrix extract_features(const SpeechSegmentMatrix& segments, FeatureKind kind) {
  if (kind != FeatureKind::kMfcc && kind != FeatureKind::kProsodyMfcc) {
    throw std::invalid_argument("extract_features: only mfcc and prosody_mfcc are computed here");
  }
  FeatureMatrix out;
  out.kind = kind;
  out.rows = segments.rows;
  out.cols = *feature_width(kind);
  out.data.assign(out.rows * out.cols, 0.0);
  if (out.rows > 0) out.groups = {out.rows};
  for (std::size_t r = 0; r < segments.rows; ++r) {
    const auto seg = segments.row(r);
    const auto c = mfcc(seg);
    auto dst = out.row(r);
    std::copy(c.begin(), c.end(), dst.begin());
    if (kind == FeatureKind::kProsodyMfcc) {
      const auto p = prosody(seg);
      std::copy(p.begin(), p.end(), dst.begin() + kMfccCoefficients);
    }
    for (double v : dst) {
      if (!std::isfinite(v)) throw NumericError("speech features: non-finite value");
    }
  }
  return out;
}

FeatureMatrix assemble_subject_speech(const std::vector<FeatureMatrix>& per_recording) {
  if (per_recording.size() > kRecordingsPerSubject) {
    throw std::invalid_argument("assemble_subject_speech: more than 29 recordings");
  }
  FeatureMatrix out;
  if (!per_recording.empty()) {
    out.kind = per_recording.front().kind;
    out.cols = per_recording.front().cols;
  }
  for (const auto& m : per_recording) {
    if (m.kind != out.kind || m.cols != out.cols) {
      throw std::invalid_argument("assemble_subject_speech: mixed feature kinds");
    }
    if (m.rows == 0) continue;
    out.data.insert(out.data.end(), m.data.begin(), m.data.end());
    out.rows += m.rows;
    out.groups.push_back(m.rows);
  }
  return out;
}

}  // namespace tridep::speech
