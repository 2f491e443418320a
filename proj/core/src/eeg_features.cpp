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

#include "tridep/eeg_features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tridep/error.hpp"
#include "tridep/spectral.hpp"

namespace tridep::eeg {

const std::vector<std::string>& default_branch1_channels() {
  // HydroCel-128 electrodes nearest the 10-20 positions, plus ten
  // intermediate sites.
  static const std::vector<std::string> names = {
      "E22", "E9",  "E33", "E24",  "E11", "E124", "E122", "E45",  "E36",  "Cz",
      "E104", "E108", "E58", "E52", "E62", "E92",  "E96",  "E70",  "E83",  "E4",
      "E19", "E27", "E40", "E55",  "E80", "E87",  "E101", "E123", "E75"};
  return names;
}

const std::vector<std::string>& default_branch2_channels() {
  static const std::vector<std::string> names = {
      "E22", "E9",  "E33", "E24", "E11", "E124", "E122", "E45", "E36", "Cz",
      "E104", "E108", "E58", "E52", "E62", "E92", "E96", "E70", "E83"};
  return names;
}

const std::array<std::string_view, kDescriptorCount>& descriptor_names() {
  static const std::array<std::string_view, kDescriptorCount> names = {
      "mean",        "std",         "skewness",   "kurtosis",  "delta_power",
      "theta_power", "alpha_power", "beta_power", "gamma_power", "spectral_entropy"};
  return names;
}

EegSegmentTensor preprocess_branch1(const dsp::SignalBuffer& raw,
                                    const std::vector<std::string>& channels) {
  if (channels.size() != kBranch1Channels) {
    throw std::invalid_argument("preprocess_branch1: expected 29 channel names");
  }
  if (raw.sample_rate() != kBranch1Rate) {
    throw DataError("preprocess_branch1: expected 250 Hz input, got " +
                    std::to_string(raw.sample_rate()) + " Hz");
  }
  // Every stage before re-referencing is per-channel, so selecting first is
  // equivalent and avoids filtering unused channels.
  auto sig = dsp::select_channels(raw, channels);
  sig = dsp::bandpass_filter(sig, 0.5, 50.0);
  sig = dsp::notch_filter(sig, kLineFrequencyHz);
  sig = dsp::average_rereference(sig);

  EegSegmentTensor out;
  out.segments = dsp::window_segments(sig, {kBranch1WindowSeconds, kBranch1WindowSeconds, false});
  out.channel_names = channels;
  out.branch = Branch::kBranch1;
  return out;
}

EegPatchTensor preprocess_branch2(const dsp::SignalBuffer& raw,
                                  const std::vector<std::string>& channels) {
  if (channels.size() != kBranch2Channels) {
    throw std::invalid_argument("preprocess_branch2: expected 19 channel names");
  }
  auto sig = dsp::select_channels(raw, channels);
  sig = dsp::resample(sig, kBranch2Rate);
  sig = dsp::bandpass_filter(sig, 0.3, 75.0);
  sig = dsp::notch_filter(sig, kLineFrequencyHz);

  EegSegmentTensor seg;
  seg.segments = dsp::window_segments(sig, {kBranch2WindowSeconds, kBranch2WindowSeconds, false});
  seg.channel_names = channels;
  seg.branch = Branch::kBranch2;
  return patch(seg);
}

EegPatchTensor patch(const EegSegmentTensor& seg) {
  if (seg.segments.samples != kPatches * kPatchSamples) {
    throw std::invalid_argument("patch: segment length must be 1000 samples");
  }
  EegPatchTensor out;
  out.segments = seg.segments.segments;
  out.channels = seg.segments.channels;
  out.sample_rate = seg.segments.sample_rate;
  out.channel_names = seg.channel_names;
  out.data = seg.segments.data;
  return out;
}

EegSegmentTensor unpatch(const EegPatchTensor& patches) {
  EegSegmentTensor out;
  out.segments.segments = patches.segments;
  out.segments.channels = patches.channels;
  out.segments.samples = patches.patches * patches.patch_samples;
  out.segments.sample_rate = patches.sample_rate;
  out.segments.data = patches.data;
  out.channel_names = patches.channel_names;
  out.branch = Branch::kBranch2;
  return out;
}

double band_power(std::span<const double> psd, std::span<const double> freqs, double low_hz,
                  double high_hz) {
  if (psd.size() != freqs.size()) throw std::invalid_argument("band_power: size mismatch");
  if (psd.size() < 2 || !(high_hz > low_hz)) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < freqs.size(); ++i) {
    const double f0 = freqs[i];
    const double f1 = freqs[i + 1];
    const double a = std::max(f0, low_hz);
    const double b = std::min(f1, high_hz);
    if (!(b > a) || !(f1 > f0)) continue;
    const double slope = (psd[i + 1] - psd[i]) / (f1 - f0);
    const double pa = psd[i] + slope * (a - f0);
    const double pb = psd[i] + slope * (b - f0);
    total += 0.5 * (pa + pb) * (b - a);
  }
  return std::max(total, 0.0);
}

double spectral_entropy(std::span<const double> psd) {
  if (psd.size() < 2) return 0.0;
  double sum = 0.0;
  for (double v : psd) {
    if (v < 0.0) throw std::invalid_argument("spectral_entropy: negative power");
    sum += v;
  }
  if (!(sum > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : psd) {
    if (v <= 0.0) continue;
    const double p = v / sum;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(psd.size())), 0.0, 1.0);
}

namespace {

constexpr double kVarianceFloor = 1e-12;
constexpr double kEntropyLow = 0.5;
constexpr double kEntropyHigh = 50.0;

}  // namespace

std::array<double, kDescriptorCount> channel_descriptors(std::span<const double> x, double fs_hz) {
  std::array<double, kDescriptorCount> d{};
  if (x.empty()) return d;
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double dv = v - mean;
    const double sq = dv * dv;
    m2 += sq;
    m3 += sq * dv;
    m4 += sq * sq;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  d[0] = mean;
  d[1] = std::sqrt(m2);
  if (m2 > kVarianceFloor) {
    d[2] = m3 / std::pow(m2, 1.5);
    d[3] = m4 / (m2 * m2) - 3.0;
  }

  const auto nperseg = static_cast<std::size_t>(std::llround(fs_hz));
  const auto psd = dsp::welch_psd(x, fs_hz, nperseg);
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    d[4 + b] = band_power(psd.density, psd.freqs_hz, kBands[b].low_hz, kBands[b].high_hz);
  }
  std::vector<double> in_band;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    if (psd.freqs_hz[k] >= kEntropyLow && psd.freqs_hz[k] <= kEntropyHigh) {
      in_band.push_back(psd.density[k]);
    }
  }
  d[9] = spectral_entropy(in_band);
  return d;
}

HandcraftedEegFeatures handcrafted_features(const EegSegmentTensor& seg) {
  if (seg.branch != Branch::kBranch1) {
    throw std::invalid_argument("handcrafted_features: branch-1 segments required");
  }
  HandcraftedEegFeatures out;
  out.segments = seg.segments.segments;
  out.channels = seg.segments.channels;
  out.data.resize(out.segments * out.channels * kDescriptorCount);
  for (std::size_t s = 0; s < out.segments; ++s) {
    for (std::size_t c = 0; c < out.channels; ++c) {
      const auto d = channel_descriptors(seg.segments.row(s, c), seg.segments.sample_rate);
      for (std::size_t f = 0; f < kDescriptorCount; ++f) {
        if (!std::isfinite(d[f])) {
          throw NumericError("handcrafted_features: non-finite descriptor " +
                             std::string(descriptor_names()[f]));
        }
        out.data[(s * out.channels + c) * kDescriptorCount + f] = d[f];
      }
    }
  }
  return out;
}

}  // namespace tridep::eeg
