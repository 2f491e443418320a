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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tridep/dsp.hpp"

namespace tridep::eeg {

// Branch 1: 29 channels at 250 Hz, 0.5-50 Hz bandpass, 50 Hz notch, average
// reference, 10 s non-overlapping windows (2500 samples).
inline constexpr int kBranch1Rate = 250;
inline constexpr std::size_t kBranch1Channels = 29;
inline constexpr double kBranch1WindowSeconds = 10.0;

// Branch 2: resampled to 200 Hz, 0.3-75 Hz bandpass, 50 Hz notch, 19
// channels, 5 s windows split into 5 patches of 200 samples.
inline constexpr int kBranch2Rate = 200;
inline constexpr std::size_t kBranch2Channels = 19;
inline constexpr double kBranch2WindowSeconds = 5.0;
inline constexpr std::size_t kPatches = 5;
inline constexpr std::size_t kPatchSamples = 200;

inline constexpr double kLineFrequencyHz = 50.0;

// Default montages. These are configuration; callers may pass their own
// lists of the same size.
const std::vector<std::string>& default_branch1_channels();
const std::vector<std::string>& default_branch2_channels();

enum class Branch { kBranch1, kBranch2 };

struct EegSegmentTensor {
  dsp::SegmentTensor segments;  // S x C x T
  std::vector<std::string> channel_names;
  Branch branch = Branch::kBranch1;
};

// S x C x P x Tp, row-major. Shares the memory layout of S x C x (P*Tp).
struct EegPatchTensor {
  std::size_t segments = 0;
  std::size_t channels = 0;
  std::size_t patches = kPatches;
  std::size_t patch_samples = kPatchSamples;
  int sample_rate = kBranch2Rate;
  std::vector<std::string> channel_names;
  std::vector<double> data;

  std::span<const double> patch(std::size_t s, std::size_t c, std::size_t p) const {
    return {data.data() + ((s * channels + c) * patches + p) * patch_samples, patch_samples};
  }
};

inline constexpr std::size_t kDescriptorCount = 10;
const std::array<std::string_view, kDescriptorCount>& descriptor_names();

// S x C x F, row-major.
struct HandcraftedEegFeatures {
  std::size_t segments = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  double at(std::size_t s, std::size_t c, std::size_t f) const {
    return data[(s * channels + c) * kDescriptorCount + f];
  }
};

struct Band {
  std::string_view name;
  double low_hz;
  double high_hz;
};

inline constexpr std::array<Band, 5> kBands = {{
    {"delta", 0.5, 4.0},
    {"theta", 4.0, 8.0},
    {"alpha", 8.0, 13.0},
    {"beta", 13.0, 30.0},
    {"gamma", 30.0, 50.0},
}};

// Throws DataError for a missing channel or a sample rate other than 250 Hz.
EegSegmentTensor preprocess_branch1(const dsp::SignalBuffer& raw,
                                    const std::vector<std::string>& channels =
                                        default_branch1_channels());

// Accepts any input rate; resamples to 200 Hz.
EegPatchTensor preprocess_branch2(const dsp::SignalBuffer& raw,
                                  const std::vector<std::string>& channels =
                                      default_branch2_channels());

EegPatchTensor patch(const EegSegmentTensor& seg);
EegSegmentTensor unpatch(const EegPatchTensor& patches);

// Per segment and channel: mean, std, skewness, excess kurtosis, five band
// powers (Welch PSD, 1 s Hann windows, 50% overlap), and spectral entropy
// normalized over the 0.5-50 Hz bins. Requires a branch-1 tensor.
HandcraftedEegFeatures handcrafted_features(const EegSegmentTensor& seg);

// The ten descriptors for one channel of one segment.
std::array<double, kDescriptorCount> channel_descriptors(std::span<const double> x, double fs_hz);

// Exact integral over [low, high] of the piecewise-linear interpolant of
// psd(freqs). Frequencies must be ascending.
double band_power(std::span<const double> psd, std::span<const double> freqs, double low_hz,
                  double high_hz);

// Shannon entropy of psd normalized to a distribution, divided by log(N).
// Zero total power yields 0.
double spectral_entropy(std::span<const double> psd);

}  // namespace tridep::eeg
