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
#include <vector>

#include "tridep/dsp.hpp"
#include "tridep/types.hpp"

namespace tridep::speech {

inline constexpr int kSampleRate = 16000;
inline constexpr double kWindowSeconds = 5.0;
inline constexpr double kHopSeconds = 2.5;
inline constexpr std::size_t kSegmentSamples = 80000;
inline constexpr std::size_t kHopSamples = 40000;

// Short-time analysis shared by MFCC and prosody: 25 ms frames, 10 ms hop.
inline constexpr std::size_t kFrameSamples = 400;
inline constexpr std::size_t kFrameHop = 160;
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kMelFilters = 64;
inline constexpr std::size_t kMfccCoefficients = 40;
inline constexpr std::size_t kProsodyFeatures = 6;
inline constexpr double kLogFloor = 1e-10;

inline constexpr double kMinF0Hz = 50.0;
inline constexpr double kMaxF0Hz = 400.0;
inline constexpr double kVoicingThreshold = 0.3;

// One recording's windows, S x 80000.
struct SpeechSegmentMatrix {
  std::size_t rows = 0;
  int recording_index = 1;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * kSegmentSamples, kSegmentSamples};
  }
};

struct PreprocessOptions {
  double silence_threshold_db = -40.0;
  int median_kernel = 5;
};

// resample(16 kHz) -> mono -> normalize -> trim silence -> median filter ->
// 5 s windows with 2.5 s hop. Recordings shorter than a window become one
// zero-padded row; all-silent recordings yield zero rows.
SpeechSegmentMatrix preprocess_speech(const dsp::SignalBuffer& wav, int recording_index = 1,
                                      const PreprocessOptions& opts = {});

// Frame-averaged MFCCs of a 16 kHz segment: Hann-windowed 512-point power
// spectrum, 64 triangular mel filters over 0-8 kHz, natural log with floor
// 1e-10, orthonormal DCT-II, first 40 coefficients.
std::array<double, kMfccCoefficients> mfcc(std::span<const double> segment);

// [mean log frame energy, mean voiced F0 (Hz), RMS, pause rate, phonation
// time (s), speech rate (nuclei/s)].
std::array<double, kProsodyFeatures> prosody(std::span<const double> segment);

// Per-frame pitch estimate; 0 for unvoiced frames.
std::vector<double> frame_pitch(std::span<const double> segment);

// MFCC (40) or prosody+MFCC (46) rows for one recording. The six prosody
// values follow the 40 MFCCs.
FeatureMatrix extract_features(const SpeechSegmentMatrix& segments, FeatureKind kind);

// Row concatenation in recording order. Empty recordings are skipped; the
// per-recording row counts are kept in `groups`.
FeatureMatrix assemble_subject_speech(const std::vector<FeatureMatrix>& per_recording);

}  // namespace tridep::speech
