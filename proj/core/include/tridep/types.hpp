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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tridep {

// Interview recordings per subject.
inline constexpr std::size_t kRecordingsPerSubject = 29;

enum class Modality { kEeg, kSpeech, kText };

inline constexpr Modality kAllModalities[] = {Modality::kEeg, Modality::kSpeech, Modality::kText};

std::string_view to_string(Modality m);
// Display name used in report tables ("EEG", "Speech", "Text").
std::string_view display_name(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

enum class FeatureKind {
  kRaw,  // unprocessed signal (EEG tensor or WAV)
  // EEG
  kHandcrafted,  // S x 29 x 10 (or flattened S x 290)
  kLabram,       // S x 200
  kCbramod,      // S x 200
  // Speech, per segment
  kMfcc,         // 40
  kProsodyMfcc,  // 46
  kXlsr,         // 1024
  kHubert,       // 768
  // Text, per recording
  kBert,
  kMacbert,
  kXlnet,
  kMpnet,
  kTextEmbedding,  // generic 768-d sentence embedding
};

std::string_view to_string(FeatureKind k);
std::optional<FeatureKind> parse_feature_kind(std::string_view s);

// Modality a kind belongs to; nullopt for kRaw, which is valid for EEG and
// speech.
std::optional<Modality> modality_of(FeatureKind k);

// Row width of the kind as consumed by encoders; nullopt for kRaw.
std::optional<std::size_t> feature_width(FeatureKind k);

// Segment- or recording-level feature rows for one subject and modality.
// `groups` partitions the rows by recording (speech); empty means one group.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kRaw;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::size_t> groups;

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

}  // namespace tridep
