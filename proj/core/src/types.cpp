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

#include "tridep/types.hpp"

#include <array>
#include <utility>

namespace tridep {
namespace {

constexpr std::array<std::pair<FeatureKind, std::string_view>, 13> kKindNames = {{
    {FeatureKind::kRaw, "raw"},
    {FeatureKind::kHandcrafted, "handcrafted"},
    {FeatureKind::kLabram, "labram"},
    {FeatureKind::kCbramod, "cbramod"},
    {FeatureKind::kMfcc, "mfcc"},
    {FeatureKind::kProsodyMfcc, "prosody_mfcc"},
    {FeatureKind::kXlsr, "xlsr"},
    {FeatureKind::kHubert, "hubert"},
    {FeatureKind::kBert, "bert"},
    {FeatureKind::kMacbert, "macbert"},
    {FeatureKind::kXlnet, "xlnet"},
    {FeatureKind::kMpnet, "mpnet"},
    {FeatureKind::kTextEmbedding, "text_embedding"},
}};

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kEeg: return "eeg";
    case Modality::kSpeech: return "speech";
    case Modality::kText: return "text";
  }
  return "?";
}

std::string_view display_name(Modality m) {
  switch (m) {
    case Modality::kEeg: return "EEG";
    case Modality::kSpeech: return "Speech";
    case Modality::kText: return "Text";
  }
  return "?";
}

std::optional<Modality> parse_modality(std::string_view s) {
  for (Modality m : kAllModalities) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::string_view to_string(FeatureKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

std::optional<Modality> modality_of(FeatureKind k) {
  switch (k) {
    case FeatureKind::kRaw: return std::nullopt;
    case FeatureKind::kHandcrafted:
    case FeatureKind::kLabram:
    case FeatureKind::kCbramod: return Modality::kEeg;
    case FeatureKind::kMfcc:
    case FeatureKind::kProsodyMfcc:
    case FeatureKind::kXlsr:
    case FeatureKind::kHubert: return Modality::kSpeech;
    case FeatureKind::kBert:
    case FeatureKind::kMacbert:
    case FeatureKind::kXlnet:
    case FeatureKind::kMpnet:
    case FeatureKind::kTextEmbedding: return Modality::kText;
  }
  return std::nullopt;
}

std::optional<std::size_t> feature_width(FeatureKind k) {
  switch (k) {
    case FeatureKind::kRaw: return std::nullopt;
    case FeatureKind::kHandcrafted: return 290;
    case FeatureKind::kLabram:
    case FeatureKind::kCbramod: return 200;
    case FeatureKind::kMfcc: return 40;
    case FeatureKind::kProsodyMfcc: return 46;
    case FeatureKind::kXlsr: return 1024;
    case FeatureKind::kHubert:
    case FeatureKind::kBert:
    case FeatureKind::kMacbert:
    case FeatureKind::kXlnet:
    case FeatureKind::kMpnet:
    case FeatureKind::kTextEmbedding: return 768;
  }
  return std::nullopt;
}

}  // namespace tridep
