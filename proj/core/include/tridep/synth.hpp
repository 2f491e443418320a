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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tridep/dsp.hpp"

namespace tridep::synth {

struct SynthSpec {
  int n_subjects = 38;
  double class_balance = 0.5;        // fraction labelled MDD
  double eeg_alpha_shift = 0.0;      // extra 10 Hz amplitude for MDD (uV)
  double speech_f0_shift = 0.0;      // F0 offset for MDD (Hz)
  double text_embedding_shift = 0.0; // mean offset for MDD, every dimension
  double noise_scale = 1.0;
  std::uint64_t seed = 7;

  // Per-subject identity strength: random channel gains, F0 offset and
  // embedding offset shared by all of a subject's recordings.
  double subject_scale = 0.0;
  double eeg_seconds = 300.0;
  double speech_seconds = 6.0;
  int recordings = 29;

  void validate() const;  // throws ConfigError
};

struct SynthSubject {
  std::string id;
  int label = 0;
  dsp::SignalBuffer eeg;                  // 29 x (eeg_seconds * 250)
  std::vector<dsp::SignalBuffer> speech;  // recordings x mono 16 kHz
  std::vector<double> text;               // recordings x 768, row-major
};

// "sub-001" ... in index order.
std::string subject_id(std::size_t index);

// Label per subject index; round(n * class_balance) MDD, seeded placement.
std::vector<int> assign_labels(const SynthSpec& spec);

// Independent of other subjects: the stream is derived from (seed, index).
SynthSubject generate_subject(const SynthSpec& spec, std::size_t index);

// Writes <dir>/cohort.json and one directory per subject holding
// eeg_raw.tdep, speech_rNN.wav, text.tdep and manifest.json.
void generate(const SynthSpec& spec, const std::filesystem::path& dir);

std::string spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const std::string& text);

}  // namespace tridep::synth
