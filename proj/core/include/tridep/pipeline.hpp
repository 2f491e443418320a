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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tridep/dsp.hpp"
#include "tridep/encoders.hpp"
#include "tridep/eval.hpp"
#include "tridep/fusion.hpp"
#include "tridep/types.hpp"

namespace tridep::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

struct ModalityConfig {
  Modality modality = Modality::kEeg;
  FeatureKind feature_kind = FeatureKind::kHandcrafted;
  nn::EncoderConfig encoder;  // input_dim follows feature_kind
  nn::TrainConfig train;
};

struct FusionSpec {
  fusion::Strategy strategy = fusion::Strategy::kSoftVote;
  std::vector<Modality> modalities;
  std::vector<double> weights;  // parallel to modalities; empty for voting
  std::optional<double> prior;  // Bayesian; null = train-fold MDD frequency

  // "majority_vote_eeg+speech+text"
  std::string key() const;
  // "EEG + Speech + Text (0.2 : 0.4 : 0.4)"
  std::string describe() const;
};

struct ExperimentConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir;
  int k = 5;
  std::uint64_t seed = 7;
  std::vector<ModalityConfig> modalities;  // in eeg, speech, text order
  std::vector<FusionSpec> fusion;

  const ModalityConfig* find(Modality m) const;
};

// Every problem in the document, one per element. Empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// Parses and validates; throws ConfigError listing every problem.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical JSON of the effective configuration (after overrides).
std::string config_to_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

// Computable feature kinds: handcrafted from raw EEG, mfcc and
// prosody_mfcc from raw speech.
bool derivable_from_raw(FeatureKind kind);
FeatureMatrix eeg_handcrafted_matrix(const dsp::SignalBuffer& raw);
FeatureMatrix speech_feature_matrix(const std::vector<dsp::SignalBuffer>& recordings,
                                    FeatureKind kind);

struct PosteriorRecord {
  std::string subject_id;
  Modality modality = Modality::kEeg;
  double p0 = 0.5;
  double p1 = 0.5;
  int true_label = 0;
};

std::string posteriors_to_json(const std::vector<PosteriorRecord>& records);
std::vector<PosteriorRecord> posteriors_from_json(const std::string& text);

struct ReportRow {
  std::string category;       // "EEG", "Speech", "Text", or a fusion strategy
  std::string configuration;  // features + encoder, or modality mix
  eval::MetricsReport metrics;
};

struct ReportSet {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
};

std::string render_report_text(const ReportSet& r);
std::string render_report_json(const ReportSet& r);

using Logger = std::function<void(const std::string&)>;

// Runs the stages against cfg.output_dir:
//   split.json
//   features/<subject>/manifest.json + tensors
//   models/<modality>/fold_<i>/checkpoint.json + tensors, history.json
//   posteriors/<modality>/fold_<i>.json
//   fused/<fusion key>/fold_<i>.json
//   report.txt, report.json, run_manifest.json
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg, Logger log = {});

  eval::FoldPlan split();
  // Writes preprocessed segments under preprocessed/<subject>/.
  void preprocess();
  void features();
  void train();
  void fuse();
  ReportSet report();
  // split -> features -> train -> fuse -> report, plus run_manifest.json.
  ReportSet run();

  const ExperimentConfig& config() const { return cfg_; }

 private:
  eval::FoldPlan load_split() const;
  void log(const std::string& msg) const;

  ExperimentConfig cfg_;
  Logger log_;
};

}  // namespace tridep::pipeline
