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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tridep/autodiff.hpp"
#include "tridep/types.hpp"

namespace tridep::nn {

enum class EncoderKind { kEegCnnLstm, kEegGruAttn, kSpeechCnnPoolLstm, kTextLstm, kTextCnn };
enum class PoolKind { kMax, kGruAttn, kBiGruAttn };

std::string_view to_string(EncoderKind k);
std::string_view to_string(PoolKind k);
std::optional<EncoderKind> parse_encoder_kind(std::string_view s);
std::optional<PoolKind> parse_pool_kind(std::string_view s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kEegGruAttn;
  std::size_t input_dim = 0;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  double dropout = 0.3;
  PoolKind pool = PoolKind::kMax;  // SpeechCnnPoolLstm only

  void validate() const;  // throws std::invalid_argument
};

// One subject's input: S x d rows. For the speech encoder `groups` holds the
// per-recording row counts (summing to S); other encoders ignore it.
struct Sample {
  Mat x;
  std::vector<std::size_t> groups;
  int label = 0;
};

struct Posterior {
  std::array<double, 2> p{0.5, 0.5};  // (HC, MDD)
};

struct ForwardResult {
  Mat latent;                      // 1 x H subject representation
  Mat logits;                      // 1 x 2
  Posterior posterior;
  std::vector<double> attention;   // EegGruAttn only
};

class Model {
 public:
  Model() = default;
  // Uniform +-1/sqrt(fan_in) initialization from `seed`.
  Model(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  // Inference: dropout off, deterministic.
  ForwardResult forward(const Sample& s) const;

  // Training-mode graph. With `rng` null dropout is disabled. Returns the
  // loss node; logits are written to `logits_out` when non-null.
  Graph::Var build_loss(Graph& g, const Sample& s, std::mt19937_64* rng,
                        Graph::Var* logits_out = nullptr, Graph::Var* latent_out = nullptr,
                        Graph::Var* attention_out = nullptr) const;

  // Forward + backward with dropout disabled; gradients land in params().
  double loss_and_grad(const Sample& s);

 private:
  EncoderConfig cfg_;
  Params params_;
};

// Numerically stable -log p[label] from two logits.
double cross_entropy_from_logits(const std::array<double, 2>& logits, int label);
double mean_cross_entropy(const std::vector<std::array<double, 2>>& logits,
                          const std::vector<int>& labels);

// z-score per column; fitted on training rows only.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const std::vector<const Mat*>& mats);
  Mat apply(const Mat& m) const;
  bool empty() const { return mean.empty(); }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 0;
  double weight_decay = 1e-5;
  int batch_size = 1;
  double min_delta = 1e-4;

  void validate() const;  // throws std::invalid_argument
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  int best_epoch = 0;
  bool early_stopped = false;
};

// Adam on the cross-entropy of every sample, L2 decay folded into the
// gradient. Iteration order is a seeded shuffle per epoch. Requires at
// least two samples covering both classes (DataError otherwise).
TrainHistory train(Model& model, const TrainConfig& tcfg, const std::vector<Sample>& samples);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
};

// Central differences (eps 1e-4) on every scalar parameter; relative error
// |a - n| / max(|a|, |n|, 1e-6). Dropout disabled.
GradCheckResult grad_check(const Model& model, const Sample& s, double eps = 1e-4);
double numeric_gradient(const Model& model, const Sample& s, std::size_t param,
                        std::size_t index, double eps = 1e-4);

// Checkpoint directory: checkpoint.json plus one TDEP1 file per parameter.
void save_checkpoint(const Model& model, const FeatureScaler& scaler, std::uint64_t seed,
                     int epoch, const std::filesystem::path& dir);
struct Checkpoint {
  Model model;
  FeatureScaler scaler;
  std::uint64_t seed = 0;
  int epoch = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Double in [0, 1) from the top 53 bits of one draw.
double unit_uniform(std::mt19937_64& rng);

}  // namespace tridep::nn
