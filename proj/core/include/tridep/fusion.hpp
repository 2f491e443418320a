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
#include <map>
#include <optional>
#include <string_view>

#include "tridep/types.hpp"

namespace tridep::fusion {

// (p_HC, p_MDD)
using Prob = std::array<double, 2>;
using PosteriorMap = std::map<Modality, Prob>;
using Weights = std::map<Modality, double>;
using LabelMap = std::map<Modality, int>;

enum class Strategy { kWeightedAverage, kSoftVote, kBayesian, kMajorityVote };

std::string_view to_string(Strategy s);
std::string_view display_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct FusionOptions {
  int tie_label = 1;          // label chosen when |p1 - p0| < 1e-12
  double clamp_eps = 1e-6;    // Bayesian clamping of posteriors
};

struct FusionDecision {
  std::optional<Prob> fused;  // null for a majority vote without fallback
  int label = 0;
  Strategy strategy = Strategy::kSoftVote;
  bool used_fallback = false;
};

inline constexpr double kTieTolerance = 1e-12;
inline constexpr double kWeightSumTolerance = 1e-9;

int decide(const Prob& p, const FusionOptions& opts = {});

// Throws std::invalid_argument unless weights are non-negative, sum to one
// within 1e-9, and cover exactly the posterior keys.
void check_weights(const PosteriorMap& posteriors, const Weights& w);

FusionDecision weighted_average(const PosteriorMap& posteriors, const Weights& w,
                                const FusionOptions& opts = {});
FusionDecision soft_vote(const PosteriorMap& posteriors, const FusionOptions& opts = {});
// Log-linear pooling of likelihood ratios against `prior` = P(MDD).
FusionDecision bayesian_fuse(const PosteriorMap& posteriors, const Weights& w, double prior = 0.5,
                             const FusionOptions& opts = {});
// Mode of the hard labels. An even split falls back to soft voting over
// `fallback` restricted to the voting modalities.
FusionDecision majority_vote(const LabelMap& labels, const PosteriorMap& fallback,
                             const FusionOptions& opts = {});

// Hard labels via decide(), then majority_vote.
FusionDecision majority_vote(const PosteriorMap& posteriors, const FusionOptions& opts = {});

}  // namespace tridep::fusion
