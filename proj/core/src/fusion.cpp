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
#include "tridep/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tridep::fusion {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kWeightedAverage: return "weighted_average";
    case Strategy::kSoftVote: return "soft_vote";
    case Strategy::kBayesian: return "bayesian";
    case Strategy::kMajorityVote: return "majority_vote";
  }
  return "?";
}

std::string_view display_name(Strategy s) {
  switch (s) {
    case Strategy::kWeightedAverage: return "Weighted Averaging";
    case Strategy::kSoftVote: return "Soft Voting";
    case Strategy::kBayesian: return "Bayesian Fusion";
    case Strategy::kMajorityVote: return "Majority Voting";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto k : {Strategy::kWeightedAverage, Strategy::kSoftVote, Strategy::kBayesian,
                 Strategy::kMajorityVote}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

void check_posteriors(const PosteriorMap& posteriors) {
  if (posteriors.empty()) throw std::invalid_argument("fusion needs at least one posterior");
  for (const auto& [m, p] : posteriors) {
    if (!(p[0] >= 0.0 && p[1] >= 0.0) || std::abs(p[0] + p[1] - 1.0) > 1e-6) {
      throw std::invalid_argument("invalid posterior for " + std::string(to_string(m)));
    }
  }
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

int decide(const Prob& p, const FusionOptions& opts) {
  if (std::abs(p[1] - p[0]) < kTieTolerance) return opts.tie_label;
  return p[1] > p[0] ? 1 : 0;
}

void check_weights(const PosteriorMap& posteriors, const Weights& w) {
  if (w.size() != posteriors.size()) {
    throw std::invalid_argument("weights and posteriors name different modalities");
  }
  double sum = 0.0;
  for (const auto& [m, wm] : w) {
    if (!posteriors.contains(m)) {
      throw std::invalid_argument("weight given for absent modality " + std::string(to_string(m)));
    }
    if (!(wm >= 0.0)) throw std::invalid_argument("weights must be non-negative");
    sum += wm;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw std::invalid_argument("weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

FusionDecision weighted_average(const PosteriorMap& posteriors, const Weights& w,
                                const FusionOptions& opts) {
  check_posteriors(posteriors);
  check_weights(posteriors, w);
  double p1 = 0.0;
  for (const auto& [m, p] : posteriors) p1 += w.at(m) * p[1];
  p1 = std::clamp(p1, 0.0, 1.0);
  FusionDecision d;
  d.strategy = Strategy::kWeightedAverage;
  d.fused = Prob{1.0 - p1, p1};
  d.label = decide(*d.fused, opts);
  return d;
}

FusionDecision soft_vote(const PosteriorMap& posteriors, const FusionOptions& opts) {
  check_posteriors(posteriors);
  double p1 = 0.0;
  for (const auto& [m, p] : posteriors) p1 += p[1];
  p1 /= static_cast<double>(posteriors.size());
  FusionDecision d;
  d.strategy = Strategy::kSoftVote;
  d.fused = Prob{1.0 - p1, p1};
  d.label = decide(*d.fused, opts);
  return d;
}

FusionDecision bayesian_fuse(const PosteriorMap& posteriors, const Weights& w, double prior,
                             const FusionOptions& opts) {
  if (!(prior > 0.0 && prior < 1.0)) throw std::invalid_argument("prior must lie in (0, 1)");
  check_posteriors(posteriors);
  check_weights(posteriors, w);
  const double eps = opts.clamp_eps;
  const double prior_logit = logit(prior);
  double z = prior_logit;
  for (const auto& [m, p] : posteriors) {
    const double pm = std::clamp(p[1], eps, 1.0 - eps);
    z += w.at(m) * (logit(pm) - prior_logit);
  }
  const double p1 = 1.0 / (1.0 + std::exp(-z));
  FusionDecision d;
  d.strategy = Strategy::kBayesian;
  d.fused = Prob{1.0 - p1, p1};
  d.label = decide(*d.fused, opts);
  return d;
}

FusionDecision majority_vote(const LabelMap& labels, const PosteriorMap& fallback,
                             const FusionOptions& opts) {
  if (labels.size() < 2) throw std::invalid_argument("majority voting needs >= 2 modalities");
  std::size_t ones = 0;
  for (const auto& [m, l] : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
    ones += static_cast<std::size_t>(l);
  }
  const std::size_t zeros = labels.size() - ones;
  FusionDecision d;
  d.strategy = Strategy::kMajorityVote;
  if (ones != zeros) {
    d.label = ones > zeros ? 1 : 0;
    return d;
  }
  PosteriorMap subset;
  for (const auto& [m, l] : labels) {
    auto it = fallback.find(m);
    if (it == fallback.end()) {
      throw std::invalid_argument("tied vote without a fallback posterior for " +
                                  std::string(to_string(m)));
    }
    subset.emplace(m, it->second);
  }
  const auto soft = soft_vote(subset, opts);
  d.fused = soft.fused;
  d.label = soft.label;
  d.used_fallback = true;
  return d;
}

FusionDecision majority_vote(const PosteriorMap& posteriors, const FusionOptions& opts) {
  check_posteriors(posteriors);
  LabelMap labels;
  for (const auto& [m, p] : posteriors) labels.emplace(m, decide(p, opts));
  return majority_vote(labels, posteriors, opts);
}

}  // namespace tridep::fusion
