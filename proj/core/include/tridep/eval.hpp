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
#include <map>
#include <string>
#include <vector>

namespace tridep::eval {

struct SubjectLabel {
  std::string id;
  int label = 0;
};

// Folds hold unit ids: subject ids for a subject-level plan, segment ids
// for a segment-level one. Each fold is sorted.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> folds;

  std::vector<std::string> test_units(std::size_t fold) const { return folds.at(fold); }
  std::vector<std::string> train_units(std::size_t fold) const;
};

// Sorts units by id, groups by label (ascending), shuffles each class with
// Fisher-Yates on mt19937_64(seed), then deals round-robin across folds,
// continuing the rotation from one class to the next. Throws DataError if
// some class has fewer than k members; std::invalid_argument for k < 2 or
// duplicate ids.
FoldPlan stratified_subject_kfold(const std::vector<SubjectLabel>& units, int k,
                                  std::uint64_t seed);

struct PlanAudit {
  bool disjoint = true;
  bool covering = true;
  bool size_balanced = true;
  bool class_balanced = true;

  bool ok() const { return disjoint && covering && size_balanced && class_balanced; }
};

PlanAudit audit_plan(const FoldPlan& plan, const std::vector<SubjectLabel>& units);

struct LeakageReport {
  bool passed = true;
  std::vector<std::string> offending_subjects;  // sorted, unique
};

// Units absent from `segment_owner` are taken to be subject ids. Fails when
// any subject is on both the train and the test side of some fold.
LeakageReport leakage_check(const FoldPlan& plan,
                            const std::map<std::string, std::string>& segment_owner);

// Positive class = 1 (MDD); 0 when 2TP + FP + FN = 0.
double f1_score(const std::vector<int>& preds, const std::vector<int>& labels);
double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

struct FoldMetrics {
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct MetricsReport {
  std::vector<FoldMetrics> per_fold;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
};

// Sample (n - 1) standard deviation; zero for a single fold.
MetricsReport aggregate(const std::vector<FoldMetrics>& per_fold);
// "0.874 ± 0.067"
std::string format_mean_std(double mean, double sd);

// Split files: {"seed": s, "k": k, "folds": [[ids...], ...]}.
std::string plan_to_json(const FoldPlan& plan);
FoldPlan plan_from_json(const std::string& text);
void save_plan(const FoldPlan& plan, const std::filesystem::path& path);
FoldPlan load_plan(const std::filesystem::path& path);

// Leakage probe: 1-nearest-neighbour (Euclidean) over labelled vectors,
// evaluated per fold. A vector is on the test side of fold i when either
// its unit id or its subject id is listed in that fold.
struct ProbeVector {
  std::string unit_id;
  std::string subject_id;
  int label = 0;
  std::vector<double> x;
};

MetricsReport nearest_neighbour_probe(const std::vector<ProbeVector>& data, const FoldPlan& plan);

}  // namespace tridep::eval
