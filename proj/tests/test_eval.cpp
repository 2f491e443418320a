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
#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tridep/error.hpp"
#include "tridep/eval.hpp"

namespace {

namespace ev = tridep::eval;

std::vector<ev::SubjectLabel> cohort(int n_mdd, int n_hc) {
  std::vector<ev::SubjectLabel> out;
  for (int i = 0; i < n_mdd + n_hc; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "sub-%03d", i + 1);
    out.push_back({id, i < n_mdd ? 1 : 0});
  }
  return out;
}

TEST(Split, ThirtyEightSubjects) {
  const auto units = cohort(19, 19);
  const auto plan = ev::stratified_subject_kfold(units, 5, 7);
  std::vector<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.push_back(f.size());
  std::sort(sizes.rbegin(), sizes.rend());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{8, 8, 8, 7, 7}));
  EXPECT_TRUE(ev::audit_plan(plan, units).ok());
}

TEST(Split, PerfectStratification) {
  const auto units = cohort(5, 5);
  const auto plan = ev::stratified_subject_kfold(units, 5, 3);
  std::map<std::string, int> label;
  for (const auto& u : units) label[u.id] = u.label;
  for (const auto& f : plan.folds) {
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(label[f[0]] + label[f[1]], 1);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto units = cohort(12, 17);
  const auto a = ev::stratified_subject_kfold(units, 5, 42);
  const auto b = ev::stratified_subject_kfold(units, 5, 42);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_EQ(ev::plan_to_json(a), ev::plan_to_json(b));
  const auto c = ev::stratified_subject_kfold(units, 5, 43);
  EXPECT_NE(a.folds, c.folds);
}

TEST(Split, InputOrderDoesNotMatter) {
  auto units = cohort(10, 13);
  const auto a = ev::stratified_subject_kfold(units, 4, 1);
  std::reverse(units.begin(), units.end());
  EXPECT_EQ(ev::stratified_subject_kfold(units, 4, 1).folds, a.folds);
}

TEST(Split, RandomCohortsAudit) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 9);
    const int mdd = k + static_cast<int>(rng() % 30), hc = k + static_cast<int>(rng() % 30);
    const auto units = cohort(mdd, hc);
    const auto plan = ev::stratified_subject_kfold(units, k, rng());
    const auto audit = ev::audit_plan(plan, units);
    EXPECT_TRUE(audit.ok()) << "k=" << k << " mdd=" << mdd << " hc=" << hc;
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(ev::stratified_subject_kfold(cohort(3, 10), 5, 1), tridep::DataError);
  EXPECT_THROW(ev::stratified_subject_kfold(cohort(3, 3), 1, 1), std::invalid_argument);
  auto dup = cohort(3, 3);
  dup[1].id = dup[0].id;
  EXPECT_THROW(ev::stratified_subject_kfold(dup, 2, 1), std::invalid_argument);
}

TEST(Audit, DetectsBrokenPlans) {
  const auto units = cohort(6, 6);
  auto plan = ev::stratified_subject_kfold(units, 3, 5);
  auto dup = plan;
  dup.folds[1].push_back(dup.folds[0][0]);
  EXPECT_FALSE(ev::audit_plan(dup, units).disjoint);
  auto drop = plan;
  drop.folds[2].pop_back();
  EXPECT_FALSE(ev::audit_plan(drop, units).covering);
  auto skew = plan;
  skew.folds[1].push_back(skew.folds[0].back());
  skew.folds[0].pop_back();
  skew.folds[1].push_back(skew.folds[0].back());
  skew.folds[0].pop_back();
  EXPECT_FALSE(ev::audit_plan(skew, units).size_balanced);
}

TEST(Leakage, ValidPlanPasses) {
  const auto plan = ev::stratified_subject_kfold(cohort(5, 5), 5, 1);
  std::map<std::string, std::string> owner;
  for (const auto& f : plan.folds) {
    for (const auto& s : f) owner[s + "/seg0"] = s;
  }
  EXPECT_TRUE(ev::leakage_check(plan, owner).passed);
  EXPECT_TRUE(ev::leakage_check(plan, {}).passed);
}

TEST(Leakage, SplitSubjectIsNamed) {
  ev::FoldPlan plan;
  plan.k = 2;
  plan.folds = {{"sub-001/seg0", "sub-002/seg0"}, {"sub-001/seg1", "sub-003/seg0"}};
  std::map<std::string, std::string> owner = {{"sub-001/seg0", "sub-001"},
                                              {"sub-001/seg1", "sub-001"},
                                              {"sub-002/seg0", "sub-002"},
                                              {"sub-003/seg0", "sub-003"}};
  const auto r = ev::leakage_check(plan, owner);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.offending_subjects, std::vector<std::string>{"sub-001"});
}

TEST(Leakage, DuplicatedSubjectIdAcrossFolds) {
  ev::FoldPlan plan;
  plan.k = 2;
  plan.folds = {{"a", "b"}, {"b", "c"}};
  const auto r = ev::leakage_check(plan, {});
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.offending_subjects, std::vector<std::string>{"b"});
}

TEST(Metrics, F1Values) {
  EXPECT_EQ(ev::f1_score({1, 0, 1, 0}, {1, 0, 1, 0}), 1.0);
  // TP 2, FP 1, FN 1.
  EXPECT_NEAR(ev::f1_score({1, 1, 1, 0, 0}, {1, 1, 0, 1, 0}), 4.0 / 6.0, 1e-12);
  EXPECT_EQ(ev::f1_score({0, 0, 0}, {0, 0, 0}), 0.0);
  EXPECT_THROW(ev::f1_score({1}, {1, 0}), std::invalid_argument);
}

TEST(Metrics, F1MatchesConfusionMatrix) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> p(n), y(n);
    int tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      y[i] = static_cast<int>(rng() % 2);
      tp += p[i] && y[i];
      fp += p[i] && !y[i];
      fn += !p[i] && y[i];
      correct += p[i] == y[i];
    }
    const double f1 = (2 * tp + fp + fn) == 0 ? 0.0 : 2.0 * tp / (2 * tp + fp + fn);
    EXPECT_DOUBLE_EQ(ev::f1_score(p, y), f1);
    EXPECT_DOUBLE_EQ(ev::accuracy(p, y), static_cast<double>(correct) / n);
  }
}

TEST(Metrics, Aggregate) {
  const auto a = ev::aggregate({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
  EXPECT_EQ(ev::format_mean_std(a.mean_f1, a.std_f1), "1.000 ± 0.000");
  const auto b = ev::aggregate({{0.8, 0.5}, {0.9, 0.5}});
  EXPECT_NEAR(b.mean_f1, 0.85, 1e-12);
  EXPECT_NEAR(b.std_f1, std::sqrt(0.005), 1e-12);
  EXPECT_EQ(ev::format_mean_std(b.mean_f1, b.std_f1), "0.850 ± 0.071");
  EXPECT_EQ(ev::format_mean_std(0.874, 0.067), "0.874 ± 0.067");
  EXPECT_EQ(ev::aggregate({{0.7, 0.6}}).std_f1, 0.0);
}

TEST(PlanFile, RoundTripAndStableBytes) {
  const auto plan = ev::stratified_subject_kfold(cohort(9, 8), 3, 11);
  const auto path = std::filesystem::temp_directory_path() / "tridep_plan_test.json";
  ev::save_plan(plan, path);
  const auto back = ev::load_plan(path);
  EXPECT_EQ(back.folds, plan.folds);
  EXPECT_EQ(back.k, 3);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(ev::plan_to_json(back), ev::plan_to_json(plan));
  std::filesystem::remove(path);
  EXPECT_THROW(ev::plan_from_json("[1, 2]"), tridep::DataError);
}

TEST(Probe, IdentityLeakRaisesSegmentLevelScore) {
  // Each subject is a tight cluster; labels are random with respect to
  // position, so only identity carries information.
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<ev::ProbeVector> data;
  std::vector<ev::SubjectLabel> subjects, segments;
  for (int s = 0; s < 20; ++s) {
    const std::string sid = "s" + std::to_string(s);
    const int label = s % 2;
    subjects.push_back({sid, label});
    std::vector<double> centre(5);
    for (double& c : centre) c = 5.0 * g(rng);
    for (int k = 0; k < 6; ++k) {
      ev::ProbeVector v{sid + "/" + std::to_string(k), sid, label, centre};
      for (double& x : v.x) x += 0.1 * g(rng);
      segments.push_back({v.unit_id, label});
      data.push_back(std::move(v));
    }
  }
  const auto subj = ev::nearest_neighbour_probe(data, ev::stratified_subject_kfold(subjects, 5, 1));
  const auto seg = ev::nearest_neighbour_probe(data, ev::stratified_subject_kfold(segments, 5, 1));
  EXPECT_GT(seg.mean_f1, 0.95);
  EXPECT_LT(subj.mean_f1, seg.mean_f1 - 0.1);
}

}  // namespace
