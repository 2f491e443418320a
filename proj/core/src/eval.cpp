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
#include "tridep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tridep/error.hpp"

namespace tridep::eval {

std::vector<std::string> FoldPlan::train_units(std::size_t fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (i == fold) continue;
    out.insert(out.end(), folds[i].begin(), folds[i].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan stratified_subject_kfold(const std::vector<SubjectLabel>& units, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  std::map<int, std::vector<std::string>> by_class;
  std::set<std::string> seen;
  for (const auto& u : units) {
    if (!seen.insert(u.id).second) throw std::invalid_argument("duplicate unit id " + u.id);
    by_class[u.label].push_back(u.id);
  }
  for (const auto& [label, ids] : by_class) {
    if (ids.size() < static_cast<std::size_t>(k)) {
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                      " members, fewer than k = " + std::to_string(k));
    }
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.assign(static_cast<std::size_t>(k), {});
  std::mt19937_64 rng(seed);
  std::size_t pos = 0;
  for (auto& [label, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
      std::swap(ids[i], ids[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    for (const auto& id : ids) plan.folds[pos++ % static_cast<std::size_t>(k)].push_back(id);
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

PlanAudit audit_plan(const FoldPlan& plan, const std::vector<SubjectLabel>& units) {
  PlanAudit a;
  std::map<std::string, int> label_of;
  for (const auto& u : units) label_of[u.id] = u.label;
  std::map<std::string, int> seen;
  for (const auto& f : plan.folds) {
    for (const auto& id : f) ++seen[id];
  }
  for (const auto& [id, n] : seen) {
    if (n > 1) a.disjoint = false;
    if (!label_of.contains(id)) a.covering = false;
  }
  if (seen.size() != label_of.size()) a.covering = false;
  if (plan.folds.size() != static_cast<std::size_t>(plan.k) || plan.folds.empty()) {
    a.covering = false;
    return a;
  }

  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (const auto& f : plan.folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
  }
  a.size_balanced = hi - lo <= 1;

  std::set<int> classes;
  for (const auto& [id, l] : label_of) classes.insert(l);
  for (int c : classes) {
    std::size_t clo = std::numeric_limits<std::size_t>::max(), chi = 0;
    for (const auto& f : plan.folds) {
      std::size_t n = 0;
      for (const auto& id : f) {
        auto it = label_of.find(id);
        n += it != label_of.end() && it->second == c;
      }
      clo = std::min(clo, n);
      chi = std::max(chi, n);
    }
    if (chi - clo > 1) a.class_balanced = false;
  }
  return a;
}

LeakageReport leakage_check(const FoldPlan& plan,
                            const std::map<std::string, std::string>& segment_owner) {
  auto owner = [&](const std::string& unit) -> const std::string& {
    auto it = segment_owner.find(unit);
    return it == segment_owner.end() ? unit : it->second;
  };
  std::vector<std::set<std::string>> subjects(plan.folds.size());
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    for (const auto& u : plan.folds[i]) subjects[i].insert(owner(u));
  }
  std::set<std::string> bad;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (std::size_t j = 0; j < subjects.size(); ++j) {
      if (i == j) continue;
      for (const auto& s : subjects[i]) {
        if (subjects[j].contains(s)) bad.insert(s);
      }
    }
  }
  // A unit listed twice inside one fold is harmless; the same subject under
  // two folds puts it on both sides of each of those folds.
  LeakageReport r;
  r.offending_subjects.assign(bad.begin(), bad.end());
  r.passed = bad.empty();
  return r;
}

namespace {

void check_pair(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("preds and labels differ in length");
  if (preds.empty()) throw std::invalid_argument("empty prediction list");
}

}  // namespace

double f1_score(const std::vector<int>& preds, const std::vector<int>& labels) {
  check_pair(preds, labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp += preds[i] == 1 && labels[i] == 1;
    fp += preds[i] == 1 && labels[i] != 1;
    fn += preds[i] != 1 && labels[i] == 1;
  }
  const std::size_t den = 2 * tp + fp + fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  check_pair(preds, labels);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

MetricsReport aggregate(const std::vector<FoldMetrics>& per_fold) {
  if (per_fold.empty()) throw std::invalid_argument("aggregate: no folds");
  MetricsReport r;
  r.per_fold = per_fold;
  std::vector<double> f1, acc;
  for (const auto& m : per_fold) {
    f1.push_back(m.f1);
    acc.push_back(m.accuracy);
  }
  std::tie(r.mean_f1, r.std_f1) = mean_sd(f1);
  std::tie(r.mean_acc, r.std_acc) = mean_sd(acc);
  return r;
}

std::string format_mean_std(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", mean, sd);
  return buf;
}

std::string plan_to_json(const FoldPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["k"] = plan.k;
  j["folds"] = plan.folds;
  return j.dump(2) + "\n";
}

FoldPlan plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FoldPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.k = j.at("k").get<int>();
    p.folds = j.at("folds").get<std::vector<std::vector<std::string>>>();
    if (p.folds.size() != static_cast<std::size_t>(p.k)) {
      throw DataError("split file: folds length differs from k");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("split file: ") + e.what());
  }
}

void save_plan(const FoldPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write split file " + path.string());
  out << plan_to_json(plan);
}

FoldPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

MetricsReport nearest_neighbour_probe(const std::vector<ProbeVector>& data, const FoldPlan& plan) {
  std::vector<FoldMetrics> folds;
  for (const auto& fold : plan.folds) {
    const std::set<std::string> test_ids(fold.begin(), fold.end());
    std::vector<const ProbeVector*> train, test;
    for (const auto& v : data) {
      (test_ids.contains(v.unit_id) || test_ids.contains(v.subject_id) ? test : train).push_back(&v);
    }
    if (test.empty() || train.empty()) throw DataError("probe fold with an empty side");
    std::vector<int> preds, labels;
    for (const auto* t : test) {
      double best = std::numeric_limits<double>::infinity();
      int pred = 0;
      for (const auto* r : train) {
        double d = 0.0;
        for (std::size_t i = 0; i < t->x.size(); ++i) {
          const double diff = t->x[i] - r->x[i];
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          pred = r->label;
        }
      }
      preds.push_back(pred);
      labels.push_back(t->label);
    }
    folds.push_back({f1_score(preds, labels), accuracy(preds, labels)});
  }
  return aggregate(folds);
}

}  // namespace tridep::eval
