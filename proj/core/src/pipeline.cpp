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
#include "tridep/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tridep/eeg_features.hpp"
#include "tridep/error.hpp"
#include "tridep/feature_store.hpp"
#include "tridep/speech_features.hpp"
#include "tridep/wav.hpp"

namespace tridep::pipeline {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

const ModalityConfig* ExperimentConfig::find(Modality m) const {
  for (const auto& mc : modalities) {
    if (mc.modality == m) return &mc;
  }
  return nullptr;
}

namespace {

std::string fmt_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  return buf;
}

bool encoder_fits(Modality m, nn::EncoderKind k) {
  switch (k) {
    case nn::EncoderKind::kEegCnnLstm:
    case nn::EncoderKind::kEegGruAttn: return m == Modality::kEeg;
    case nn::EncoderKind::kSpeechCnnPoolLstm: return m == Modality::kSpeech;
    case nn::EncoderKind::kTextLstm:
    case nn::EncoderKind::kTextCnn: return m == Modality::kText;
  }
  return false;
}

// Collects problems while walking a JSON document.
class Reader {
 public:
  std::vector<std::string> errors;

  void unknown_keys(const json& obj, const std::string& where,
                    std::initializer_list<std::string_view> known) {
    for (const auto& [key, v] : obj.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        errors.push_back(where + ": unknown field '" + key + "'");
      }
    }
  }

  template <typename T>
  void get(const json& obj, const std::string& where, const char* key, T& out, bool required) {
    if (!obj.contains(key)) {
      if (required) errors.push_back(where + ": missing field '" + key + "'");
      return;
    }
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(where + "." + key + ": wrong type");
    }
  }
};

}  // namespace

std::string FusionSpec::key() const {
  std::string s(fusion::to_string(strategy));
  s += "_";
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (i) s += "+";
    s += to_string(modalities[i]);
  }
  return s;
}

std::string FusionSpec::describe() const {
  std::string s;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (i) s += " + ";
    s += display_name(modalities[i]);
  }
  if (!weights.empty()) {
    s += " (";
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (i) s += " : ";
      s += fmt_weight(weights[i]);
    }
    s += ")";
  }
  return s;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> e;
  if (cfg.dataset_root.empty()) e.push_back("dataset_root is empty");
  if (cfg.output_dir.empty()) e.push_back("output_dir is empty");
  if (cfg.k < 2) e.push_back("k must be >= 2");
  if (cfg.modalities.empty()) e.push_back("no modalities configured");
  std::set<Modality> seen;
  for (const auto& mc : cfg.modalities) {
    const std::string where = "modalities." + std::string(to_string(mc.modality));
    if (!seen.insert(mc.modality).second) e.push_back(where + ": configured twice");
    if (modality_of(mc.feature_kind) != mc.modality) {
      e.push_back(where + ": feature_kind '" + std::string(to_string(mc.feature_kind)) +
                  "' does not belong to this modality");
    }
    if (!encoder_fits(mc.modality, mc.encoder.kind)) {
      e.push_back(where + ": encoder '" + std::string(nn::to_string(mc.encoder.kind)) +
                  "' does not apply to this modality");
    }
    if (mc.encoder.hidden == 0) e.push_back(where + ".encoder.hidden must be > 0");
    if (mc.encoder.layers < 1) e.push_back(where + ".encoder.layers must be >= 1");
    if (!(mc.encoder.dropout >= 0.0 && mc.encoder.dropout < 1.0)) {
      e.push_back(where + ".encoder.dropout must be in [0, 1)");
    }
    const auto& t = mc.train;
    if (!(t.learning_rate > 0.0)) e.push_back(where + ".train.learning_rate must be > 0");
    if (t.max_epochs < 1) e.push_back(where + ".train.max_epochs must be >= 1");
    if (t.patience < 1) e.push_back(where + ".train.patience must be >= 1");
    if (t.batch_size < 1) e.push_back(where + ".train.batch_size must be >= 1");
    if (!(t.weight_decay >= 0.0)) e.push_back(where + ".train.weight_decay must be >= 0");
  }
  for (std::size_t i = 0; i < cfg.fusion.size(); ++i) {
    const auto& f = cfg.fusion[i];
    const std::string where = "fusion[" + std::to_string(i) + "]";
    if (f.modalities.empty()) e.push_back(where + ": no modalities");
    std::set<Modality> fm;
    for (Modality m : f.modalities) {
      if (!fm.insert(m).second) e.push_back(where + ": modality listed twice");
      if (!seen.contains(m)) {
        e.push_back(where + ": modality '" + std::string(to_string(m)) + "' is not configured");
      }
    }
    const bool weighted = f.strategy == fusion::Strategy::kWeightedAverage ||
                          f.strategy == fusion::Strategy::kBayesian;
    if (weighted) {
      if (f.weights.size() != f.modalities.size()) {
        e.push_back(where + ": needs one weight per modality");
      } else {
        double sum = 0.0;
        bool negative = false;
        for (double w : f.weights) {
          sum += w;
          negative |= !(w >= 0.0);
        }
        if (negative) e.push_back(where + ": weights must be >= 0");
        if (std::abs(sum - 1.0) > fusion::kWeightSumTolerance) {
          e.push_back(where + ": weights sum to " + fmt_weight(sum) + ", expected 1");
        }
      }
    } else if (!f.weights.empty()) {
      e.push_back(where + ": " + std::string(fusion::to_string(f.strategy)) + " takes no weights");
    }
    if (f.strategy == fusion::Strategy::kMajorityVote && f.modalities.size() < 2) {
      e.push_back(where + ": majority_vote needs at least two modalities");
    }
    if (f.prior && !(*f.prior > 0.0 && *f.prior < 1.0)) e.push_back(where + ": prior must be in (0, 1)");
  }
  return e;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  Reader r;
  ExperimentConfig cfg;
  r.unknown_keys(doc, "config", {"dataset_root", "output_dir", "k", "seed", "modalities", "fusion"});
  std::string root, out;
  r.get(doc, "config", "dataset_root", root, true);
  r.get(doc, "config", "output_dir", out, true);
  cfg.dataset_root = root;
  cfg.output_dir = out;
  r.get(doc, "config", "k", cfg.k, false);
  r.get(doc, "config", "seed", cfg.seed, false);

  if (!doc.contains("modalities") || !doc["modalities"].is_object()) {
    r.errors.push_back("config: 'modalities' must be an object");
  } else {
    for (Modality m : kAllModalities) {
      const std::string name(to_string(m));
      if (!doc["modalities"].contains(name)) continue;
      const json& mj = doc["modalities"][name];
      const std::string where = "modalities." + name;
      if (!mj.is_object()) {
        r.errors.push_back(where + ": must be an object");
        continue;
      }
      r.unknown_keys(mj, where, {"feature_kind", "encoder", "train"});
      ModalityConfig mc;
      mc.modality = m;
      std::string kind;
      r.get(mj, where, "feature_kind", kind, true);
      if (!kind.empty()) {
        if (auto k = parse_feature_kind(kind)) {
          mc.feature_kind = *k;
        } else {
          r.errors.push_back(where + ": unknown feature_kind '" + kind + "'");
        }
      }
      if (!mj.contains("encoder") || !mj["encoder"].is_object()) {
        r.errors.push_back(where + ": 'encoder' must be an object");
      } else {
        const json& ej = mj["encoder"];
        const std::string ew = where + ".encoder";
        r.unknown_keys(ej, ew, {"kind", "hidden", "layers", "dropout", "pool"});
        std::string ek, pool;
        r.get(ej, ew, "kind", ek, true);
        if (!ek.empty()) {
          if (auto k = nn::parse_encoder_kind(ek)) {
            mc.encoder.kind = *k;
          } else {
            r.errors.push_back(ew + ": unknown encoder '" + ek + "'");
          }
        }
        r.get(ej, ew, "hidden", mc.encoder.hidden, false);
        r.get(ej, ew, "layers", mc.encoder.layers, false);
        r.get(ej, ew, "dropout", mc.encoder.dropout, false);
        r.get(ej, ew, "pool", pool, false);
        if (!pool.empty()) {
          if (auto p = nn::parse_pool_kind(pool)) {
            mc.encoder.pool = *p;
          } else {
            r.errors.push_back(ew + ": unknown pool '" + pool + "'");
          }
        }
      }
      if (mj.contains("train")) {
        const json& tj = mj["train"];
        const std::string tw = where + ".train";
        if (!tj.is_object()) {
          r.errors.push_back(tw + ": must be an object");
        } else {
          r.unknown_keys(tj, tw, {"learning_rate", "max_epochs", "patience", "weight_decay",
                                  "batch_size", "min_delta"});
          r.get(tj, tw, "learning_rate", mc.train.learning_rate, false);
          r.get(tj, tw, "max_epochs", mc.train.max_epochs, false);
          r.get(tj, tw, "patience", mc.train.patience, false);
          r.get(tj, tw, "weight_decay", mc.train.weight_decay, false);
          r.get(tj, tw, "batch_size", mc.train.batch_size, false);
          r.get(tj, tw, "min_delta", mc.train.min_delta, false);
        }
      }
      if (auto w = feature_width(mc.feature_kind)) mc.encoder.input_dim = *w;
      cfg.modalities.push_back(mc);
    }
    for (const auto& [key, v] : doc["modalities"].items()) {
      if (!parse_modality(key)) r.errors.push_back("modalities: unknown modality '" + key + "'");
    }
  }

  if (doc.contains("fusion")) {
    if (!doc["fusion"].is_array()) {
      r.errors.push_back("config: 'fusion' must be an array");
    } else {
      for (std::size_t i = 0; i < doc["fusion"].size(); ++i) {
        const json& fj = doc["fusion"][i];
        const std::string where = "fusion[" + std::to_string(i) + "]";
        if (!fj.is_object()) {
          r.errors.push_back(where + ": must be an object");
          continue;
        }
        r.unknown_keys(fj, where, {"strategy", "modalities", "weights", "prior"});
        FusionSpec f;
        std::string strategy;
        r.get(fj, where, "strategy", strategy, true);
        if (!strategy.empty()) {
          if (auto s = fusion::parse_strategy(strategy)) {
            f.strategy = *s;
          } else {
            r.errors.push_back(where + ": unknown strategy '" + strategy + "'");
          }
        }
        std::vector<std::string> mods;
        r.get(fj, where, "modalities", mods, true);
        for (const auto& m : mods) {
          if (auto mm = parse_modality(m)) {
            f.modalities.push_back(*mm);
          } else {
            r.errors.push_back(where + ": unknown modality '" + m + "'");
          }
        }
        r.get(fj, where, "weights", f.weights, false);
        if (fj.contains("prior")) {
          if (fj["prior"].is_string() && fj["prior"] == "train") {
            f.prior.reset();
          } else if (fj["prior"].is_number()) {
            f.prior = fj["prior"].get<double>();
          } else {
            r.errors.push_back(where + ".prior: expected a number or \"train\"");
          }
        } else {
          f.prior = 0.5;
        }
        cfg.fusion.push_back(f);
      }
    }
  }

  if (r.errors.empty()) {
    for (auto& e : validate_config(cfg)) r.errors.push_back(std::move(e));
  }
  if (!r.errors.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(r.errors.size()) + " problem" +
                      (r.errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : r.errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ojson j;
  j["dataset_root"] = cfg.dataset_root.generic_string();
  j["output_dir"] = cfg.output_dir.generic_string();
  j["k"] = cfg.k;
  j["seed"] = cfg.seed;
  j["modalities"] = ojson::object();
  for (const auto& mc : cfg.modalities) {
    ojson m;
    m["feature_kind"] = std::string(to_string(mc.feature_kind));
    m["encoder"] = {{"kind", std::string(nn::to_string(mc.encoder.kind))},
                    {"hidden", mc.encoder.hidden},
                    {"layers", mc.encoder.layers},
                    {"dropout", mc.encoder.dropout},
                    {"pool", std::string(nn::to_string(mc.encoder.pool))}};
    m["train"] = {{"learning_rate", mc.train.learning_rate},
                  {"max_epochs", mc.train.max_epochs},
                  {"patience", mc.train.patience},
                  {"weight_decay", mc.train.weight_decay},
                  {"batch_size", mc.train.batch_size},
                  {"min_delta", mc.train.min_delta}};
    j["modalities"][std::string(to_string(mc.modality))] = m;
  }
  j["fusion"] = ojson::array();
  for (const auto& f : cfg.fusion) {
    ojson fj;
    fj["strategy"] = std::string(fusion::to_string(f.strategy));
    std::vector<std::string> mods;
    for (Modality m : f.modalities) mods.emplace_back(to_string(m));
    fj["modalities"] = mods;
    if (!f.weights.empty()) fj["weights"] = f.weights;
    if (f.strategy == fusion::Strategy::kBayesian) {
      fj["prior"] = f.prior ? ojson(*f.prior) : ojson("train");
    }
    j["fusion"].push_back(fj);
  }
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Feature derivation

bool derivable_from_raw(FeatureKind kind) {
  return kind == FeatureKind::kHandcrafted || kind == FeatureKind::kMfcc ||
         kind == FeatureKind::kProsodyMfcc;
}

namespace {

FeatureMatrix flatten_handcrafted(const eeg::HandcraftedEegFeatures& h) {
  FeatureMatrix m;
  m.kind = FeatureKind::kHandcrafted;
  m.rows = h.segments;
  m.cols = h.channels * eeg::kDescriptorCount;
  m.data = h.data;
  return m;
}

}  // namespace

FeatureMatrix eeg_handcrafted_matrix(const dsp::SignalBuffer& raw) {
  return flatten_handcrafted(eeg::handcrafted_features(eeg::preprocess_branch1(raw)));
}

FeatureMatrix speech_feature_matrix(const std::vector<dsp::SignalBuffer>& recordings,
                                    FeatureKind kind) {
  std::vector<FeatureMatrix> per;
  for (std::size_t r = 0; r < recordings.size(); ++r) {
    per.push_back(speech::extract_features(
        speech::preprocess_speech(recordings[r], static_cast<int>(r + 1)), kind));
  }
  return speech::assemble_subject_speech(per);
}

// ---------------------------------------------------------------------------
// Posterior files

std::string posteriors_to_json(const std::vector<PosteriorRecord>& records) {
  ojson j = ojson::array();
  for (const auto& r : records) {
    j.push_back({{"subject_id", r.subject_id},
                 {"modality", std::string(to_string(r.modality))},
                 {"p0", r.p0},
                 {"p1", r.p1},
                 {"true_label", r.true_label}});
  }
  return j.dump(2) + "\n";
}

std::vector<PosteriorRecord> posteriors_from_json(const std::string& text) {
  std::vector<PosteriorRecord> out;
  try {
    for (const auto& e : json::parse(text)) {
      PosteriorRecord r;
      r.subject_id = e.at("subject_id").get<std::string>();
      const auto m = parse_modality(e.at("modality").get<std::string>());
      if (!m) throw DataError("posterior file: unknown modality");
      r.modality = *m;
      r.p0 = e.at("p0").get<double>();
      r.p1 = e.at("p1").get<double>();
      r.true_label = e.at("true_label").get<int>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("posterior file: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string pad(const std::string& s, std::size_t w) {
  const std::size_t d = display_width(s);
  return d >= w ? s : s + std::string(w - d, ' ');
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_report_text(const ReportSet& r) {
  std::size_t wc = std::string("Category").size(), wf = std::string("Configuration").size();
  for (const auto& row : r.rows) {
    wc = std::max(wc, display_width(row.category));
    wf = std::max(wf, display_width(row.configuration));
  }
  wc += 2;
  wf += 2;
  std::ostringstream o;
  o << "Subject-level stratified " << r.k << "-fold cross-validation, seed " << r.seed << "\n\n";
  o << pad("Category", wc) << pad("Configuration", wf) << pad("F1-score", 16) << "Accuracy\n";
  o << std::string(wc + wf + 16 + 13, '-') << "\n";
  for (const auto& row : r.rows) {
    o << pad(row.category, wc) << pad(row.configuration, wf)
      << pad(eval::format_mean_std(row.metrics.mean_f1, row.metrics.std_f1), 16)
      << eval::format_mean_std(row.metrics.mean_acc, row.metrics.std_acc) << "\n";
  }
  o << "\nPer-fold F1\n";
  o << pad("Category", wc) << pad("Configuration", wf);
  std::string head;
  for (int i = 0; i < r.k; ++i) head += pad("fold " + std::to_string(i + 1), 8);
  o << head.substr(0, head.find_last_not_of(' ') + 1) << "\n";
  for (const auto& row : r.rows) {
    std::string line = pad(row.category, wc) + pad(row.configuration, wf);
    for (const auto& f : row.metrics.per_fold) line += pad(fixed3(f.f1), 8);
    o << line.substr(0, line.find_last_not_of(' ') + 1) << "\n";
  }
  return o.str();
}

std::string render_report_json(const ReportSet& r) {
  ojson j;
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    ojson folds = ojson::array();
    for (const auto& f : row.metrics.per_fold) folds.push_back({{"f1", f.f1}, {"accuracy", f.accuracy}});
    j["rows"].push_back({{"category", row.category},
                         {"configuration", row.configuration},
                         {"f1", eval::format_mean_std(row.metrics.mean_f1, row.metrics.std_f1)},
                         {"mean_f1", row.metrics.mean_f1},
                         {"std_f1", row.metrics.std_f1},
                         {"mean_accuracy", row.metrics.mean_acc},
                         {"std_accuracy", row.metrics.std_acc},
                         {"per_fold", folds}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("short write: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " (run the earlier stages first)");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fold_file(std::size_t i) { return "fold_" + std::to_string(i + 1) + ".json"; }

std::string two_digits(int r) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", r);
  return buf;
}

store::SubjectManifest load_valid_manifest(const fs::path& path) {
  auto m = store::load_manifest(path);
  const auto v = store::validate_manifest(m);
  if (!v.empty()) {
    std::string msg = "invalid manifest " + path.string() + ":";
    for (const auto& x : v) msg += "\n  [" + x.code + "] " + x.message;
    throw DataError(msg);
  }
  return m;
}

dsp::SignalBuffer raw_eeg(const store::SubjectManifest& m) {
  for (const auto& e : m.entries) {
    if (e.modality != Modality::kEeg || e.kind != FeatureKind::kRaw) continue;
    const auto t = store::read_tensor(m.resolve(e));
    const std::size_t ch = t.dims.at(0), n = t.dims.at(1);
    auto names = e.channel_names;
    if (names.empty()) {
      if (ch != eeg::kBranch1Channels) {
        throw DataError("raw EEG of " + m.subject_id + " has no channel names");
      }
      names = eeg::default_branch1_channels();
    }
    dsp::SignalBuffer sig(ch, n, *e.sample_rate_hz, names);
    std::copy(t.payload.begin(), t.payload.end(), sig.data().begin());
    return sig;
  }
  throw DataError("subject " + m.subject_id + " has no raw EEG entry");
}

std::vector<std::pair<int, fs::path>> raw_speech(const store::SubjectManifest& m) {
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& e : m.entries) {
    if (e.modality == Modality::kSpeech && e.kind == FeatureKind::kRaw) {
      out.emplace_back(*e.recording_index, m.resolve(e));
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("subject " + m.subject_id + " has no raw speech recordings");
  return out;
}

store::ManifestEntry matrix_entry(Modality mod, const FeatureMatrix& fm, const std::string& file,
                                  std::optional<int> index = std::nullopt) {
  store::ManifestEntry e;
  e.modality = mod;
  e.kind = fm.kind;
  e.recording_index = index;
  e.tensor_path = file;
  e.dims = {fm.rows, fm.cols};
  return e;
}

void write_matrix(const FeatureMatrix& fm, const fs::path& path) {
  store::write_tensor(store::to_tensor(fm), path);
}

}  // namespace

Experiment::Experiment(ExperimentConfig cfg, Logger log) : cfg_(std::move(cfg)), log_(std::move(log)) {
  const auto errors = validate_config(cfg_);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

void Experiment::log(const std::string& msg) const {
  if (log_) log_(msg);
}

eval::FoldPlan Experiment::split() {
  const auto cohort = store::load_cohort(cfg_.dataset_root);
  std::vector<eval::SubjectLabel> subjects;
  for (const auto& c : cohort) subjects.push_back({c.subject_id, c.label});
  const auto plan = eval::stratified_subject_kfold(subjects, cfg_.k, cfg_.seed);
  const auto leak = eval::leakage_check(plan, {});
  if (!leak.passed) throw DataError("split leaks subjects across folds");
  fs::create_directories(cfg_.output_dir);
  eval::save_plan(plan, cfg_.output_dir / "split.json");
  log("split: " + std::to_string(subjects.size()) + " subjects into " + std::to_string(cfg_.k) +
      " folds");
  return plan;
}

eval::FoldPlan Experiment::load_split() const {
  auto plan = eval::load_plan(cfg_.output_dir / "split.json");
  if (plan.k != cfg_.k) throw DataError("split.json has k = " + std::to_string(plan.k));
  const auto leak = eval::leakage_check(plan, {});
  if (!leak.passed) {
    std::string names;
    for (const auto& s : leak.offending_subjects) names += " " + s;
    throw DataError("split.json places subjects on both sides of a fold:" + names);
  }
  return plan;
}

void Experiment::preprocess() {
  const auto cohort = store::load_cohort(cfg_.dataset_root);
  for (const auto& c : cohort) {
    const auto m = load_valid_manifest(cfg_.dataset_root / c.manifest);
    const auto dir = cfg_.output_dir / "preprocessed" / c.subject_id;
    fs::create_directories(dir);
    if (const auto* mc = cfg_.find(Modality::kEeg); mc && mc->feature_kind == FeatureKind::kHandcrafted) {
      const auto seg = eeg::preprocess_branch1(raw_eeg(m));
      const auto& s = seg.segments;
      store::write_tensor(
          store::to_tensor(s.data, {static_cast<std::uint32_t>(s.segments),
                                    static_cast<std::uint32_t>(s.channels),
                                    static_cast<std::uint32_t>(s.samples)}),
          dir / "eeg_segments.tdep");
    }
    if (const auto* mc = cfg_.find(Modality::kSpeech); mc && derivable_from_raw(mc->feature_kind)) {
      for (const auto& [index, path] : raw_speech(m)) {
        const auto seg = speech::preprocess_speech(dsp::read_wav(path), index);
        store::write_tensor(store::to_tensor(seg.data, {static_cast<std::uint32_t>(seg.rows),
                                                        static_cast<std::uint32_t>(speech::kSegmentSamples)}),
                            dir / ("speech_r" + two_digits(index) + ".tdep"));
      }
    }
    log("preprocess: " + c.subject_id);
  }
}

void Experiment::features() {
  const auto cohort = store::load_cohort(cfg_.dataset_root);
  for (const auto& c : cohort) {
    const auto m = load_valid_manifest(cfg_.dataset_root / c.manifest);
    const auto pre = cfg_.output_dir / "preprocessed" / c.subject_id;
    const auto dir = cfg_.output_dir / "features" / c.subject_id;
    fs::create_directories(dir);
    store::SubjectManifest out;
    out.subject_id = c.subject_id;
    out.label = c.label;
    out.base_dir = dir;
    if (m.label != c.label) throw DataError("cohort and manifest labels differ for " + c.subject_id);

    for (const auto& mc : cfg_.modalities) {
      bool supplied = false;
      for (const auto& e : m.entries) {
        if (e.modality == mc.modality && e.kind == mc.feature_kind) {
          auto copy = e;
          copy.tensor_path = fs::absolute(m.resolve(e)).lexically_normal().generic_string();
          out.entries.push_back(copy);
          supplied = true;
        }
      }
      if (supplied) continue;
      if (!derivable_from_raw(mc.feature_kind)) {
        throw DataError("subject " + c.subject_id + " provides no '" +
                        std::string(to_string(mc.feature_kind)) +
                        "' features and they cannot be computed from raw data");
      }
      if (mc.modality == Modality::kEeg) {
        FeatureMatrix fm;
        if (fs::exists(pre / "eeg_segments.tdep")) {
          const auto t = store::read_tensor(pre / "eeg_segments.tdep");
          eeg::EegSegmentTensor seg;
          seg.segments.segments = t.dims.at(0);
          seg.segments.channels = t.dims.at(1);
          seg.segments.samples = t.dims.at(2);
          seg.segments.sample_rate = eeg::kBranch1Rate;
          seg.segments.data.assign(t.payload.begin(), t.payload.end());
          fm = flatten_handcrafted(eeg::handcrafted_features(seg));
        } else {
          fm = eeg_handcrafted_matrix(raw_eeg(m));
        }
        write_matrix(fm, dir / "eeg_handcrafted.tdep");
        out.entries.push_back(matrix_entry(Modality::kEeg, fm, "eeg_handcrafted.tdep"));
      } else if (mc.modality == Modality::kSpeech) {
        for (const auto& [index, path] : raw_speech(m)) {
          speech::SpeechSegmentMatrix seg;
          const auto cached = pre / ("speech_r" + two_digits(index) + ".tdep");
          if (fs::exists(cached)) {
            const auto t = store::read_tensor(cached);
            seg.rows = t.dims.at(0);
            seg.recording_index = index;
            seg.data.assign(t.payload.begin(), t.payload.end());
          } else {
            seg = speech::preprocess_speech(dsp::read_wav(path), index);
          }
          const auto fm = speech::extract_features(seg, mc.feature_kind);
          const std::string file = "speech_" + std::string(to_string(mc.feature_kind)) + "_r" +
                                   two_digits(index) + ".tdep";
          write_matrix(fm, dir / file);
          out.entries.push_back(matrix_entry(Modality::kSpeech, fm, file, index));
        }
      } else {
        throw DataError("text features must be supplied in the cohort manifests");
      }
    }
    store::save_manifest(out, dir / "manifest.json");
    log("features: " + c.subject_id);
  }
}

void Experiment::train() {
  const auto plan = load_split();
  const auto cohort = store::load_cohort(cfg_.dataset_root);
  std::map<std::string, int> labels;
  for (const auto& c : cohort) labels[c.subject_id] = c.label;

  for (const auto& mc : cfg_.modalities) {
    const std::string mod(to_string(mc.modality));
    std::map<std::string, FeatureMatrix> data;
    for (const auto& c : cohort) {
      const auto m = store::load_manifest(cfg_.output_dir / "features" / c.subject_id / "manifest.json");
      auto b = store::assemble_bundle(m, {{mc.modality, mc.feature_kind}});
      if (!b.has(mc.modality) || b.get(mc.modality).rows == 0) {
        throw DataError("subject " + c.subject_id + " has no " + mod + " feature rows");
      }
      data.emplace(c.subject_id, b.get(mc.modality));
    }

    auto to_sample = [&](const std::string& id, const nn::FeatureScaler& sc) {
      const auto& fm = data.at(id);
      nn::Sample s;
      s.x = sc.apply(nn::Mat(fm.rows, fm.cols, fm.data));
      if (mc.modality == Modality::kSpeech) s.groups = fm.groups;
      s.label = labels.at(id);
      return s;
    };

    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const auto test_ids = plan.test_units(f);
      const auto train_ids = plan.train_units(f);
      for (const auto& id : test_ids) {
        if (std::binary_search(train_ids.begin(), train_ids.end(), id)) {
          throw DataError("subject " + id + " is on both sides of fold " + std::to_string(f + 1));
        }
      }
      std::vector<nn::Mat> train_mats;
      for (const auto& id : train_ids) {
        const auto& fm = data.at(id);
        train_mats.emplace_back(fm.rows, fm.cols, fm.data);
      }
      std::vector<const nn::Mat*> ptrs;
      for (const auto& m : train_mats) ptrs.push_back(&m);
      const auto scaler = nn::FeatureScaler::fit(ptrs);

      std::vector<nn::Sample> samples;
      for (const auto& id : train_ids) samples.push_back(to_sample(id, scaler));

      const std::uint64_t base = mix(mix(cfg_.seed, static_cast<std::uint64_t>(mc.modality) + 1), f + 1);
      nn::Model model(mc.encoder, mix(base, 1));
      auto tcfg = mc.train;
      tcfg.seed = mix(base, 2);
      const auto hist = nn::train(model, tcfg, samples);

      const auto mdir = cfg_.output_dir / "models" / mod / ("fold_" + std::to_string(f + 1));
      nn::save_checkpoint(model, scaler, tcfg.seed, static_cast<int>(hist.epoch_loss.size()), mdir);
      ojson h;
      h["epoch_loss"] = hist.epoch_loss;
      h["best_epoch"] = hist.best_epoch;
      h["early_stopped"] = hist.early_stopped;
      write_text(mdir / "history.json", h.dump(2) + "\n");

      std::vector<PosteriorRecord> recs;
      for (const auto& id : test_ids) {
        const auto r = model.forward(to_sample(id, scaler));
        recs.push_back({id, mc.modality, r.posterior.p[0], r.posterior.p[1], labels.at(id)});
      }
      write_text(cfg_.output_dir / "posteriors" / mod / fold_file(f), posteriors_to_json(recs));
      char buf[160];
      std::snprintf(buf, sizeof buf, "train: %s fold %zu/%zu, %zu epochs, final loss %.4f", mod.c_str(),
                    f + 1, plan.folds.size(), hist.epoch_loss.size(), hist.epoch_loss.back());
      log(buf);
    }
  }
}

void Experiment::fuse() {
  const auto plan = load_split();
  const auto cohort = store::load_cohort(cfg_.dataset_root);
  std::map<std::string, int> labels;
  for (const auto& c : cohort) labels[c.subject_id] = c.label;

  for (const auto& spec : cfg_.fusion) {
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      std::map<std::string, fusion::PosteriorMap> per_subject;
      for (Modality m : spec.modalities) {
        const auto recs = posteriors_from_json(
            read_text(cfg_.output_dir / "posteriors" / std::string(to_string(m)) / fold_file(f)));
        for (const auto& r : recs) per_subject[r.subject_id][m] = {r.p0, r.p1};
      }
      double prior = 0.5;
      if (spec.prior) {
        prior = *spec.prior;
      } else {
        const auto train_ids = plan.train_units(f);
        double mdd = 0.0;
        for (const auto& id : train_ids) mdd += labels.at(id);
        prior = std::clamp(mdd / static_cast<double>(train_ids.size()), 0.05, 0.95);
      }
      fusion::Weights w;
      for (std::size_t i = 0; i < spec.weights.size(); ++i) w[spec.modalities[i]] = spec.weights[i];

      ojson out = ojson::array();
      for (const auto& id : plan.test_units(f)) {
        auto it = per_subject.find(id);
        if (it == per_subject.end() || it->second.size() != spec.modalities.size()) {
          throw DataError("missing posterior for " + id + " in fold " + std::to_string(f + 1));
        }
        const auto& P = it->second;
        fusion::FusionDecision d;
        switch (spec.strategy) {
          case fusion::Strategy::kWeightedAverage: d = fusion::weighted_average(P, w); break;
          case fusion::Strategy::kSoftVote: d = fusion::soft_vote(P); break;
          case fusion::Strategy::kBayesian: d = fusion::bayesian_fuse(P, w, prior); break;
          case fusion::Strategy::kMajorityVote: d = fusion::majority_vote(P); break;
        }
        ojson rec;
        rec["subject_id"] = id;
        rec["p0"] = d.fused ? ojson((*d.fused)[0]) : ojson(nullptr);
        rec["p1"] = d.fused ? ojson((*d.fused)[1]) : ojson(nullptr);
        rec["label"] = d.label;
        rec["true_label"] = labels.at(id);
        rec["fallback"] = d.used_fallback;
        out.push_back(rec);
      }
      write_text(cfg_.output_dir / "fused" / spec.key() / fold_file(f), out.dump(2) + "\n");
    }
    log("fuse: " + spec.key());
  }
}

ReportSet Experiment::report() {
  const auto plan = load_split();
  ReportSet rs;
  rs.k = plan.k;
  rs.seed = plan.seed;
  for (const auto& mc : cfg_.modalities) {
    std::vector<eval::FoldMetrics> folds;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const auto recs = posteriors_from_json(
          read_text(cfg_.output_dir / "posteriors" / std::string(to_string(mc.modality)) / fold_file(f)));
      std::vector<int> preds, truth;
      for (const auto& r : recs) {
        preds.push_back(fusion::decide({r.p0, r.p1}));
        truth.push_back(r.true_label);
      }
      folds.push_back({eval::f1_score(preds, truth), eval::accuracy(preds, truth)});
    }
    std::string conf = std::string(to_string(mc.feature_kind)) + " + " +
                       std::string(nn::to_string(mc.encoder.kind));
    if (mc.encoder.kind == nn::EncoderKind::kSpeechCnnPoolLstm) {
      conf += " (" + std::string(nn::to_string(mc.encoder.pool)) + ")";
    }
    rs.rows.push_back({std::string(display_name(mc.modality)), conf, eval::aggregate(folds)});
  }
  for (const auto& spec : cfg_.fusion) {
    std::vector<eval::FoldMetrics> folds;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      std::vector<int> preds, truth;
      try {
        for (const auto& e : json::parse(read_text(cfg_.output_dir / "fused" / spec.key() / fold_file(f)))) {
          preds.push_back(e.at("label").get<int>());
          truth.push_back(e.at("true_label").get<int>());
        }
      } catch (const json::exception& ex) {
        throw DataError(std::string("fused file: ") + ex.what());
      }
      folds.push_back({eval::f1_score(preds, truth), eval::accuracy(preds, truth)});
    }
    rs.rows.push_back({std::string(fusion::display_name(spec.strategy)), spec.describe(),
                       eval::aggregate(folds)});
  }
  for (const auto& row : rs.rows) {
    if (!std::isfinite(row.metrics.mean_f1) || !std::isfinite(row.metrics.std_f1)) {
      throw NumericError("non-finite metric in row " + row.category);
    }
  }
  write_text(cfg_.output_dir / "report.txt", render_report_text(rs));
  write_text(cfg_.output_dir / "report.json", render_report_json(rs));
  log("report: " + (cfg_.output_dir / "report.txt").string());
  return rs;
}

ReportSet Experiment::run() {
  const std::string canonical = config_to_json(cfg_);
  split();
  features();
  train();
  fuse();
  auto rs = report();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  ojson man;
  man["tool"] = "tridep";
  man["version"] = std::string(kVersion);
  man["config_hash"] = std::string("fnv1a64:") + hash;
  man["seed"] = cfg_.seed;
  man["k"] = cfg_.k;
  man["config"] = ojson::parse(canonical);
  write_text(cfg_.output_dir / "run_manifest.json", man.dump(2) + "\n");
  return rs;
}

}  // namespace tridep::pipeline
