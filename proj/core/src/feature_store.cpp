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

#include "tridep/feature_store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

namespace tridep::store {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TDEP1 codec

std::size_t Tdep1Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

constexpr std::size_t kHeaderFixed = 7;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct Header {
  std::vector<std::uint32_t> dims;
  std::size_t payload_offset = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic) {
    throw TensorError(TensorErrorCode::kTruncated, "TDEP1: file shorter than magic");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw TensorError(TensorErrorCode::kBadMagic, "TDEP1: bad magic");
  }
  if (bytes.size() < kHeaderFixed) {
    throw TensorError(TensorErrorCode::kTruncated, "TDEP1: truncated header");
  }
  if (bytes[5] != kDtypeF32) {
    throw TensorError(TensorErrorCode::kUnsupportedDtype,
                      "TDEP1: unsupported dtype code " + std::to_string(bytes[5]));
  }
  const std::size_t rank = bytes[6];
  Header h;
  h.payload_offset = kHeaderFixed + 4 * rank;
  if (bytes.size() < h.payload_offset) {
    throw TensorError(TensorErrorCode::kTruncated, "TDEP1: truncated dims");
  }
  for (std::size_t i = 0; i < rank; ++i) h.dims.push_back(get_u32(bytes.data() + kHeaderFixed + 4 * i));
  return h;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError(TensorErrorCode::kIo, "cannot open tensor file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tdep1Tensor& t) {
  if (t.dims.size() > 255) throw std::invalid_argument("TDEP1: rank above 255");
  if (t.payload.size() != t.element_count()) {
    throw TensorError(TensorErrorCode::kSizeMismatch,
                      "TDEP1: payload has " + std::to_string(t.payload.size()) +
                          " values, dims require " + std::to_string(t.element_count()));
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kDtypeF32);
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  out.reserve(out.size() + 4 * t.payload.size());
  for (float f : t.payload) {
    std::uint32_t raw = 0;
    std::memcpy(&raw, &f, sizeof raw);
    put_u32(out, raw);
  }
  return out;
}

Tdep1Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes);
  Tdep1Tensor t;
  t.dims = h.dims;
  const std::size_t expected = t.element_count();
  const std::size_t available = bytes.size() - h.payload_offset;
  if (available != 4 * expected) {
    throw TensorError(TensorErrorCode::kSizeMismatch,
                      "TDEP1: payload is " + std::to_string(available) + " bytes, dims require " +
                          std::to_string(4 * expected));
  }
  t.payload.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    const std::uint32_t raw = get_u32(bytes.data() + h.payload_offset + 4 * i);
    std::memcpy(&t.payload[i], &raw, sizeof raw);
  }
  return t;
}

void write_tensor(const Tdep1Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorError(TensorErrorCode::kIo, "cannot write tensor file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorError(TensorErrorCode::kIo, "short write: " + path.string());
}

Tdep1Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_tensor(bytes);
  } catch (const TensorError& e) {
    throw TensorError(e.code(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

std::vector<std::uint32_t> read_tensor_dims(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError(TensorErrorCode::kIo, "cannot open tensor file: " + path.string());
  std::vector<std::uint8_t> head(kHeaderFixed + 4 * 255);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(head).dims;
}

Tdep1Tensor to_tensor(std::span<const double> values, std::vector<std::uint32_t> dims) {
  Tdep1Tensor t;
  t.dims = std::move(dims);
  t.payload.reserve(values.size());
  for (double v : values) t.payload.push_back(static_cast<float>(v));
  return t;
}

Tdep1Tensor to_tensor(const FeatureMatrix& m) {
  return to_tensor(m.data, {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)});
}

// ---------------------------------------------------------------------------
// Manifest serialization

std::filesystem::path SubjectManifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.tensor_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::string manifest_to_json(const SubjectManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "tdep-manifest/1";
  j["subject_id"] = m.subject_id;
  j["label"] = m.label;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["modality"] = std::string(to_string(e.modality));
    je["feature_kind"] = std::string(to_string(e.kind));
    je["recording_index"] = e.recording_index ? nlohmann::ordered_json(*e.recording_index)
                                              : nlohmann::ordered_json(nullptr);
    je["tensor_path"] = e.tensor_path;
    je["dims"] = e.dims;
    if (e.sample_rate_hz) je["sample_rate_hz"] = *e.sample_rate_hz;
    if (!e.channel_names.empty()) je["channel_names"] = e.channel_names;
    j["entries"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

SubjectManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  SubjectManifest m;
  m.base_dir = base_dir;
  try {
    const json j = json::parse(text);
    m.subject_id = j.at("subject_id").get<std::string>();
    m.label = j.at("label").get<int>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      const auto mod = parse_modality(je.at("modality").get<std::string>());
      if (!mod) throw DataError("manifest: unknown modality " + je.at("modality").dump());
      e.modality = *mod;
      const auto kind = parse_feature_kind(je.at("feature_kind").get<std::string>());
      if (!kind) throw DataError("manifest: unknown feature_kind " + je.at("feature_kind").dump());
      e.kind = *kind;
      if (je.contains("recording_index") && !je.at("recording_index").is_null()) {
        e.recording_index = je.at("recording_index").get<int>();
      }
      e.tensor_path = je.at("tensor_path").get<std::string>();
      if (je.contains("dims")) e.dims = je.at("dims").get<std::vector<std::size_t>>();
      if (je.contains("sample_rate_hz")) e.sample_rate_hz = je.at("sample_rate_hz").get<int>();
      if (je.contains("channel_names")) {
        e.channel_names = je.at("channel_names").get<std::vector<std::string>>();
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return m;
}

SubjectManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str(), path.parent_path());
}

void save_manifest(const SubjectManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << manifest_to_json(m);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::string dims_string(const std::vector<std::size_t>& d) {
  std::string s = "(";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(d[i]);
  }
  return s + ")";
}

bool is_text_kind(FeatureKind k) { return modality_of(k) == Modality::kText; }

// Shape rule for a feature kind; returns an explanation when violated.
std::optional<std::string> check_dims(const ManifestEntry& e) {
  const auto& d = e.dims;
  const auto bad = [&](const std::string& want) {
    return std::optional<std::string>(std::string(to_string(e.kind)) + " expects " + want +
                                      ", got " + dims_string(d));
  };
  switch (e.kind) {
    case FeatureKind::kRaw:
      if (e.modality == Modality::kEeg) {
        if (d.size() != 2 || d[0] == 0) return bad("(channels, samples)");
      }
      return std::nullopt;
    case FeatureKind::kHandcrafted:
      if (d.size() == 3 && d[1] == 29 && d[2] == 10) return std::nullopt;
      if (d.size() == 2 && d[1] == 290) return std::nullopt;
      return bad("(S, 29, 10) or (S, 290)");
    default:
      break;
  }
  const std::size_t width = *feature_width(e.kind);
  if (is_text_kind(e.kind)) {
    if (e.recording_index) {
      if ((d.size() == 1 && d[0] == width) || (d.size() == 2 && d[0] == 1 && d[1] == width)) {
        return std::nullopt;
      }
      return bad("(" + std::to_string(width) + ") or (1, " + std::to_string(width) + ")");
    }
    if (d.size() == 2 && d[0] >= 1 && d[0] <= kRecordingsPerSubject && d[1] == width) {
      return std::nullopt;
    }
    return bad("(R <= 29, " + std::to_string(width) + ")");
  }
  if (d.size() == 2 && d[1] == width) return std::nullopt;
  return bad("(S, " + std::to_string(width) + ")");
}

}  // namespace

std::vector<Violation> validate_manifest(const SubjectManifest& m) {
  std::vector<Violation> out;
  if (m.subject_id.empty()) out.push_back({std::nullopt, "subject_id", "empty subject_id"});
  if (m.label != 0 && m.label != 1) {
    out.push_back({std::nullopt, "label", "label must be 0 (HC) or 1 (MDD)"});
  }
  if (m.entries.empty()) out.push_back({std::nullopt, "empty", "manifest has no entries"});

  std::set<std::tuple<Modality, FeatureKind, int>> seen;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    const auto kind_mod = modality_of(e.kind);
    if (kind_mod && *kind_mod != e.modality) {
      out.push_back({i, "kind", std::string(to_string(e.kind)) + " is not a " +
                                    std::string(to_string(e.modality)) + " feature"});
    }
    if (!kind_mod && e.modality == Modality::kText) {
      out.push_back({i, "kind", "text has no raw form; expected an embedding kind"});
    }

    if (e.modality == Modality::kEeg && e.recording_index) {
      out.push_back({i, "recording_index", "EEG entries are subject-level"});
    }
    if (e.modality == Modality::kSpeech && !e.recording_index) {
      out.push_back({i, "recording_index", "speech entries need a recording_index"});
    }
    if (e.recording_index &&
        (*e.recording_index < 1 || *e.recording_index > static_cast<int>(kRecordingsPerSubject))) {
      out.push_back({i, "recording_index",
                     "recording_index " + std::to_string(*e.recording_index) +
                         " outside [1, 29]"});
    }
    if (!seen.insert({e.modality, e.kind, e.recording_index.value_or(0)}).second) {
      out.push_back({i, "duplicate", "duplicate entry for this modality, kind, and recording"});
    }

    if (auto why = check_dims(e)) out.push_back({i, "dims", *why});

    if (e.kind == FeatureKind::kRaw && e.modality == Modality::kEeg) {
      if (!e.sample_rate_hz || *e.sample_rate_hz <= 0) {
        out.push_back({i, "sample_rate", "raw EEG needs a positive sample_rate_hz"});
      }
      if (!e.channel_names.empty() && !e.dims.empty() && e.channel_names.size() != e.dims[0]) {
        out.push_back({i, "channel_names", "channel_names size differs from dims[0]"});
      }
    }

    const auto path = m.resolve(e);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      out.push_back({i, "missing", "tensor file not found: " + path.string()});
      continue;
    }
    const bool is_wav = e.kind == FeatureKind::kRaw && e.modality == Modality::kSpeech;
    if (is_wav) continue;
    try {
      const auto file_dims = read_tensor_dims(path);
      const std::vector<std::size_t> fd(file_dims.begin(), file_dims.end());
      if (fd != e.dims) {
        out.push_back({i, "dims", "file dims " + dims_string(fd) + " differ from manifest " +
                                      dims_string(e.dims)});
      }
    } catch (const TensorError& err) {
      out.push_back({i, "corrupt", err.what()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cohorts

std::vector<CohortEntry> load_cohort(const std::filesystem::path& root) {
  const auto path = root / "cohort.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file: " + path.string());
  std::vector<CohortEntry> out;
  try {
    const json j = json::parse(in);
    for (const auto& s : j.at("subjects")) {
      CohortEntry e;
      e.subject_id = s.at("id").get<std::string>();
      e.label = s.at("label").get<int>();
      e.manifest = s.at("manifest").get<std::string>();
      if (e.label != 0 && e.label != 1) throw DataError("cohort: label must be 0 or 1 for " + e.subject_id);
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("cohort file: ") + e.what());
  }
  if (out.empty()) throw DataError("cohort file lists no subjects: " + path.string());
  return out;
}

void save_cohort(const std::vector<CohortEntry>& subjects, const std::filesystem::path& root,
                 const std::string& extra) {
  nlohmann::ordered_json j;
  j["format"] = "tdep-cohort/1";
  if (!extra.empty()) j["generator"] = nlohmann::ordered_json::parse(extra);
  j["subjects"] = nlohmann::ordered_json::array();
  for (const auto& e : subjects) {
    j["subjects"].push_back({{"id", e.subject_id}, {"label", e.label}, {"manifest", e.manifest}});
  }
  std::ofstream out(root / "cohort.json", std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write cohort file in " + root.string());
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Bundles

bool SubjectBundle::has(Modality m) const {
  switch (m) {
    case Modality::kEeg: return eeg.has_value();
    case Modality::kSpeech: return speech.has_value();
    case Modality::kText: return text.has_value();
  }
  return false;
}

const FeatureMatrix& SubjectBundle::get(Modality m) const {
  const std::optional<FeatureMatrix>* p = nullptr;
  switch (m) {
    case Modality::kEeg: p = &eeg; break;
    case Modality::kSpeech: p = &speech; break;
    case Modality::kText: p = &text; break;
  }
  if (p == nullptr || !p->has_value()) {
    throw DataError("subject " + subject_id + " has no " + std::string(to_string(m)) + " features");
  }
  return **p;
}

std::optional<FeatureMatrix>& SubjectBundle::slot(Modality m) {
  switch (m) {
    case Modality::kEeg: return eeg;
    case Modality::kSpeech: return speech;
    case Modality::kText: break;
  }
  return text;
}

SubjectBundle assemble_bundle(const SubjectManifest& m, const KindSelection& selection) {
  const auto violations = validate_manifest(m);
  if (!violations.empty()) {
    std::string msg = "invalid manifest for subject '" + m.subject_id + "':";
    for (const auto& v : violations) {
      msg += "\n  ";
      if (v.entry) msg += "entry " + std::to_string(*v.entry) + ": ";
      msg += "[" + v.code + "] " + v.message;
    }
    throw DataError(msg);
  }

  SubjectBundle b;
  b.subject_id = m.subject_id;
  b.label = m.label;
  for (Modality mod : kAllModalities) {
    std::optional<FeatureKind> kind;
    if (auto it = selection.find(mod); it != selection.end()) {
      kind = it->second;
    } else {
      std::set<FeatureKind> kinds;
      for (const auto& e : m.entries) {
        if (e.modality == mod && e.kind != FeatureKind::kRaw) kinds.insert(e.kind);
      }
      if (kinds.size() == 1) kind = *kinds.begin();
    }
    if (!kind) continue;

    FeatureMatrix fm;
    fm.kind = *kind;
    fm.cols = *feature_width(*kind);
    bool any = false;
    for (const auto& e : m.entries) {
      if (e.modality != mod || e.kind != *kind) continue;
      any = true;
      const auto t = read_tensor(m.resolve(e));
      const std::size_t rows = t.payload.size() / fm.cols;
      fm.data.insert(fm.data.end(), t.payload.begin(), t.payload.end());
      fm.rows += rows;
      if (rows > 0) fm.groups.push_back(rows);
    }
    if (any) b.slot(mod) = std::move(fm);
  }
  if (!b.eeg && !b.speech && !b.text) {
    throw DataError("subject " + m.subject_id + ": no feature modality present");
  }
  return b;
}

}  // namespace tridep::store
