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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tridep/error.hpp"
#include "tridep/types.hpp"

namespace tridep::store {

// TDEP1 layout, little-endian throughout:
//
//   offset 0  "TDEP1"            5 bytes magic
//   offset 5  dtype              1 byte, 0x01 = f32le
//   offset 6  rank r             1 byte
//   offset 7  dims               r x u32le
//   then      payload            product(dims) x f32le, row-major
inline constexpr char kMagic[5] = {'T', 'D', 'E', 'P', '1'};
inline constexpr std::uint8_t kDtypeF32 = 0x01;

enum class TensorErrorCode {
  kIo,
  kBadMagic,
  kUnsupportedDtype,
  kTruncated,     // header cut short
  kSizeMismatch,  // payload length disagrees with dims
};

class TensorError : public DataError {
 public:
  TensorError(TensorErrorCode code, const std::string& what) : DataError(what), code_(code) {}
  TensorErrorCode code() const { return code_; }

 private:
  TensorErrorCode code_;
};

struct Tdep1Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;

  std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_tensor(const Tdep1Tensor& t);
Tdep1Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const Tdep1Tensor& t, const std::filesystem::path& path);
Tdep1Tensor read_tensor(const std::filesystem::path& path);
// Parses only the header.
std::vector<std::uint32_t> read_tensor_dims(const std::filesystem::path& path);

// Conversions between feature matrices and rank-2 tensors (rows x cols).
Tdep1Tensor to_tensor(const FeatureMatrix& m);
Tdep1Tensor to_tensor(std::span<const double> values, std::vector<std::uint32_t> dims);

// ---------------------------------------------------------------------------
// Manifests

struct ManifestEntry {
  Modality modality = Modality::kEeg;
  FeatureKind kind = FeatureKind::kRaw;
  std::optional<int> recording_index;  // 1-based; null for subject-level entries
  std::string tensor_path;             // relative to the manifest directory, or absolute
  std::vector<std::size_t> dims;
  // Raw EEG only.
  std::optional<int> sample_rate_hz;
  std::vector<std::string> channel_names;
};

struct SubjectManifest {
  std::string subject_id;
  int label = 0;  // 1 = MDD, 0 = HC
  std::vector<ManifestEntry> entries;
  // Directory relative paths resolve against; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
};

std::string manifest_to_json(const SubjectManifest& m);
SubjectManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir);
SubjectManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const SubjectManifest& m, const std::filesystem::path& path);

struct Violation {
  std::optional<std::size_t> entry;  // index into entries, or null for manifest-level
  std::string code;                  // short machine-readable tag
  std::string message;
};

// Empty iff every referenced tensor exists and every shape matches its kind.
std::vector<Violation> validate_manifest(const SubjectManifest& m);

// ---------------------------------------------------------------------------
// Cohorts: <root>/cohort.json lists every subject manifest.
//
//   {"format": "tdep-cohort/1",
//    "subjects": [{"id": "sub-001", "label": 1, "manifest": "sub-001/manifest.json"}, ...]}

struct CohortEntry {
  std::string subject_id;
  int label = 0;
  std::string manifest;  // relative to the cohort root
};

std::vector<CohortEntry> load_cohort(const std::filesystem::path& root);
// `extra` (a JSON object text, may be empty) is stored under "generator".
void save_cohort(const std::vector<CohortEntry>& subjects, const std::filesystem::path& root,
                 const std::string& extra = {});

// ---------------------------------------------------------------------------
// Bundles

struct SubjectBundle {
  std::string subject_id;
  int label = 0;
  std::optional<FeatureMatrix> eeg;
  std::optional<FeatureMatrix> speech;
  std::optional<FeatureMatrix> text;

  bool has(Modality m) const;
  const FeatureMatrix& get(Modality m) const;
  std::optional<FeatureMatrix>& slot(Modality m);
};

// Which feature kind to load per modality. Modalities without a selection
// use their single non-raw kind when unambiguous and are left empty
// otherwise.
using KindSelection = std::map<Modality, FeatureKind>;

// Validates, then loads. Rows follow manifest entry order. Throws DataError
// (carrying every violation) on an invalid manifest; never returns a
// partial bundle.
SubjectBundle assemble_bundle(const SubjectManifest& m, const KindSelection& selection = {});

}  // namespace tridep::store
