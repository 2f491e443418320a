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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "tridep/feature_store.hpp"

namespace {

namespace store = tridep::store;
namespace fs = std::filesystem;
using tridep::FeatureKind;
using tridep::Modality;

class StoreTest : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("tridep_store_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  store::ManifestEntry entry(Modality m, FeatureKind k, std::optional<int> index,
                             std::vector<std::uint32_t> dims, const std::string& file,
                             float fill = 0.5f) {
    store::Tdep1Tensor t;
    t.dims = dims;
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    t.payload.assign(n, fill);
    store::write_tensor(t, dir / file);
    store::ManifestEntry e;
    e.modality = m;
    e.kind = k;
    e.recording_index = index;
    e.tensor_path = file;
    e.dims.assign(dims.begin(), dims.end());
    return e;
  }

  store::SubjectManifest manifest() const {
    store::SubjectManifest m;
    m.subject_id = "sub-001";
    m.label = 1;
    m.base_dir = dir;
    return m;
  }

  static bool has_code(const std::vector<store::Violation>& v, const std::string& code) {
    for (const auto& x : v) {
      if (x.code == code) return true;
    }
    return false;
  }
};

TEST_F(StoreTest, RoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g;
  store::Tdep1Tensor t;
  t.dims = {3, 4, 5};
  t.payload.resize(60);
  for (float& v : t.payload) v = g(rng);
  t.payload[7] = -0.0f;
  store::write_tensor(t, dir / "t.tdep");
  const auto r = store::read_tensor(dir / "t.tdep");
  EXPECT_EQ(r.dims, t.dims);
  ASSERT_EQ(r.payload.size(), 60u);
  EXPECT_EQ(std::memcmp(r.payload.data(), t.payload.data(), 60 * sizeof(float)), 0);
  EXPECT_EQ(store::read_tensor_dims(dir / "t.tdep"), t.dims);
}

TEST_F(StoreTest, GoldenBytes) {
  store::Tdep1Tensor t;
  t.dims = {2};
  t.payload = {1.0f, -2.0f};
  const std::vector<std::uint8_t> expected = {'T', 'D', 'E', 'P', '1', 0x01, 0x01, 0x02, 0x00, 0x00, 0x00,
                                              0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0};
  EXPECT_EQ(store::encode_tensor(t), expected);
  const auto back = store::decode_tensor(expected);
  EXPECT_EQ(back.payload, t.payload);
}

TEST_F(StoreTest, WrongMagic) {
  auto bytes = store::encode_tensor({{1}, {1.0f}});
  bytes[0] = 'X';
  try {
    store::decode_tensor(bytes);
    FAIL();
  } catch (const store::TensorError& e) {
    EXPECT_EQ(e.code(), store::TensorErrorCode::kBadMagic);
  }
}

TEST_F(StoreTest, SizeMismatch) {
  store::Tdep1Tensor t;
  t.dims = {2, 2};
  t.payload = {1.0f, 2.0f, 3.0f};
  try {
    store::encode_tensor(t);
    FAIL();
  } catch (const store::TensorError& e) {
    EXPECT_EQ(e.code(), store::TensorErrorCode::kSizeMismatch);
  }
  // Same condition on disk: header says 2x2, payload holds three values.
  auto bytes = store::encode_tensor({{3}, {1.0f, 2.0f, 3.0f}});
  bytes[6] = 2;
  const std::uint8_t dims[8] = {2, 0, 0, 0, 2, 0, 0, 0};
  bytes.erase(bytes.begin() + 7, bytes.begin() + 11);
  bytes.insert(bytes.begin() + 7, dims, dims + 8);
  try {
    store::decode_tensor(bytes);
    FAIL();
  } catch (const store::TensorError& e) {
    EXPECT_EQ(e.code(), store::TensorErrorCode::kSizeMismatch);
  }
}

TEST_F(StoreTest, TruncatedAndBadDtype) {
  const auto bytes = store::encode_tensor({{4, 4}, std::vector<float>(16, 1.0f)});
  auto cut = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 9);
  try {
    store::decode_tensor(cut);
    FAIL();
  } catch (const store::TensorError& e) {
    EXPECT_EQ(e.code(), store::TensorErrorCode::kTruncated);
  }
  auto bad = bytes;
  bad[5] = 0x07;
  try {
    store::decode_tensor(bad);
    FAIL();
  } catch (const store::TensorError& e) {
    EXPECT_EQ(e.code(), store::TensorErrorCode::kUnsupportedDtype);
  }
  EXPECT_THROW(store::read_tensor(dir / "nope.tdep"), tridep::DataError);
}

TEST_F(StoreTest, XlsrEntryIsValid) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kXlsr, 1, {12, 1024}, "x.tdep"));
  EXPECT_TRUE(store::validate_manifest(m).empty());
}

TEST_F(StoreTest, HubertWrongWidthIsDimViolation) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kHubert, 1, {12, 1000}, "h.tdep"));
  const auto v = store::validate_manifest(m);
  EXPECT_TRUE(has_code(v, "dims"));
}

TEST_F(StoreTest, TextIndexThirtyIsViolation) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kText, FeatureKind::kBert, 30, {768}, "t.tdep"));
  EXPECT_TRUE(has_code(store::validate_manifest(m), "recording_index"));
}

TEST_F(StoreTest, ManifestLevelRules) {
  store::SubjectManifest m;
  m.label = 3;
  m.base_dir = dir;
  const auto v = store::validate_manifest(m);
  EXPECT_TRUE(has_code(v, "subject_id"));
  EXPECT_TRUE(has_code(v, "label"));
  EXPECT_TRUE(has_code(v, "empty"));
}

TEST_F(StoreTest, MissingFileAndFileDimsDisagree) {
  auto m = manifest();
  auto e = entry(Modality::kEeg, FeatureKind::kLabram, std::nullopt, {30, 200}, "e.tdep");
  e.dims = {31, 200};
  m.entries.push_back(e);
  auto gone = entry(Modality::kEeg, FeatureKind::kCbramod, std::nullopt, {30, 200}, "c.tdep");
  gone.tensor_path = "absent.tdep";
  m.entries.push_back(gone);
  const auto v = store::validate_manifest(m);
  EXPECT_TRUE(has_code(v, "dims"));
  EXPECT_TRUE(has_code(v, "missing"));
}

TEST_F(StoreTest, ManifestJsonRoundTrip) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kMfcc, 2, {3, 40}, "s.tdep"));
  store::save_manifest(m, dir / "manifest.json");
  const auto r = store::load_manifest(dir / "manifest.json");
  EXPECT_EQ(r.subject_id, "sub-001");
  EXPECT_EQ(r.label, 1);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].recording_index, 2);
  EXPECT_EQ(r.entries[0].dims, (std::vector<std::size_t>{3, 40}));
  EXPECT_EQ(store::manifest_to_json(r), store::manifest_to_json(m));
}

TEST_F(StoreTest, MalformedManifestIsDataError) {
  EXPECT_THROW(store::manifest_from_json("{\"subject_id\": 1", dir), tridep::DataError);
  EXPECT_THROW(store::manifest_from_json(
                   R"({"subject_id":"a","label":0,"entries":[{"modality":"smell","kind":"raw","tensor_path":"x"}]})",
                   dir),
               tridep::DataError);
}

TEST_F(StoreTest, TextStackOf29) {
  auto m = manifest();
  for (int r = 1; r <= 29; ++r) {
    m.entries.push_back(entry(Modality::kText, FeatureKind::kBert, r, {768},
                              "t" + std::to_string(r) + ".tdep", static_cast<float>(r)));
  }
  const auto b = store::assemble_bundle(m);
  ASSERT_TRUE(b.has(Modality::kText));
  EXPECT_EQ(b.get(Modality::kText).rows, 29u);
  EXPECT_EQ(b.get(Modality::kText).cols, 768u);
  EXPECT_EQ(b.get(Modality::kText).row(28)[0], 29.0);
  EXPECT_FALSE(b.has(Modality::kEeg));
}

TEST_F(StoreTest, SpeechRecordingsConcatenate) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kMfcc, 1, {3, 40}, "a.tdep", 1.0f));
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kMfcc, 2, {4, 40}, "b.tdep", 2.0f));
  const auto b = store::assemble_bundle(m);
  const auto& s = b.get(Modality::kSpeech);
  EXPECT_EQ(s.rows, 7u);
  EXPECT_EQ(s.cols, 40u);
  EXPECT_EQ(s.groups, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(s.row(3)[0], 2.0);
}

TEST_F(StoreTest, InvalidManifestYieldsNoBundle) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kMfcc, 1, {3, 40}, "a.tdep"));
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kHubert, 1, {12, 1000}, "h.tdep"));
  try {
    store::assemble_bundle(m);
    FAIL();
  } catch (const tridep::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dims"), std::string::npos);
  }
}

TEST_F(StoreTest, KindSelection) {
  auto m = manifest();
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kMfcc, 1, {3, 40}, "a.tdep"));
  m.entries.push_back(entry(Modality::kSpeech, FeatureKind::kXlsr, 1, {3, 1024}, "b.tdep"));
  // Two speech kinds and no selection: nothing loads, which leaves no modality.
  EXPECT_THROW(store::assemble_bundle(m), tridep::DataError);
  const auto chosen = store::assemble_bundle(m, {{Modality::kSpeech, FeatureKind::kXlsr}});
  EXPECT_EQ(chosen.get(Modality::kSpeech).cols, 1024u);
}

TEST_F(StoreTest, CohortRoundTrip) {
  std::vector<store::CohortEntry> c = {{"sub-001", 1, "sub-001/manifest.json"},
                                       {"sub-002", 0, "sub-002/manifest.json"}};
  store::save_cohort(c, dir);
  const auto r = store::load_cohort(dir);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].subject_id, "sub-002");
  EXPECT_EQ(r[1].label, 0);
  EXPECT_EQ(r[0].manifest, "sub-001/manifest.json");
}

}  // namespace
