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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "tridep/eeg_features.hpp"
#include "tridep/error.hpp"
#include "tridep/feature_store.hpp"
#include "tridep/spectral.hpp"
#include "tridep/synth.hpp"

namespace {

namespace sy = tridep::synth;
namespace fs = std::filesystem;

sy::SynthSpec small_spec() {
  sy::SynthSpec s;
  s.n_subjects = 6;
  s.eeg_seconds = 20.0;
  s.speech_seconds = 3.0;
  s.recordings = 3;
  s.eeg_alpha_shift = 3.0;
  s.speech_f0_shift = 30.0;
  s.text_embedding_shift = 0.5;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Mean alpha-band power across channels of one subject's raw EEG.
double alpha_power(const tridep::dsp::SignalBuffer& eeg) {
  double acc = 0.0;
  for (std::size_t c = 0; c < eeg.channels(); ++c) {
    const auto psd = tridep::dsp::welch_psd(eeg.channel(c), eeg.sample_rate(), 250);
    acc += tridep::eeg::band_power(psd.density, psd.freqs_hz, 8.0, 13.0);
  }
  return acc / static_cast<double>(eeg.channels());
}

// Welch two-sample t-test, two-sided p-value.
double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
  auto stats = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::pair{m, s / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::pair<std::vector<double>, std::vector<double>> alpha_by_class(const sy::SynthSpec& spec) {
  const auto labels = sy::assign_labels(spec);
  std::vector<double> mdd, hc;
  for (int i = 0; i < spec.n_subjects; ++i) {
    const auto s = sy::generate_subject(spec, static_cast<std::size_t>(i));
    (labels[static_cast<std::size_t>(i)] ? mdd : hc).push_back(alpha_power(s.eeg));
  }
  return {mdd, hc};
}

TEST(Synth, LabelsFollowBalance) {
  sy::SynthSpec s;
  const auto labels = sy::assign_labels(s);
  ASSERT_EQ(labels.size(), 38u);
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 19);
  s.class_balance = 0.25;
  s.n_subjects = 20;
  const auto l2 = sy::assign_labels(s);
  EXPECT_EQ(std::count(l2.begin(), l2.end(), 1), 5);
  EXPECT_EQ(sy::assign_labels(s), l2);
}

TEST(Synth, SubjectShapes) {
  const auto spec = small_spec();
  const auto s = sy::generate_subject(spec, 0);
  EXPECT_EQ(s.id, "sub-001");
  EXPECT_EQ(s.eeg.channels(), 29u);
  EXPECT_EQ(s.eeg.samples(), 5000u);
  EXPECT_EQ(s.eeg.sample_rate(), 250);
  EXPECT_EQ(s.speech.size(), 3u);
  EXPECT_EQ(s.speech[0].sample_rate(), 16000);
  EXPECT_EQ(s.text.size(), 3u * 768u);
}

TEST(Synth, SubjectsAreIndependentOfCohortSize) {
  auto a = small_spec();
  auto b = small_spec();
  b.n_subjects = 12;
  EXPECT_EQ(sy::generate_subject(a, 2).eeg.data(), sy::generate_subject(b, 2).eeg.data());
}

TEST(Synth, GenerateIsByteIdentical) {
  const auto root = fs::temp_directory_path() / "tridep_synth_det";
  fs::remove_all(root);
  const auto spec = small_spec();
  sy::generate(spec, root / "a");
  sy::generate(spec, root / "b");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "a");
    ASSERT_TRUE(fs::exists(root / "b" / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(root / "b" / rel)) << rel;
    ++files;
  }
  // cohort.json + per subject: eeg, 3 wavs, text, manifest.
  EXPECT_EQ(files, 1u + 6u * 6u);

  const auto cohort = tridep::store::load_cohort(root / "a");
  ASSERT_EQ(cohort.size(), 6u);
  for (const auto& c : cohort) {
    const auto m = tridep::store::load_manifest(root / "a" / c.manifest);
    EXPECT_TRUE(tridep::store::validate_manifest(m).empty()) << c.subject_id;
    EXPECT_EQ(m.label, c.label);
  }
  fs::remove_all(root);
}

TEST(Synth, ZeroShiftAlphaIsIndistinguishable) {
  sy::SynthSpec spec;
  spec.n_subjects = 100;
  spec.eeg_seconds = 10.0;
  spec.recordings = 1;
  spec.speech_seconds = 1.0;
  const auto [mdd, hc] = alpha_by_class(spec);
  EXPECT_GT(welch_p(mdd, hc), 0.01);
}

TEST(Synth, AlphaShiftIsDetectable) {
  sy::SynthSpec spec;
  spec.n_subjects = 40;
  spec.eeg_seconds = 10.0;
  spec.recordings = 1;
  spec.speech_seconds = 1.0;
  spec.eeg_alpha_shift = 3.0;
  const auto [mdd, hc] = alpha_by_class(spec);
  EXPECT_LT(welch_p(mdd, hc), 0.01);
}

TEST(Synth, SpecJsonRoundTripAndValidation) {
  auto spec = small_spec();
  spec.seed = 99;
  const auto back = sy::spec_from_json(sy::spec_to_json(spec));
  EXPECT_EQ(sy::spec_to_json(back), sy::spec_to_json(spec));
  EXPECT_THROW(sy::spec_from_json(R"({"n_subjects": 10, "colour": 3})"), tridep::ConfigError);
  EXPECT_THROW(sy::spec_from_json(R"({"eeg_alpha_shift": -1})"), tridep::ConfigError);
  EXPECT_THROW(sy::spec_from_json(R"({"class_balance": 1.5})"), tridep::ConfigError);
  EXPECT_THROW(sy::spec_from_json("{"), tridep::ConfigError);
}

}  // namespace
