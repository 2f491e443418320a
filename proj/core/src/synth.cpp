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
#include "tridep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "tridep/eeg_features.hpp"
#include "tridep/error.hpp"
#include "tridep/feature_store.hpp"
#include "tridep/speech_features.hpp"
#include "tridep/wav.hpp"

namespace tridep::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kTextDim = 768;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Portable draws: the same bits on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(kTwoPi * u2);
    spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool spare_ = false;
  double cached_ = 0.0;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64((index + 1) * 0x100 + stream));
}

// Paul Kellet's refined pink filter over unit white noise.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    out[i] = (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362) * 0.11;
    b6 = w * 0.115926;
  }
  return out;
}

dsp::SignalBuffer make_eeg(const SynthSpec& spec, int label, Rng& id_rng, Rng& rng) {
  constexpr double fs = eeg::kBranch1Rate;
  const auto& names = eeg::default_branch1_channels();
  const auto n = static_cast<std::size_t>(std::llround(spec.eeg_seconds * fs));
  dsp::SignalBuffer sig(names.size(), n, eeg::kBranch1Rate, names);
  for (std::size_t c = 0; c < names.size(); ++c) {
    const double gain = std::exp(spec.subject_scale * id_rng.normal());
    const double alpha = 4.0 * (1.0 + 0.1 * rng.normal()) + (label == 1 ? spec.eeg_alpha_shift : 0.0);
    const double phase = kTwoPi * rng.uniform();
    const double line_phase = kTwoPi * rng.uniform();
    const auto pink = pink_noise(n, rng);
    auto ch = sig.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      ch[i] = 10.0 * spec.noise_scale * gain * pink[i] + alpha * std::sin(kTwoPi * 10.0 * t + phase) +
              std::sin(kTwoPi * eeg::kLineFrequencyHz * t + line_phase);
    }
  }
  return sig;
}

// Syllable bursts of a harmonic glottal tone whose envelope is jittered by
// slow noise, framed by near-silent lead-in and tail.
dsp::SignalBuffer make_speech(const SynthSpec& spec, double f0, Rng& rng) {
  constexpr double fs = speech::kSampleRate;
  const auto n = static_cast<std::size_t>(std::llround(spec.speech_seconds * fs));
  std::vector<double> x(n, 0.0);
  const auto lead = static_cast<std::size_t>(0.3 * fs);
  const std::size_t tail = lead;
  const auto syll = static_cast<std::size_t>(0.16 * fs);
  const auto gap = static_cast<std::size_t>(0.09 * fs);
  const auto pause = static_cast<std::size_t>(0.35 * fs);

  double phase = 0.0;
  double env_noise = 0.0;
  std::size_t i = lead;
  int count = 0;
  while (i + syll + tail < n) {
    const double amp = 0.6 + 0.4 * rng.uniform();
    for (std::size_t k = 0; k < syll; ++k) {
      const double t = static_cast<double>(i + k) / fs;
      const double f = f0 * (1.0 + 0.02 * std::sin(kTwoPi * 5.0 * t));
      phase += kTwoPi * f / fs;
      double v = 0.0;
      for (int h = 1; h <= 8; ++h) v += std::sin(h * phase) / h;
      env_noise = 0.995 * env_noise + 0.005 * rng.normal();
      const double win = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(syll));
      x[i + k] = amp * win * (1.0 + 2.0 * env_noise) * v;
    }
    i += syll + (++count % 5 == 0 ? pause : gap);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const bool edge = k < lead || k + tail >= n;
    x[k] += (edge ? 2e-4 : 4e-3 * spec.noise_scale) * rng.normal();
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0) {
    for (double& v : x) v *= 0.5 / peak;
  }
  return dsp::SignalBuffer(std::vector<std::vector<double>>{std::move(x)}, speech::kSampleRate);
}

std::string two_digits(int r) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", r);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  std::vector<std::string> bad;
  if (n_subjects < 2) bad.push_back("n_subjects must be >= 2");
  if (!(class_balance > 0.0 && class_balance < 1.0)) bad.push_back("class_balance must be in (0, 1)");
  if (eeg_alpha_shift < 0 || speech_f0_shift < 0 || text_embedding_shift < 0) {
    bad.push_back("shifts must be >= 0");
  }
  if (!(noise_scale > 0.0)) bad.push_back("noise_scale must be > 0");
  if (subject_scale < 0) bad.push_back("subject_scale must be >= 0");
  if (!(eeg_seconds >= 10.0)) bad.push_back("eeg_seconds must be >= 10");
  if (!(speech_seconds >= 1.0)) bad.push_back("speech_seconds must be >= 1");
  if (recordings < 1 || recordings > 29) bad.push_back("recordings must be in [1, 29]");
  if (!bad.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
}

std::string subject_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "sub-%03zu", index + 1);
  return buf;
}

std::vector<int> assign_labels(const SynthSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.n_subjects);
  const auto mdd = static_cast<std::size_t>(std::llround(spec.class_balance * spec.n_subjects));
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(mdd, n)), 1);
  Rng rng(splitmix64(spec.seed ^ 0x6C6162656Cull));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(labels[i], labels[static_cast<std::size_t>(rng.bits() % (i + 1))]);
  }
  return labels;
}

SynthSubject generate_subject(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  SynthSubject s;
  s.id = subject_id(index);
  s.label = assign_labels(spec).at(index);
  Rng id_rng(stream_seed(spec.seed, index, 0));
  Rng eeg_rng(stream_seed(spec.seed, index, 1));
  Rng speech_rng(stream_seed(spec.seed, index, 2));
  Rng text_rng(stream_seed(spec.seed, index, 3));

  s.eeg = make_eeg(spec, s.label, id_rng, eeg_rng);

  const double f0 = 120.0 + (s.label == 1 ? spec.speech_f0_shift : 0.0) +
                    10.0 * spec.subject_scale * id_rng.normal();
  for (int r = 0; r < spec.recordings; ++r) {
    const double jitter = 2.0 * speech_rng.normal();
    s.speech.push_back(make_speech(spec, std::clamp(f0 + jitter, 70.0, 350.0), speech_rng));
  }

  std::vector<double> offset(kTextDim);
  for (auto& v : offset) v = spec.subject_scale * id_rng.normal();
  const double shift = s.label == 1 ? spec.text_embedding_shift : 0.0;
  s.text.resize(static_cast<std::size_t>(spec.recordings) * kTextDim);
  for (std::size_t r = 0; r < static_cast<std::size_t>(spec.recordings); ++r) {
    for (std::size_t j = 0; j < kTextDim; ++j) {
      s.text[r * kTextDim + j] = shift + offset[j] + spec.noise_scale * text_rng.normal();
    }
  }
  return s;
}

void generate(const SynthSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir);
  std::vector<store::CohortEntry> cohort;
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_subjects); ++i) {
    const auto s = generate_subject(spec, i);
    const auto sub = dir / s.id;
    std::filesystem::create_directories(sub);

    store::SubjectManifest m;
    m.subject_id = s.id;
    m.label = s.label;
    m.base_dir = sub;

    store::write_tensor(store::to_tensor(s.eeg.data(), {static_cast<std::uint32_t>(s.eeg.channels()),
                                                        static_cast<std::uint32_t>(s.eeg.samples())}),
                        sub / "eeg_raw.tdep");
    store::ManifestEntry eeg;
    eeg.modality = Modality::kEeg;
    eeg.kind = FeatureKind::kRaw;
    eeg.tensor_path = "eeg_raw.tdep";
    eeg.dims = {s.eeg.channels(), s.eeg.samples()};
    eeg.sample_rate_hz = s.eeg.sample_rate();
    eeg.channel_names = s.eeg.channel_names();
    m.entries.push_back(eeg);

    for (std::size_t r = 0; r < s.speech.size(); ++r) {
      const std::string name = "speech_r" + two_digits(static_cast<int>(r + 1)) + ".wav";
      dsp::write_wav(sub / name, s.speech[r], dsp::WavEncoding::kPcm16);
      store::ManifestEntry e;
      e.modality = Modality::kSpeech;
      e.kind = FeatureKind::kRaw;
      e.recording_index = static_cast<int>(r + 1);
      e.tensor_path = name;
      e.dims = {s.speech[r].samples()};
      e.sample_rate_hz = s.speech[r].sample_rate();
      m.entries.push_back(e);
    }

    store::write_tensor(store::to_tensor(s.text, {static_cast<std::uint32_t>(spec.recordings),
                                                  static_cast<std::uint32_t>(kTextDim)}),
                        sub / "text.tdep");
    store::ManifestEntry text;
    text.modality = Modality::kText;
    text.kind = FeatureKind::kTextEmbedding;
    text.tensor_path = "text.tdep";
    text.dims = {static_cast<std::size_t>(spec.recordings), kTextDim};
    m.entries.push_back(text);

    store::save_manifest(m, sub / "manifest.json");
    cohort.push_back({s.id, s.label, s.id + "/manifest.json"});
  }
  store::save_cohort(cohort, dir, spec_to_json(spec));
}

std::string spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_subjects"] = spec.n_subjects;
  j["class_balance"] = spec.class_balance;
  j["eeg_alpha_shift"] = spec.eeg_alpha_shift;
  j["speech_f0_shift"] = spec.speech_f0_shift;
  j["text_embedding_shift"] = spec.text_embedding_shift;
  j["noise_scale"] = spec.noise_scale;
  j["seed"] = spec.seed;
  j["subject_scale"] = spec.subject_scale;
  j["eeg_seconds"] = spec.eeg_seconds;
  j["speech_seconds"] = spec.speech_seconds;
  j["recordings"] = spec.recordings;
  return j.dump();
}

SynthSpec spec_from_json(const std::string& text) {
  SynthSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    static const std::vector<std::string> known = {
        "n_subjects", "class_balance", "eeg_alpha_shift", "speech_f0_shift",
        "text_embedding_shift", "noise_scale", "seed", "subject_scale",
        "eeg_seconds", "speech_seconds", "recordings"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError("unknown synthetic spec field: " + key);
      }
    }
    s.n_subjects = j.value("n_subjects", s.n_subjects);
    s.class_balance = j.value("class_balance", s.class_balance);
    s.eeg_alpha_shift = j.value("eeg_alpha_shift", s.eeg_alpha_shift);
    s.speech_f0_shift = j.value("speech_f0_shift", s.speech_f0_shift);
    s.text_embedding_shift = j.value("text_embedding_shift", s.text_embedding_shift);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.seed = j.value("seed", s.seed);
    s.subject_scale = j.value("subject_scale", s.subject_scale);
    s.eeg_seconds = j.value("eeg_seconds", s.eeg_seconds);
    s.speech_seconds = j.value("speech_seconds", s.speech_seconds);
    s.recordings = j.value("recordings", s.recordings);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace tridep::synth
