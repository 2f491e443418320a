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

#include <complex>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tridep/dsp.hpp"
#include "tridep/encoders.hpp"
#include "tridep/spectral.hpp"
#include "tridep/speech_features.hpp"

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 1);
  std::vector<std::complex<double>> a(n);
  for (auto _ : state) {
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i];
    tridep::dsp::fft_inplace(a);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

// One 5 s speech segment at 16 kHz.
void BM_Mfcc(benchmark::State& state) {
  const auto x = noise(80000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tridep::speech::mfcc(x));
}
BENCHMARK(BM_Mfcc)->Unit(benchmark::kMillisecond);

// Five minutes of one EEG channel at 250 Hz.
void BM_Filtfilt(benchmark::State& state) {
  const auto x = noise(300 * 250, 3);
  const auto sos = tridep::dsp::butterworth_bandpass(4, 0.5, 50.0, 250.0);
  for (auto _ : state) benchmark::DoNotOptimize(tridep::dsp::filtfilt(sos, x));
}
BENCHMARK(BM_Filtfilt)->Unit(benchmark::kMillisecond);

void BM_EncoderForward(benchmark::State& state) {
  using tridep::nn::EncoderKind;
  const auto kind = static_cast<EncoderKind>(state.range(0));
  tridep::nn::EncoderConfig c;
  c.kind = kind;
  c.input_dim = 40;
  c.hidden = 16;
  c.layers = 1;
  const tridep::nn::Model m(c, 1);
  tridep::nn::Sample s;
  s.x = tridep::nn::Mat(30, 40, noise(30 * 40, 4));
  if (kind == EncoderKind::kSpeechCnnPoolLstm) s.groups = {15, 15};
  state.SetLabel(std::string(tridep::nn::to_string(kind)));
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(s));
}
BENCHMARK(BM_EncoderForward)
    ->DenseRange(0, 4)
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
