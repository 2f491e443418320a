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
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles/reference_dft.hpp"
#include "tridep/dsp.hpp"
#include "tridep/error.hpp"

namespace {

using tridep::dsp::SignalBuffer;
constexpr double kPi = std::numbers::pi;

SignalBuffer sine(double freq, double fs, double seconds, double amp = 1.0) {
  const auto n = static_cast<std::size_t>(std::lround(fs * seconds));
  SignalBuffer s(1, n, static_cast<int>(fs));
  for (std::size_t i = 0; i < n; ++i) s.channel(0)[i] = amp * std::sin(2 * kPi * freq * i / fs);
  return s;
}

double rms(std::span<const double> x, std::size_t skip = 0) {
  double acc = 0.0;
  for (std::size_t i = skip; i < x.size() - skip; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(x.size() - 2 * skip));
}

TEST(Bandpass, RemovesDcOffset) {
  SignalBuffer s(1, 2500, 250);
  std::fill(s.data().begin(), s.data().end(), 5.0);
  const auto y = tridep::dsp::bandpass_filter(s, 0.5, 50.0);
  double peak = 0.0;
  for (double v : y.channel(0)) peak = std::max(peak, std::abs(v));
  EXPECT_LT(peak, 0.01 * 5.0);
}

TEST(Bandpass, PassesTenHertz) {
  const auto s = sine(10.0, 250.0, 10.0);
  const auto y = tridep::dsp::bandpass_filter(s, 0.5, 50.0);
  const double in = oracle::tone_amplitude(s.channel(0), 250.0, 10.0, 250);
  const double out = oracle::tone_amplitude(y.channel(0), 250.0, 10.0, 250);
  EXPECT_NEAR(out / in, 1.0, 0.05);
  EXPECT_NEAR(rms(y.channel(0), 250) / rms(s.channel(0), 250), 1.0, 0.05);
}

TEST(Bandpass, RejectsHundredHertz) {
  // 100 Hz sits below Nyquist at 250 Hz and far above the 50 Hz corner.
  const auto s = sine(100.0, 250.0, 10.0);
  const auto y = tridep::dsp::bandpass_filter(s, 0.5, 50.0);
  EXPECT_LT(rms(y.channel(0), 250), 0.1 * rms(s.channel(0), 250));
}

TEST(Bandpass, RejectsBadBand) {
  const auto s = sine(10.0, 250.0, 1.0);
  EXPECT_THROW(tridep::dsp::bandpass_filter(s, 50.0, 10.0), std::invalid_argument);
  EXPECT_THROW(tridep::dsp::bandpass_filter(s, 0.5, 200.0), std::invalid_argument);
}

TEST(Notch, AttenuatesLineFrequency) {
  const auto s = sine(50.0, 250.0, 10.0);
  const auto y = tridep::dsp::notch_filter(s, 50.0);
  EXPECT_LE(rms(y.channel(0), 500), 0.1 * rms(s.channel(0), 500));
  const double gain = oracle::tone_amplitude(y.channel(0), 250.0, 50.0, 500) /
                      oracle::tone_amplitude(s.channel(0), 250.0, 50.0, 500);
  EXPECT_LE(20.0 * std::log10(gain), -20.0);
}

TEST(Notch, PassesTenHertz) {
  const auto s = sine(10.0, 250.0, 10.0);
  const auto y = tridep::dsp::notch_filter(s, 50.0);
  EXPECT_NEAR(rms(y.channel(0), 250) / rms(s.channel(0), 250), 1.0, 0.05);
}

TEST(Notch, ZeroInZeroOut) {
  SignalBuffer s(2, 1000, 250);
  const auto y = tridep::dsp::notch_filter(s, 50.0);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Filtfilt, IsZeroPhase) {
  // A zero-phase filter keeps a passband tone aligned with its input.
  const auto s = sine(5.0, 250.0, 8.0);
  const auto sos = tridep::dsp::butterworth_lowpass(4, 30.0, 250.0);
  const auto y = tridep::dsp::filtfilt(sos, s.channel(0));
  double dot = 0, xx = 0, yy = 0;
  for (std::size_t i = 250; i < y.size() - 250; ++i) {
    dot += y[i] * s.channel(0)[i];
    xx += s.channel(0)[i] * s.channel(0)[i];
    yy += y[i] * y[i];
  }
  EXPECT_GT(dot / std::sqrt(xx * yy), 0.9999);
}

TEST(Butterworth, UnityDcGainForLowpass) {
  const auto sos = tridep::dsp::butterworth_lowpass(4, 30.0, 250.0);
  double g = 1.0;
  for (const auto& b : sos) g *= b.dc_gain();
  EXPECT_NEAR(g, 1.0, 1e-9);
}

TEST(Resample, LengthArithmetic) {
  SignalBuffer s(3, 250, 250);
  const auto y = tridep::dsp::resample(s, 200);
  EXPECT_EQ(y.samples(), 200u);
  EXPECT_EQ(y.sample_rate(), 200);
  EXPECT_EQ(y.channels(), 3u);
}

TEST(Resample, KeepsDominantFrequency) {
  const auto s = sine(10.0, 250.0, 4.0);
  const auto y = tridep::dsp::resample(s, 200);
  const auto spec = oracle::naive_dft(y.channel(0));
  std::size_t best = 1;
  for (std::size_t k = 1; k < spec.size() / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  const double freq = static_cast<double>(best) * 200.0 / static_cast<double>(y.samples());
  EXPECT_NEAR(freq, 10.0, 200.0 / static_cast<double>(y.samples()));
}

TEST(Resample, IdentityIsBitwise) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  SignalBuffer s(2, 500, 250);
  for (double& v : s.data()) v = n(rng);
  const auto y = tridep::dsp::resample(s, 250);
  EXPECT_EQ(y.data(), s.data());
}

TEST(Rereference, ConstantChannels) {
  SignalBuffer s({{1.0, 1.0, 1.0}, {3.0, 3.0, 3.0}}, 250);
  const auto y = tridep::dsp::average_rereference(s);
  for (double v : y.channel(0)) EXPECT_DOUBLE_EQ(v, -1.0);
  for (double v : y.channel(1)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Rereference, ZeroMeanInputUnchanged) {
  SignalBuffer s({{1.0, -2.0, 0.5}, {-1.0, 2.0, -0.5}}, 250);
  EXPECT_EQ(tridep::dsp::average_rereference(s).data(), s.data());
}

TEST(Rereference, RandomMatrixHasZeroChannelMean) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 20.0);
  SignalBuffer s(4, 1000, 250);
  for (double& v : s.data()) v = n(rng);
  const auto y = tridep::dsp::average_rereference(s);
  for (std::size_t t = 0; t < 1000; ++t) {
    double m = 0.0;
    for (std::size_t c = 0; c < 4; ++c) m += y.channel(c)[t];
    EXPECT_LT(std::abs(m / 4.0), 1e-9);
  }
}

TEST(Channels, MissingChannelIsDataError) {
  SignalBuffer s(2, 10, 250, {"Fp1", "Fp2"});
  EXPECT_THROW(tridep::dsp::select_channels(s, {"Fp1", "Cz"}), tridep::DataError);
  const auto y = tridep::dsp::select_channels(s, {"Fp2"});
  EXPECT_EQ(y.channel_names(), std::vector<std::string>{"Fp2"});
}

TEST(Windows, EegBranchOneCount) {
  const tridep::dsp::WindowSpec w{10.0, 10.0, false};
  EXPECT_EQ(tridep::dsp::segment_count(300 * 250, 250, w), 30u);
  SignalBuffer s(1, 300 * 250, 250);
  const auto seg = tridep::dsp::window_segments(s, w);
  EXPECT_EQ(seg.segments, 30u);
  EXPECT_EQ(seg.samples, 2500u);
}

TEST(Windows, SpeechCount) {
  const tridep::dsp::WindowSpec w{5.0, 2.5, false};
  EXPECT_EQ(tridep::dsp::segment_count(20 * 16000, 16000, w), 7u);
}

TEST(Windows, ShortSignalPadded) {
  const tridep::dsp::WindowSpec w{5.0, 2.5, true};
  SignalBuffer s(1, 3 * 16000, 16000);
  std::fill(s.data().begin(), s.data().end(), 1.0);
  const auto seg = tridep::dsp::window_segments(s, w);
  ASSERT_EQ(seg.segments, 1u);
  ASSERT_EQ(seg.samples, 80000u);
  EXPECT_EQ(seg.row(0, 0)[3 * 16000 - 1], 1.0);
  EXPECT_EQ(seg.row(0, 0)[3 * 16000], 0.0);
  EXPECT_EQ(tridep::dsp::segment_count(3 * 16000, 16000, {5.0, 2.5, false}), 0u);
}

TEST(Windows, CopiesSamplesInOrder) {
  SignalBuffer s(2, 100, 10);
  for (std::size_t i = 0; i < 200; ++i) s.data()[i] = static_cast<double>(i);
  const auto seg = tridep::dsp::window_segments(s, {2.0, 1.0, false});
  ASSERT_EQ(seg.segments, 9u);
  EXPECT_EQ(seg.row(3, 1)[0], 100.0 + 30.0);
  EXPECT_EQ(seg.row(8, 0)[19], 99.0);
}

TEST(Trim, RemovesSurroundingSilence) {
  const double fs = 16000;
  SignalBuffer s(1, static_cast<std::size_t>(4 * fs), 16000);
  for (std::size_t i = static_cast<std::size_t>(fs); i < static_cast<std::size_t>(3 * fs); ++i) {
    s.channel(0)[i] = std::sin(2 * kPi * 440.0 * i / fs);
  }
  const auto y = tridep::dsp::trim_silence(s, -40.0);
  ASSERT_TRUE(y.has_value());
  EXPECT_GE(y->duration_seconds(), 2.0);
  EXPECT_LE(y->duration_seconds(), 2.1);
}

TEST(Trim, LoudSignalUnchanged) {
  const auto s = sine(440.0, 16000.0, 1.0);
  const auto y = tridep::dsp::trim_silence(s, -40.0);
  ASSERT_TRUE(y.has_value());
  EXPECT_EQ(y->data(), s.data());
}

TEST(Trim, AllZerosIsEmpty) {
  SignalBuffer s(1, 16000, 16000);
  EXPECT_FALSE(tridep::dsp::trim_silence(s).has_value());
}

TEST(Median, RemovesImpulse) {
  SignalBuffer s({{0, 0, 10, 0, 0}}, 100);
  const auto y = tridep::dsp::median_denoise(s, 3);
  for (double v : y.channel(0)) EXPECT_EQ(v, 0.0);
}

TEST(Median, RampUnchanged) {
  std::vector<double> ramp(20);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  SignalBuffer s({ramp}, 100);
  const auto y = tridep::dsp::median_denoise(s, 5);
  for (std::size_t i = 2; i + 2 < ramp.size(); ++i) EXPECT_EQ(y.channel(0)[i], ramp[i]);
}

TEST(Median, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(257);
  for (double& v : x) v = u(rng);
  SignalBuffer s({x}, 100);
  const auto y = tridep::dsp::median_denoise(s, 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i == 0 ? 0 : i - 1], b = x[i], c = x[i + 1 < x.size() ? i + 1 : i];
    const double med = std::max(std::min(a, b), std::min(std::max(a, b), c));
    EXPECT_EQ(y.channel(0)[i], med) << i;
  }
}

TEST(Median, RejectsEvenKernel) {
  SignalBuffer s(1, 10, 100);
  EXPECT_THROW(tridep::dsp::median_denoise(s, 4), std::invalid_argument);
}

TEST(Normalize, DividesByPeak) {
  SignalBuffer s({{0.5, -0.25}}, 100);
  const auto y = tridep::dsp::amplitude_normalize(s);
  EXPECT_EQ(y.channel(0)[0], 1.0);
  EXPECT_EQ(y.channel(0)[1], -0.5);
}

TEST(Normalize, ZerosStayZero) {
  SignalBuffer s(1, 8, 100);
  EXPECT_EQ(tridep::dsp::amplitude_normalize(s).data(), s.data());
}

TEST(Normalize, PeakIsOne) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    SignalBuffer s(2, 64, 100);
    for (double& v : s.data()) v = n(rng);
    const auto y = tridep::dsp::amplitude_normalize(s);
    double peak = 0.0;
    for (double v : y.data()) peak = std::max(peak, std::abs(v));
    EXPECT_DOUBLE_EQ(peak, 1.0);
  }
}

TEST(SignalBufferTest, RejectsRaggedChannels) {
  EXPECT_THROW(SignalBuffer({{1.0, 2.0}, {1.0}}, 100), std::invalid_argument);
  EXPECT_THROW(SignalBuffer(1, 10, 0), std::invalid_argument);
}

}  // namespace
