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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tridep::dsp {

// Multichannel time series, channels x samples, row-major. Every channel has
// the same number of samples; the constructor enforces this.
class SignalBuffer {
 public:
  SignalBuffer() = default;
  SignalBuffer(std::size_t channels, std::size_t samples, int sample_rate,
               std::vector<std::string> channel_names = {});
  SignalBuffer(const std::vector<std::vector<double>>& channels, int sample_rate,
               std::vector<std::string> channel_names = {});

  std::size_t channels() const { return channels_; }
  std::size_t samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  double duration_seconds() const {
    return static_cast<double>(samples_) / sample_rate_;
  }
  bool empty() const { return samples_ == 0; }

  const std::vector<std::string>& channel_names() const { return names_; }
  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Index of a named channel, or nullopt.
  std::optional<std::size_t> find_channel(const std::string& name) const;

 private:
  std::size_t channels_ = 0;
  std::size_t samples_ = 0;
  int sample_rate_ = 1;
  std::vector<std::string> names_;
  std::vector<double> data_;
};

struct WindowSpec {
  double window_seconds = 0.0;
  double hop_seconds = 0.0;
  // When the signal is shorter than one window, emit a single zero-padded
  // segment instead of failing.
  bool allow_short = false;
};

// Windowed signal: segments x channels x samples_per_segment, row-major.
struct SegmentTensor {
  std::size_t segments = 0;
  std::size_t channels = 0;
  std::size_t samples = 0;
  int sample_rate = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t s, std::size_t c) const {
    return {data.data() + (s * channels + c) * samples, samples};
  }
  std::span<double> row(std::size_t s, std::size_t c) {
    return {data.data() + (s * channels + c) * samples, samples};
  }
};

// Second-order section, normalized so a0 == 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

using SosFilter = std::vector<Biquad>;

// Butterworth designs via the bilinear transform with frequency prewarping.
// `order` must be even.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz);
SosFilter butterworth_highpass(int order, double cutoff_hz, double fs_hz);
// Bandpass = highpass(low) cascaded with lowpass(high), each of `order`.
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz);
SosFilter notch_biquad(double freq_hz, double fs_hz, double q);

// Single forward pass from rest.
std::vector<double> sos_filter(const SosFilter& sos, std::span<const double> x);

// Forward-backward filtering with odd-reflection padding and steady-state
// initial conditions. Zero phase; squared magnitude response.
std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x);

// Number of samples after which the impulse response has decayed below
// 1e-6 of its peak (capped). Used to size filtfilt padding.
std::size_t settle_length(const SosFilter& sos, std::size_t cap = 1 << 16);

// Zero-phase 4th-order Butterworth bandpass applied per channel.
// Requires 0 < low_hz < high_hz < fs/2.
SignalBuffer bandpass_filter(const SignalBuffer& sig, double low_hz, double high_hz);

// Zero-phase biquad notch (default Q = 30) applied per channel.
SignalBuffer notch_filter(const SignalBuffer& sig, double freq_hz, double q = 30.0);

// Rational-ratio band-limited resampling with a Kaiser-windowed sinc
// (beta = 8). Output length is round(n * target / source). Identity when
// the rates match.
SignalBuffer resample(const SignalBuffer& sig, int target_rate_hz);

// Subtracts the instantaneous cross-channel mean. Requires >= 2 channels.
SignalBuffer average_rereference(const SignalBuffer& sig);

// Keeps the named channels in the requested order. Throws DataError naming
// the first missing channel.
SignalBuffer select_channels(const SignalBuffer& sig, const std::vector<std::string>& names);

// Averages all channels into one.
SignalBuffer to_mono(const SignalBuffer& sig);

// Cuts fixed windows. For duration L >= w the segment count is
// floor((L - w) / h) + 1 and trailing samples are dropped.
SegmentTensor window_segments(const SignalBuffer& sig, const WindowSpec& spec);

// Number of windows window_segments would produce for a signal of
// `samples` length (0 when too short and allow_short is false).
std::size_t segment_count(std::size_t samples, int sample_rate, const WindowSpec& spec);

// Removes leading and trailing frames whose RMS lies below threshold_db
// relative to the absolute peak. Returns nullopt when every frame is silent.
std::optional<SignalBuffer> trim_silence(const SignalBuffer& sig, double threshold_db = -40.0,
                                         double frame_seconds = 0.025);

// Sliding median with edge replication. Kernel must be odd and >= 3.
SignalBuffer median_denoise(const SignalBuffer& sig, int kernel = 5);

// Scales so that max |sample| == 1. All-zero input is returned unchanged.
SignalBuffer amplitude_normalize(const SignalBuffer& sig);

}  // namespace tridep::dsp
