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

#include "tridep/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <numbers>
#include <stdexcept>

#include "tridep/error.hpp"

namespace tridep::dsp {

// ---------------------------------------------------------------------------
// SignalBuffer

SignalBuffer::SignalBuffer(std::size_t channels, std::size_t samples, int sample_rate,
                           std::vector<std::string> channel_names)
    : channels_(channels),
      samples_(samples),
      sample_rate_(sample_rate),
      names_(std::move(channel_names)),
      data_(channels * samples, 0.0) {
  if (channels == 0) throw std::invalid_argument("SignalBuffer: need at least one channel");
  if (sample_rate <= 0) throw std::invalid_argument("SignalBuffer: sample_rate must be positive");
  if (names_.empty()) {
    for (std::size_t c = 0; c < channels; ++c) names_.push_back("ch" + std::to_string(c));
  }
  if (names_.size() != channels) {
    throw std::invalid_argument("SignalBuffer: channel_names size differs from channel count");
  }
}

SignalBuffer::SignalBuffer(const std::vector<std::vector<double>>& channels, int sample_rate,
                           std::vector<std::string> channel_names)
    : SignalBuffer(channels.size(), channels.empty() ? 0 : channels.front().size(), sample_rate,
                   std::move(channel_names)) {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != samples_) {
      throw std::invalid_argument("SignalBuffer: channels have unequal sample counts");
    }
    std::copy(channels[c].begin(), channels[c].end(), data_.begin() + c * samples_);
  }
}

std::span<double> SignalBuffer::channel(std::size_t c) {
  return {data_.data() + c * samples_, samples_};
}

std::span<const double> SignalBuffer::channel(std::size_t c) const {
  return {data_.data() + c * samples_, samples_};
}

std::optional<std::size_t> SignalBuffer::find_channel(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

// ---------------------------------------------------------------------------
// Filter design

namespace {

double butterworth_q(int order, int k) {
  const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order);
  return 1.0 / (2.0 * std::cos(theta));
}

void check_design(int order, double cutoff_hz, double fs_hz) {
  if (order <= 0 || order % 2 != 0) throw std::invalid_argument("butterworth: order must be even");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs_hz / 2.0)) {
    throw std::invalid_argument("butterworth: cutoff must lie in (0, fs/2)");
  }
}

}  // namespace

SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz) {
  check_design(order, cutoff_hz, fs_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs_hz);
  SosFilter sos;
  for (int i = 0; i < order / 2; ++i) {
    const double q = butterworth_q(order, i);
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    s.b0 = k * k * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    sos.push_back(s);
  }
  return sos;
}

SosFilter butterworth_highpass(int order, double cutoff_hz, double fs_hz) {
  check_design(order, cutoff_hz, fs_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs_hz);
  SosFilter sos;
  for (int i = 0; i < order / 2; ++i) {
    const double q = butterworth_q(order, i);
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    s.b0 = norm;
    s.b1 = -2.0 * norm;
    s.b2 = norm;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    sos.push_back(s);
  }
  return sos;
}

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs_hz / 2.0)) {
    throw std::invalid_argument("bandpass: need 0 < low < high < fs/2");
  }
  SosFilter sos = butterworth_highpass(order, low_hz, fs_hz);
  const SosFilter lp = butterworth_lowpass(order, high_hz, fs_hz);
  sos.insert(sos.end(), lp.begin(), lp.end());
  return sos;
}

SosFilter notch_biquad(double freq_hz, double fs_hz, double q) {
  if (!(freq_hz > 0.0) || !(freq_hz < fs_hz / 2.0)) {
    throw std::invalid_argument("notch: frequency must lie in (0, fs/2)");
  }
  if (!(q > 0.0)) throw std::invalid_argument("notch: q must be positive");
  const double w0 = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  return {s};
}

// ---------------------------------------------------------------------------
// Filtering

namespace {

struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

// Transposed direct form II.
inline double step(const Biquad& s, SectionState& st, double x) {
  const double y = s.b0 * x + st.z1;
  st.z1 = s.b1 * x - s.a1 * y + st.z2;
  st.z2 = s.b2 * x - s.a2 * y;
  return y;
}

// Runs the cascade over `x` in place, starting from the steady state that a
// constant input equal to x[0] would have produced.
void run_cascade_steady(const SosFilter& sos, std::vector<double>& x) {
  if (x.empty()) return;
  std::vector<SectionState> states(sos.size());
  double level = x.front();
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const double g = sos[k].dc_gain();
    states[k].z1 = (g - sos[k].b0) * level;
    states[k].z2 = (sos[k].b2 - sos[k].a2 * g) * level;
    level *= g;
  }
  for (double& v : x) {
    double y = v;
    for (std::size_t k = 0; k < sos.size(); ++k) y = step(sos[k], states[k], y);
    v = y;
  }
}

}  // namespace

std::vector<double> sos_filter(const SosFilter& sos, std::span<const double> x) {
  std::vector<SectionState> states(sos.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double y = x[i];
    for (std::size_t k = 0; k < sos.size(); ++k) y = step(sos[k], states[k], y);
    out[i] = y;
  }
  return out;
}

std::size_t settle_length(const SosFilter& sos, std::size_t cap) {
  std::vector<double> impulse(cap, 0.0);
  if (cap == 0) return 0;
  impulse[0] = 1.0;
  const auto h = sos_filter(sos, impulse);
  double peak = 0.0;
  for (double v : h) peak = std::max(peak, std::abs(v));
  const double thr = peak * 1e-6;
  std::size_t last = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::abs(h[i]) > thr) last = i;
  }
  return last + 1;
}

namespace {

std::vector<double> filtfilt_padded(const SosFilter& sos, std::span<const double> x,
                                    std::size_t settle) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t minimum_pad = 3 * (2 * sos.size() + 1);
  const std::size_t pad = n > 1 ? std::min(n - 1, std::max(minimum_pad, settle)) : 0;

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + pad);
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  run_cascade_steady(sos, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade_steady(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SignalBuffer filtfilt_channels(const SignalBuffer& sig, const SosFilter& sos) {
  SignalBuffer out(sig.channels(), sig.samples(), sig.sample_rate(), sig.channel_names());
  const std::size_t settle = settle_length(sos, std::max<std::size_t>(sig.samples(), 1));
  for (std::size_t c = 0; c < sig.channels(); ++c) {
    const auto y = filtfilt_padded(sos, sig.channel(c), settle);
    std::copy(y.begin(), y.end(), out.channel(c).begin());
  }
  return out;
}

}  // namespace

std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x) {
  return filtfilt_padded(sos, x, settle_length(sos, std::max<std::size_t>(x.size(), 1)));
}

SignalBuffer bandpass_filter(const SignalBuffer& sig, double low_hz, double high_hz) {
  const double fs = sig.sample_rate();
  if (!(low_hz > 0.0) || !(low_hz < high_hz)) {
    throw std::invalid_argument("bandpass_filter: need 0 < low_hz < high_hz");
  }
  if (!(high_hz < fs / 2.0)) {
    throw std::invalid_argument("bandpass_filter: high_hz must be below Nyquist");
  }
  return filtfilt_channels(sig, butterworth_bandpass(4, low_hz, high_hz, fs));
}

SignalBuffer notch_filter(const SignalBuffer& sig, double freq_hz, double q) {
  const double fs = sig.sample_rate();
  if (!(freq_hz > 0.0) || !(freq_hz < fs / 2.0)) {
    throw std::invalid_argument("notch_filter: frequency must lie in (0, Nyquist)");
  }
  return filtfilt_channels(sig, notch_biquad(freq_hz, fs, q));
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

constexpr double kKaiserBeta = 8.0;
constexpr double kZeroCrossings = 24.0;
constexpr double kCutoffMargin = 0.95;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

SignalBuffer resample(const SignalBuffer& sig, int target_rate_hz) {
  if (target_rate_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
  const int source = sig.sample_rate();
  if (target_rate_hz == source) return sig;

  const std::int64_t g = std::gcd(source, target_rate_hz);
  const std::int64_t up = target_rate_hz / g;
  const std::int64_t down = source / g;
  const auto n_in = static_cast<std::int64_t>(sig.samples());
  const std::int64_t n_out = (2 * n_in * up + down) / (2 * down);

  const double fc = std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) *
                    kCutoffMargin;
  const double half_width = kZeroCrossings / fc;
  const auto reach = static_cast<std::int64_t>(std::ceil(half_width));
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  auto kernel = [&](double tau) {
    const double r = tau / half_width;
    if (std::abs(r) > 1.0) return 0.0;
    const double win = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    return fc * sinc(fc * tau) * win;
  };

  // Output j sits at input position j*down/up = base + phase/up. Each phase
  // has a fixed tap set; tabulate when the phase count is modest.
  const std::size_t taps = static_cast<std::size_t>(2 * reach + 2);
  const bool tabulate = up <= 4096;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up) * taps);
    for (std::int64_t p = 0; p < up; ++p) {
      for (std::size_t i = 0; i < taps; ++i) {
        const double offset = static_cast<double>(static_cast<std::int64_t>(i) - reach);
        table[static_cast<std::size_t>(p) * taps + i] =
            kernel(static_cast<double>(p) / static_cast<double>(up) - offset);
      }
    }
  }

  SignalBuffer out(sig.channels(), static_cast<std::size_t>(n_out), target_rate_hz,
                   sig.channel_names());
  std::vector<double> weights(taps);
  for (std::int64_t j = 0; j < n_out; ++j) {
    const std::int64_t pos = j * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    if (tabulate) {
      std::copy_n(table.begin() + static_cast<std::ptrdiff_t>(phase * static_cast<std::int64_t>(taps)),
                  taps, weights.begin());
    } else {
      for (std::size_t i = 0; i < taps; ++i) {
        const double offset = static_cast<double>(static_cast<std::int64_t>(i) - reach);
        weights[i] = kernel(static_cast<double>(phase) / static_cast<double>(up) - offset);
      }
    }
    const std::int64_t first = base - reach;
    for (std::size_t c = 0; c < sig.channels(); ++c) {
      const auto in = sig.channel(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < taps; ++i) {
        const std::int64_t n = first + static_cast<std::int64_t>(i);
        if (n < 0 || n >= n_in) continue;
        acc += in[static_cast<std::size_t>(n)] * weights[i];
      }
      out.channel(c)[static_cast<std::size_t>(j)] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Channel operations

SignalBuffer average_rereference(const SignalBuffer& sig) {
  if (sig.channels() < 2) {
    throw std::invalid_argument("average_rereference: need at least two channels");
  }
  SignalBuffer out = sig;
  const double inv = 1.0 / static_cast<double>(sig.channels());
  for (std::size_t t = 0; t < sig.samples(); ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < sig.channels(); ++c) mean += sig.channel(c)[t];
    mean *= inv;
    for (std::size_t c = 0; c < sig.channels(); ++c) out.channel(c)[t] -= mean;
  }
  return out;
}

SignalBuffer select_channels(const SignalBuffer& sig, const std::vector<std::string>& names) {
  if (names.empty()) throw std::invalid_argument("select_channels: empty channel list");
  SignalBuffer out(names.size(), sig.samples(), sig.sample_rate(), names);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto idx = sig.find_channel(names[i]);
    if (!idx) throw DataError("missing EEG channel: " + names[i]);
    const auto src = sig.channel(*idx);
    std::copy(src.begin(), src.end(), out.channel(i).begin());
  }
  return out;
}

SignalBuffer to_mono(const SignalBuffer& sig) {
  if (sig.channels() == 1) return sig;
  SignalBuffer out(1, sig.samples(), sig.sample_rate(), {"mono"});
  const double inv = 1.0 / static_cast<double>(sig.channels());
  auto dst = out.channel(0);
  for (std::size_t c = 0; c < sig.channels(); ++c) {
    const auto src = sig.channel(c);
    for (std::size_t t = 0; t < sig.samples(); ++t) dst[t] += src[t];
  }
  for (double& v : dst) v *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Windowing

namespace {

struct WindowSamples {
  std::size_t window;
  std::size_t hop;
};

WindowSamples window_samples(int sample_rate, const WindowSpec& spec) {
  if (!(spec.window_seconds > 0.0) || !(spec.hop_seconds > 0.0)) {
    throw std::invalid_argument("WindowSpec: window and hop must be positive");
  }
  if (spec.hop_seconds > spec.window_seconds) {
    throw std::invalid_argument("WindowSpec: hop must not exceed window");
  }
  const auto w = static_cast<std::size_t>(std::llround(spec.window_seconds * sample_rate));
  const auto h = static_cast<std::size_t>(std::llround(spec.hop_seconds * sample_rate));
  if (w == 0 || h == 0) throw std::invalid_argument("WindowSpec: window shorter than one sample");
  return {w, h};
}

}  // namespace

std::size_t segment_count(std::size_t samples, int sample_rate, const WindowSpec& spec) {
  const auto ws = window_samples(sample_rate, spec);
  if (samples == 0) return 0;
  if (samples < ws.window) return spec.allow_short ? 1 : 0;
  return (samples - ws.window) / ws.hop + 1;
}

SegmentTensor window_segments(const SignalBuffer& sig, const WindowSpec& spec) {
  if (sig.empty()) throw DataError("window_segments: empty signal");
  const auto ws = window_samples(sig.sample_rate(), spec);
  if (sig.samples() < ws.window && !spec.allow_short) {
    throw DataError("window_segments: signal shorter than one window");
  }
  SegmentTensor out;
  out.segments = segment_count(sig.samples(), sig.sample_rate(), spec);
  out.channels = sig.channels();
  out.samples = ws.window;
  out.sample_rate = sig.sample_rate();
  out.data.assign(out.segments * out.channels * out.samples, 0.0);
  for (std::size_t s = 0; s < out.segments; ++s) {
    const std::size_t start = s * ws.hop;
    const std::size_t len = std::min(ws.window, sig.samples() - start);
    for (std::size_t c = 0; c < sig.channels(); ++c) {
      const auto src = sig.channel(c).subspan(start, len);
      std::copy(src.begin(), src.end(), out.row(s, c).begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Speech conditioning

std::optional<SignalBuffer> trim_silence(const SignalBuffer& sig, double threshold_db,
                                         double frame_seconds) {
  if (sig.channels() != 1) throw std::invalid_argument("trim_silence: mono signal required");
  const auto x = sig.channel(0);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return std::nullopt;

  const auto frame = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(frame_seconds * sig.sample_rate())));
  const double thr = peak * std::pow(10.0, threshold_db / 20.0);
  const std::size_t n_frames = (x.size() + frame - 1) / frame;
  auto loud = [&](std::size_t f) {
    const std::size_t a = f * frame;
    const std::size_t b = std::min(x.size(), a + frame);
    double e = 0.0;
    for (std::size_t i = a; i < b; ++i) e += x[i] * x[i];
    return std::sqrt(e / static_cast<double>(b - a)) >= thr;
  };
  std::size_t first = 0;
  while (first < n_frames && !loud(first)) ++first;
  if (first == n_frames) return std::nullopt;
  std::size_t last = n_frames - 1;
  while (last > first && !loud(last)) --last;

  const std::size_t a = first * frame;
  const std::size_t b = std::min(x.size(), (last + 1) * frame);
  SignalBuffer out(1, b - a, sig.sample_rate(), sig.channel_names());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(a), x.begin() + static_cast<std::ptrdiff_t>(b),
            out.channel(0).begin());
  return out;
}

SignalBuffer median_denoise(const SignalBuffer& sig, int kernel) {
  if (kernel < 3 || kernel % 2 == 0) {
    throw std::invalid_argument("median_denoise: kernel must be odd and >= 3");
  }
  SignalBuffer out(sig.channels(), sig.samples(), sig.sample_rate(), sig.channel_names());
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<double> window(static_cast<std::size_t>(kernel));
  for (std::size_t c = 0; c < sig.channels(); ++c) {
    const auto x = sig.channel(c);
    auto y = out.channel(c);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, 0, n - 1);
        window[static_cast<std::size_t>(k + half)] = x[static_cast<std::size_t>(j)];
      }
      std::nth_element(window.begin(), window.begin() + half, window.end());
      y[static_cast<std::size_t>(i)] = window[static_cast<std::size_t>(half)];
    }
  }
  return out;
}

SignalBuffer amplitude_normalize(const SignalBuffer& sig) {
  if (sig.empty()) throw std::invalid_argument("amplitude_normalize: empty signal");
  double peak = 0.0;
  for (double v : sig.data()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return sig;
  SignalBuffer out = sig;
  for (double& v : out.data()) v /= peak;
  return out;
}

}  // namespace tridep::dsp
