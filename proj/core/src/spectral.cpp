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

#include "tridep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tridep::dsp {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft_inplace: size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddle table for this size, computed directly (not by recurrence) so
  // rounding error does not grow with n.
  thread_local std::vector<std::complex<double>> table;
  if (table.size() != n / 2) {
    table.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      table[k] = {std::cos(ang), std::sin(ang)};
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * table[k * stride];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

std::vector<double> hann_window(std::size_t n, bool periodic) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
  }
  return w;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t nfft) {
  if (frame.size() > nfft) {
    throw std::invalid_argument("power_spectrum: frame longer than nfft");
  }
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_inplace(buf);
  std::vector<double> out(nfft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
  return out;
}

Psd welch_psd(std::span<const double> x, double fs_hz, std::size_t nperseg) {
  if (nperseg == 0 || fs_hz <= 0) throw std::invalid_argument("welch_psd: bad parameters");
  const std::size_t nfft = next_pow2(nperseg);
  const std::size_t nbins = nfft / 2 + 1;
  Psd out;
  out.freqs_hz.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    out.freqs_hz[k] = fs_hz * static_cast<double>(k) / static_cast<double>(nfft);
  }
  out.density.assign(nbins, 0.0);
  if (x.empty()) return out;

  const std::size_t seglen = std::min(nperseg, x.size());
  const auto win = hann_window(seglen, /*periodic=*/true);
  double win_power = 0.0;
  for (double v : win) win_power += v * v;
  if (win_power <= 0.0) win_power = 1.0;
  const std::size_t hop = nperseg / 2 > 0 ? nperseg / 2 : 1;
  std::size_t count = 0;
  std::vector<double> frame(seglen);
  auto accumulate = [&](std::span<const double> seg) {
    double mean = 0.0;
    for (double v : seg) mean += v;
    mean /= static_cast<double>(seg.size());
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) frame[i] = (seg[i] - mean) * win[i];
    const auto p = power_spectrum(frame, nfft);
    for (std::size_t k = 0; k < nbins; ++k) out.density[k] += p[k];
    ++count;
  };
  if (x.size() < nperseg) {
    accumulate(x);
  } else {
    for (std::size_t start = 0; start + nperseg <= x.size(); start += hop) {
      accumulate(x.subspan(start, nperseg));
    }
  }
  const double scale = 1.0 / (fs_hz * win_power * static_cast<double>(count));
  for (std::size_t k = 0; k < nbins; ++k) {
    double v = out.density[k] * scale;
    if (k != 0 && k != nbins - 1) v *= 2.0;
    out.density[k] = v;
  }
  return out;
}

}  // namespace tridep::dsp
