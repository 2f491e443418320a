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

#include "oracles/reference_dft.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

std::vector<std::complex<double>> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) /
                         static_cast<double>(n);
      s += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  return out;
}

std::vector<double> naive_power(std::span<const double> x, std::size_t nfft) {
  std::vector<double> out(nfft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < x.size() && t < nfft; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % nfft) /
                         static_cast<double>(nfft);
      re += x[t] * std::cos(ang);
      im += x[t] * std::sin(ang);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

double tone_amplitude(std::span<const double> x, double fs_hz, double freq_hz, std::size_t skip) {
  double re = 0.0, im = 0.0;
  const std::size_t n = x.size() - 2 * skip;
  for (std::size_t t = 0; t < n; ++t) {
    const double ang = 2.0 * std::numbers::pi * freq_hz * static_cast<double>(t + skip) / fs_hz;
    re += x[t + skip] * std::cos(ang);
    im += x[t + skip] * std::sin(ang);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(n);
}

}  // namespace oracle
