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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tridep::dsp {

std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a);

// Hann window. periodic=true gives the DFT-even variant.
std::vector<double> hann_window(std::size_t n, bool periodic);

// |X[k]|^2 for k = 0..nfft/2 of the zero-padded frame (no scaling).
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t nfft);

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> density;  // one-sided, units^2 / Hz
};

// Welch PSD with Hann segments of `nperseg`, 50% overlap, per-segment mean
// removal, FFT length next_pow2(nperseg). Signals shorter than nperseg are
// analyzed as a single zero-padded segment.
Psd welch_psd(std::span<const double> x, double fs_hz, std::size_t nperseg);

}  // namespace tridep::dsp
