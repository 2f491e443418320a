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

// Slow, independently written references used only by tests.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace oracle {

// O(n^2) DFT straight from the definition.
std::vector<std::complex<double>> naive_dft(std::span<const double> x);

// |X[k]|^2, k = 0..nfft/2, of x zero-padded to nfft.
std::vector<double> naive_power(std::span<const double> x, std::size_t nfft);

// Amplitude of the sinusoidal component at `freq_hz`, by correlating the
// middle portion of `x` against a complex exponential. The frequency needs
// to complete an integer number of cycles over that portion.
double tone_amplitude(std::span<const double> x, double fs_hz, double freq_hz,
                      std::size_t skip = 0);

}  // namespace oracle
