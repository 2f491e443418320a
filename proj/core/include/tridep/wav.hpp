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

#include <filesystem>

#include "tridep/dsp.hpp"

namespace tridep::dsp {

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAVE file with 16-bit PCM or 32-bit IEEE float samples.
// Channels are returned as stored; callers average to mono when needed.
// Throws DataError on malformed or unsupported files.
SignalBuffer read_wav(const std::filesystem::path& path);

// Samples are clipped to [-1, 1] for PCM16.
void write_wav(const std::filesystem::path& path, const SignalBuffer& sig,
               WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace tridep::dsp
