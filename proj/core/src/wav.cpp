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

#include "tridep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tridep/error.hpp"

namespace tridep::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

SignalBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) {
    return DataError("malformed WAV (" + why + "): " + path.string());
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("missing RIFF/WAVE header");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0) throw fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      format = get_u16(bytes.data() + body);
      channels = get_u16(bytes.data() + body + 2);
      rate = get_u32(bytes.data() + body + 4);
      bits = get_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = get_u16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");

  std::size_t width = 0;
  if (format == kFormatPcm && bits == 16) {
    width = 2;
  } else if (format == kFormatFloat && bits == 32) {
    width = 4;
  } else {
    throw fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits));
  }
  const std::size_t frames = data_size / (width * channels);
  SignalBuffer out(channels, frames, static_cast<int>(rate));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (t * channels + c) * width;
      double v = 0.0;
      if (width == 2) {
        v = static_cast<std::int16_t>(get_u16(p)) / 32768.0;
      } else {
        const std::uint32_t raw = get_u32(p);
        float f = 0.0f;
        std::memcpy(&f, &raw, sizeof f);
        v = f;
      }
      out.channel(c)[t] = v;
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const SignalBuffer& sig, WavEncoding encoding) {
  const std::uint16_t channels = static_cast<std::uint16_t>(sig.channels());
  const std::uint16_t width = encoding == WavEncoding::kPcm16 ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(sig.samples() * channels * width);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(sig.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(sig.sample_rate()) * channels * width);
  put_u16(out, static_cast<std::uint16_t>(channels * width));
  put_u16(out, static_cast<std::uint16_t>(width * 8));
  put_tag(out, "data");
  put_u32(out, data_size);
  for (std::size_t t = 0; t < sig.samples(); ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = sig.channel(c)[t];
      if (encoding == WavEncoding::kPcm16) {
        const double clipped = std::clamp(v, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(q));
      } else {
        const auto f = static_cast<float>(v);
        std::uint32_t raw = 0;
        std::memcpy(&raw, &f, sizeof raw);
        put_u32(out, raw);
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write WAV file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("short write to WAV file: " + path.string());
}

}  // namespace tridep::dsp
