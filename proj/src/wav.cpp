// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "maskgru/error.hpp"

namespace maskgru {
namespace {

std::uint32_t ReadU32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t ReadU16(const std::uint8_t* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}
void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v & 0xff));
  out.push_back(std::uint8_t(v >> 8));
}

std::int16_t ToPcm16(double x) {
  const double v = std::nearbyint(x * 32768.0);
  return std::int16_t(std::clamp(v, -32768.0, 32767.0));
}

}  // namespace

Waveform DecodeWav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw Error(Errc::kCorruptFile, "file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(Errc::kUnsupportedFormat, "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size())
        throw Error(Errc::kCorruptFile, "truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      const std::uint16_t format = ReadU16(f);
      const std::uint16_t channels = ReadU16(f + 2);
      const std::uint32_t rate = ReadU32(f + 4);
      const std::uint16_t bits = ReadU16(f + 14);
      if (format != 1) throw Error(Errc::kUnsupportedFormat, "encoding is not PCM");
      if (channels != 1)
        throw Error(Errc::kUnsupportedFormat, std::to_string(channels) + " channels");
      if (rate != kSampleRate)
        throw Error(Errc::kUnsupportedFormat, "sample rate " + std::to_string(rate));
      if (bits != 16)
        throw Error(Errc::kUnsupportedFormat, std::to_string(bits) + "-bit samples");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(Errc::kCorruptFile, "data chunk before fmt chunk");
      if (body + size > bytes.size() || size % 2 != 0)
        throw Error(Errc::kCorruptFile, "truncated data chunk");
      const Index n = size / 2;
      Waveform w = Waveform::Zeros(n);
      for (Index i = 0; i < n; ++i) {
        const auto v = std::int16_t(ReadU16(bytes.data() + body + 2 * i));
        w.samples[i] = double(v) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw Error(Errc::kCorruptFile, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

std::vector<std::uint8_t> EncodeWav(const Waveform& w) {
  RequireSampleRate(w);
  const std::uint32_t data_bytes = std::uint32_t(w.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, kSampleRate);
  PutU32(out, kSampleRate * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, data_bytes);
  for (Index i = 0; i < w.size(); ++i) PutU16(out, std::uint16_t(ToPcm16(w.samples[i])));
  return out;
}

Waveform LoadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kCorruptFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

Index ProbeWavLength(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kCorruptFile, "cannot open " + path.string());
  std::uint8_t head[12];
  if (!in.read(reinterpret_cast<char*>(head), 12))
    throw Error(Errc::kCorruptFile, path.string() + ": short header");
  if (std::memcmp(head, "RIFF", 4) != 0 || std::memcmp(head + 8, "WAVE", 4) != 0)
    throw Error(Errc::kUnsupportedFormat, path.string() + ": not a RIFF/WAVE file");
  std::uint8_t chunk[8];
  while (in.read(reinterpret_cast<char*>(chunk), 8)) {
    const std::uint32_t size = ReadU32(chunk + 4);
    if (std::memcmp(chunk, "data", 4) == 0) return Index(size / 2);
    in.seekg(std::streamoff(size + (size & 1)), std::ios::cur);
  }
  throw Error(Errc::kCorruptFile, path.string() + ": missing data chunk");
}

void WriteWav(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = EncodeWav(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kInvalidInput, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Waveform QuantizePcm16(const Waveform& w) {
  Waveform q = w;
  for (Index i = 0; i < q.size(); ++i) q.samples[i] = ToPcm16(w.samples[i]) / 32768.0;
  return q;
}

}  // namespace maskgru
