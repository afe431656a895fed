// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MASKGRU_WAV_HPP_
#define MASKGRU_WAV_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "maskgru/dsp.hpp"

namespace maskgru {

// RIFF/WAVE PCM16, mono, 16 kHz only. Samples are scaled by 1/32768.
Waveform LoadWav(const std::filesystem::path& path);

// Exact inverse of LoadWav for values on the int16 grid; other values are
// rounded to nearest and saturated.
void WriteWav(const std::filesystem::path& path, const Waveform& w);

std::vector<std::uint8_t> EncodeWav(const Waveform& w);
Waveform DecodeWav(const std::vector<std::uint8_t>& bytes);

// Sample count from the header without decoding the payload.
Index ProbeWavLength(const std::filesystem::path& path);

// Rounds each sample onto the int16 grid (with saturation).
Waveform QuantizePcm16(const Waveform& w);

}  // namespace maskgru

#endif  // MASKGRU_WAV_HPP_
