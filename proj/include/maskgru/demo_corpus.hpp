// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Deterministic speech-like and noise corpus for offline training and
// testing. Speech is a source-filter synthesis (glottal pulses through a
// time-varying formant cascade, with fricative and plosive consonants,
// phrase-level pitch declination and pauses) over a population of
// synthetic speakers. Noise covers stationary colored noise, hum, fan,
// traffic, clatter, rain and babble.

#ifndef MASKGRU_DEMO_CORPUS_HPP_
#define MASKGRU_DEMO_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskgru/dsp.hpp"
#include "maskgru/random.hpp"

namespace maskgru {

struct SpeakerProfile {
  double f0_hz = 120.0;
  double formant_scale = 1.0;
  double breathiness = 0.05;
  double syllable_rate = 4.5;  // syllables per second
};

SpeakerProfile RandomSpeaker(Rng& rng);

// Peak-safe utterance of `seconds` at 16 kHz; RMS around -23 dBFS.
Waveform SynthSpeech(const SpeakerProfile& spk, double seconds, Rng& rng);

enum class NoiseKind { kWhite, kPink, kBrown, kHum, kFan, kTraffic, kClatter, kRain, kBabble };
inline constexpr int kNumNoiseKinds = 9;

std::string_view NoiseKindName(NoiseKind k);
Waveform SynthNoise(NoiseKind kind, double seconds, Rng& rng);

struct DemoCorpusSpec {
  int speakers = 24;
  int utterances_per_speaker = 6;
  double utterance_s = 14.0;  // 24 x 6 x 14 s = 33.6 min of speech
  int noise_files = 90;  // 10 per kind, under noise/<kind>/
  double noise_s = 12.0;
  std::uint64_t seed = 2026;

  double speech_minutes() const { return speakers * utterances_per_speaker * utterance_s / 60.0; }
  std::string Describe() const;
};

struct DemoCorpus {
  std::filesystem::path speech_dir;
  std::filesystem::path noise_dir;
  std::vector<std::filesystem::path> speech;
  std::vector<std::filesystem::path> noise;
};

// Writes dir/speech/*.wav and dir/noise/*.wav. A stamp file records the
// spec; a matching existing corpus is reused instead of regenerated.
DemoCorpus GenerateDemoCorpus(const std::filesystem::path& dir, const DemoCorpusSpec& spec = {});

}  // namespace maskgru

#endif  // MASKGRU_DEMO_CORPUS_HPP_
