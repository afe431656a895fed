// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "support.hpp"

#include <atomic>
#include <numbers>
#include <random>
#include <system_error>

#include <unistd.h>

namespace maskgru::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("maskgru_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Waveform WhiteNoise(Index n, Rng& rng, double amplitude) {
  std::normal_distribution<double> g(0.0, amplitude);
  Waveform w = Waveform::Zeros(n);
  for (Index i = 0; i < n; ++i) w.samples[i] = g(rng);
  return w;
}

Waveform Sine(Index n, double hz, double amplitude, double phase) {
  Waveform w = Waveform::Zeros(n);
  for (Index i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * double(i) / kSampleRate + phase);
  return w;
}

const DemoCorpus& SmallCorpus() {
  static const DemoCorpus corpus = [] {
    DemoCorpusSpec spec;
    spec.speakers = 4;
    spec.utterances_per_speaker = 3;
    spec.utterance_s = 3.0;
    spec.noise_files = 10;
    spec.noise_s = 4.0;
    spec.seed = 77;
    static const TempDir dir("small_corpus");
    return GenerateDemoCorpus(dir.path(), spec);
  }();
  return corpus;
}

CorpusManifest SmallManifest(std::uint64_t split_seed) {
  const DemoCorpus& c = SmallCorpus();
  return SplitManifest(c.speech, c.noise, split_seed);
}

}  // namespace maskgru::testing
