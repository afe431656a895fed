// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Shared fixtures for the unit tests.

#ifndef MASKGRU_TESTS_SUPPORT_HPP_
#define MASKGRU_TESTS_SUPPORT_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "maskgru/demo_corpus.hpp"
#include "maskgru/dsp.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/random.hpp"

namespace maskgru::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline bool Near(double a, double b, double abs_tol) { return std::abs(a - b) <= abs_tol; }
inline bool RelNear(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::abs(b);
}

Waveform WhiteNoise(Index n, Rng& rng, double amplitude = 0.1);
Waveform Sine(Index n, double hz, double amplitude = 0.5, double phase = 0.0);

// 12 speech files of 3 s and 10 noise files of 4 s, built once per
// process in the temp dir and shared by every test that needs a corpus.
const DemoCorpus& SmallCorpus();
CorpusManifest SmallManifest(std::uint64_t split_seed = 0);

}  // namespace maskgru::testing

#endif  // MASKGRU_TESTS_SUPPORT_HPP_
