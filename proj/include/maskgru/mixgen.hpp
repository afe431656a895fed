// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Corpus ingestion, split management and online synthesis of noise
// suppression (DNS) and echo cancellation (AEC) mixtures.

#ifndef MASKGRU_MIXGEN_HPP_
#define MASKGRU_MIXGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "maskgru/dsp.hpp"
#include "maskgru/random.hpp"

namespace maskgru {

namespace fs = std::filesystem;

inline constexpr Index kMaxDelaySamples = 8000;  // 500 ms at 16 kHz

enum class MixTask { kDns, kAec };
enum class Split { kTrain, kVal, kTest };
enum class Category { kSpeech, kNoise };

std::string_view SplitName(Split s);

struct MixtureCase {
  Waveform mic;
  Waveform clean;
  Waveform noise;
  std::optional<Waveform> farend;  // undelayed reference channel
  std::optional<Waveform> echo;
  double snr_db = 0.0;
  std::optional<double> esr_db;
  Index delay_samples = 0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::string tag;  // "low" (snr < 0 dB) or "high"
};

// Returns `interferer` scaled so that 10 log10(P_target / P_out) == snr_db,
// with P the mean-square power over the full clip.
Waveform ScaleForSnr(const Waveform& target, const Waveform& interferer, double snr_db);

// 10 log10(P_a / P_b) over the full clip.
double PowerRatioDb(const Waveform& a, const Waveform& b);

MixtureCase MixDns(const Waveform& clean, const Waveform& noise, double snr_db);

// echo = (farend delayed by delay_samples) * echo_path, scaled to esr_db
// relative to clean. An empty echo_path means a unit impulse.
MixtureCase MixAec(const Waveform& clean, const Waveform& noise,
                   const Waveform& farend, double esr_db, double snr_db,
                   Index delay_samples,
                   const Eigen::VectorXd& echo_path = Eigen::VectorXd());

std::string SnrTag(double snr_db);

struct CorpusFile {
  fs::path path;
  double duration_s = 0.0;
  Split split = Split::kTrain;
};

struct CorpusManifest {
  std::vector<CorpusFile> speech;
  std::vector<CorpusFile> noise;

  std::vector<const CorpusFile*> Files(Category c, Split s) const;
};

// Shuffles with `seed` and partitions 8:1:1 (train:val:test). With
// `by_directory`, files are dealt round-robin over their parent directories
// so val and test each cover as many directories as their size allows.
std::vector<CorpusFile> SplitFiles(std::vector<fs::path> files, std::uint64_t seed,
                                   bool by_directory = false);

// Speech splits flat; noise splits by directory (one per noise class).
CorpusManifest SplitManifest(std::vector<fs::path> speech_files,
                             std::vector<fs::path> noise_files, std::uint64_t seed);

// Sorted list of *.wav files directly under (or below) dir.
std::vector<fs::path> ScanWavDir(const fs::path& dir);

// Draws clips from a manifest. Clips longer than requested are randomly
// cropped, shorter ones looped. Loaded files are cached and every read is
// logged so split hygiene can be audited.
class CorpusSampler {
 public:
  explicit CorpusSampler(CorpusManifest manifest);

  const CorpusManifest& manifest() const { return manifest_; }

  Waveform Draw(Category c, Split s, Index length, Rng& rng,
                const CorpusFile** picked = nullptr) const;

  // Draw from a file other than `exclude` where the split allows it.
  Waveform DrawExcluding(Category c, Split s, Index length, Rng& rng,
                         const CorpusFile* exclude) const;

  std::vector<fs::path> AccessLog() const;
  void ClearAccessLog() const;

 private:
  Waveform Crop(const CorpusFile& file, Index length, Rng& rng) const;
  std::shared_ptr<const Waveform> Load(const CorpusFile& file) const;

  CorpusManifest manifest_;
  mutable std::mutex mu_;
  mutable std::map<fs::path, std::shared_ptr<const Waveform>> cache_;
  mutable std::vector<fs::path> access_log_;
};

struct MixSpec {
  MixTask task = MixTask::kDns;
  double snr_lo_db = -5.0;
  double snr_hi_db = 10.0;
  double esr_lo_db = -5.0;
  double esr_hi_db = 10.0;
  int max_delay_ms = 500;
  double duration_s = 10.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd echo_path;  // empty: pure delay, unit gain

  static MixSpec DnsTest() {
    MixSpec s;
    s.snr_lo_db = -15.0;
    s.snr_hi_db = 15.0;
    return s;
  }
  Index max_delay_samples() const { return Index(max_delay_ms) * kSampleRate / 1000; }
  void Validate() const;
};

// Synthesizes case `index` of `split`; fully determined by
// (spec.seed, split, index) and the manifest.
MixtureCase SynthesizeCase(const CorpusSampler& sampler, const MixSpec& spec,
                           Split split, std::uint64_t index);

// Case with all components quantized to PCM16 and mic recomputed as their
// exact sum, peak-normalized as a unit so ratios are preserved.
MixtureCase QuantizeCase(const MixtureCase& c);

// Writes `count` test cases as case_%06d/{mic,clean,noise[,farend,echo]}.wav
// plus meta.txt. Returns the written (quantized) cases' directories.
std::vector<fs::path> SynthTestset(const CorpusSampler& sampler, const MixSpec& spec,
                                   std::size_t count, const fs::path& out_dir);

void WriteCase(const MixtureCase& c, const fs::path& dir);
MixtureCase ReadCase(const fs::path& dir);
std::vector<fs::path> ListTestset(const fs::path& dir);

}  // namespace maskgru

#endif  // MASKGRU_MIXGEN_HPP_
