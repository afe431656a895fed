// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/mixgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maskgru/error.hpp"
#include "maskgru/wav.hpp"

namespace maskgru {

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

namespace {

constexpr double kSilentRms = 1e-8;

double Rms(const Waveform& w) { return std::sqrt(MeanSquare(w.samples)); }

void RequireSameLength(const Waveform& a, const Waveform& b, const char* what) {
  if (a.size() != b.size())
    throw Error(Errc::kShapeError, std::string(what) + ": length mismatch (" +
                                       std::to_string(a.size()) + " vs " +
                                       std::to_string(b.size()) + ")");
}

}  // namespace

double PowerRatioDb(const Waveform& a, const Waveform& b) {
  return 10.0 * std::log10(MeanSquare(a.samples) / MeanSquare(b.samples));
}

Waveform ScaleForSnr(const Waveform& target, const Waveform& interferer, double snr_db) {
  const double rt = Rms(target);
  const double ri = Rms(interferer);
  if (rt <= kSilentRms || ri <= kSilentRms)
    throw Error(Errc::kDegenerateSignal, "cannot set SNR against a silent signal");
  const double gain = rt / ri * std::pow(10.0, -snr_db / 20.0);
  return Waveform(interferer.samples * gain, interferer.sample_rate);
}

std::string SnrTag(double snr_db) { return snr_db < 0.0 ? "low" : "high"; }

MixtureCase MixDns(const Waveform& clean, const Waveform& noise, double snr_db) {
  RequireSameLength(clean, noise, "MixDns");
  MixtureCase c;
  c.clean = clean;
  c.noise = ScaleForSnr(clean, noise, snr_db);
  c.mic = Waveform(c.clean.samples + c.noise.samples);
  c.snr_db = snr_db;
  c.duration_s = clean.duration_s();
  c.tag = SnrTag(snr_db);
  return c;
}

MixtureCase MixAec(const Waveform& clean, const Waveform& noise, const Waveform& farend,
                   double esr_db, double snr_db, Index delay_samples,
                   const Eigen::VectorXd& echo_path) {
  if (delay_samples < 0 || delay_samples > kMaxDelaySamples)
    throw Error(Errc::kInvalidDelay, "delay " + std::to_string(delay_samples) +
                                         " outside [0, 8000] samples");
  RequireSameLength(clean, noise, "MixAec");
  RequireSameLength(clean, farend, "MixAec");

  const Index n = clean.size();
  const Eigen::VectorXd h =
      echo_path.size() ? echo_path : Eigen::VectorXd::Ones(1);
  Eigen::VectorXd echo = Eigen::VectorXd::Zero(n);
  for (Index t = delay_samples; t < n; ++t) {
    const Index kmax = std::min<Index>(h.size() - 1, t - delay_samples);
    double acc = 0.0;
    for (Index k = 0; k <= kmax; ++k) acc += h[k] * farend.samples[t - delay_samples - k];
    echo[t] = acc;
  }

  MixtureCase c = MixDns(clean, noise, snr_db);
  Waveform echo_w(std::move(echo));
  if (Rms(echo_w) > kSilentRms) echo_w = ScaleForSnr(clean, echo_w, -esr_db);
  else echo_w.samples.setZero();
  c.mic.samples += echo_w.samples;
  c.echo = std::move(echo_w);
  c.farend = farend;
  c.esr_db = esr_db;
  c.delay_samples = delay_samples;
  return c;
}

std::vector<const CorpusFile*> CorpusManifest::Files(Category c, Split s) const {
  std::vector<const CorpusFile*> out;
  const auto& list = c == Category::kSpeech ? speech : noise;
  for (const auto& f : list)
    if (f.split == s) out.push_back(&f);
  return out;
}

std::vector<CorpusFile> SplitFiles(std::vector<fs::path> files, std::uint64_t seed,
                                   bool by_directory) {
  if (files.size() < 10)
    throw Error(Errc::kInsufficientCorpus,
                "need at least 10 files per category, got " + std::to_string(files.size()));
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  Rng rng(DeriveSeed(seed, {0x5a17}));
  std::shuffle(files.begin(), files.end(), rng);
  if (by_directory) {
    // round-robin over shuffled groups, first picks placed at the test end
    std::map<fs::path, std::vector<fs::path>> by_dir;
    for (auto& f : files) by_dir[f.parent_path()].push_back(std::move(f));
    std::vector<std::vector<fs::path>> groups;
    for (auto& [dir, g] : by_dir) groups.push_back(std::move(g));
    std::shuffle(groups.begin(), groups.end(), rng);
    files.clear();
    for (std::size_t round = 0;; ++round) {
      bool any = false;
      for (const auto& g : groups)
        if (round < g.size()) {
          files.push_back(g[round]);
          any = true;
        }
      if (!any) break;
    }
    std::reverse(files.begin(), files.end());
  }

  const std::size_t n = files.size();
  const std::size_t n_val = std::max<std::size_t>(1, std::size_t(std::lround(n / 10.0)));
  const std::size_t n_test = n_val;
  const std::size_t n_train = n - n_val - n_test;
  std::vector<CorpusFile> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CorpusFile f;
    f.path = files[i];
    f.split = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    out.push_back(std::move(f));
  }
  return out;
}

CorpusManifest SplitManifest(std::vector<fs::path> speech_files,
                             std::vector<fs::path> noise_files, std::uint64_t seed) {
  CorpusManifest m;
  m.speech = SplitFiles(std::move(speech_files), seed);
  m.noise = SplitFiles(std::move(noise_files), DeriveSeed(seed, {1}), true);
  for (auto* list : {&m.speech, &m.noise})
    for (auto& f : *list)
      if (fs::exists(f.path)) f.duration_s = double(ProbeWavLength(f.path)) / kSampleRate;
  return m;
}

std::vector<fs::path> ScanWavDir(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw Error(Errc::kInsufficientCorpus, "corpus directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

CorpusSampler::CorpusSampler(CorpusManifest manifest) : manifest_(std::move(manifest)) {}

std::shared_ptr<const Waveform> CorpusSampler::Load(const CorpusFile& file) const {
  std::lock_guard lock(mu_);
  access_log_.push_back(file.path);
  if (auto it = cache_.find(file.path); it != cache_.end()) return it->second;
  auto w = std::make_shared<const Waveform>(LoadWav(file.path));
  if (w->empty()) throw Error(Errc::kCorruptFile, file.path.string() + ": no samples");
  cache_.emplace(file.path, w);
  return w;
}

Waveform CorpusSampler::Crop(const CorpusFile& file, Index length, Rng& rng) const {
  const auto src = Load(file);
  const Index n = src->size();
  Waveform out = Waveform::Zeros(length);
  if (n >= length) {
    const Index start = UniformInt(rng, 0, n - length);
    out.samples = src->samples.segment(start, length);
  } else {
    const Index offset = UniformInt(rng, 0, n - 1);
    for (Index i = 0; i < length; ++i) out.samples[i] = src->samples[(offset + i) % n];
  }
  return out;
}

Waveform CorpusSampler::Draw(Category c, Split s, Index length, Rng& rng,
                             const CorpusFile** picked) const {
  const auto files = manifest_.Files(c, s);
  if (files.empty())
    throw Error(Errc::kInsufficientCorpus,
                std::string("no files in split ") + std::string(SplitName(s)));
  const CorpusFile* f = files[UniformInt(rng, 0, Index(files.size()) - 1)];
  if (picked) *picked = f;
  return Crop(*f, length, rng);
}

Waveform CorpusSampler::DrawExcluding(Category c, Split s, Index length, Rng& rng,
                                      const CorpusFile* exclude) const {
  auto files = manifest_.Files(c, s);
  if (files.size() > 1) std::erase(files, exclude);
  if (files.empty())
    throw Error(Errc::kInsufficientCorpus,
                std::string("no files in split ") + std::string(SplitName(s)));
  return Crop(*files[UniformInt(rng, 0, Index(files.size()) - 1)], length, rng);
}

std::vector<fs::path> CorpusSampler::AccessLog() const {
  std::lock_guard lock(mu_);
  return access_log_;
}

void CorpusSampler::ClearAccessLog() const {
  std::lock_guard lock(mu_);
  access_log_.clear();
}

void MixSpec::Validate() const {
  if (snr_lo_db > snr_hi_db || esr_lo_db > esr_hi_db)
    throw Error(Errc::kInvalidConfig, "range lower bound exceeds upper bound");
  if (max_delay_ms < 0 || max_delay_samples() > kMaxDelaySamples)
    throw Error(Errc::kInvalidConfig, "max_delay_ms must lie in [0, 500]");
  if (duration_s <= 0.0) throw Error(Errc::kInvalidConfig, "duration must be positive");
}

MixtureCase SynthesizeCase(const CorpusSampler& sampler, const MixSpec& spec, Split split,
                           std::uint64_t index) {
  spec.Validate();
  const std::uint64_t seed =
      DeriveSeed(spec.seed, {std::uint64_t(split), index, std::uint64_t(spec.task)});
  Rng rng(seed);
  const Index len = Index(std::llround(spec.duration_s * kSampleRate));

  const CorpusFile* clean_file = nullptr;
  Waveform clean = sampler.Draw(Category::kSpeech, split, len, rng, &clean_file);
  Waveform noise = sampler.Draw(Category::kNoise, split, len, rng);
  const double snr = Uniform(rng, spec.snr_lo_db, spec.snr_hi_db);

  MixtureCase c;
  if (spec.task == MixTask::kDns) {
    c = MixDns(clean, noise, snr);
  } else {
    Waveform farend = sampler.DrawExcluding(Category::kSpeech, split, len, rng, clean_file);
    const double esr = Uniform(rng, spec.esr_lo_db, spec.esr_hi_db);
    const Index delay = UniformInt(rng, 0, spec.max_delay_samples());
    c = MixAec(clean, noise, farend, esr, snr, delay, spec.echo_path);
  }
  c.seed = seed;
  return c;
}

MixtureCase QuantizeCase(const MixtureCase& in) {
  MixtureCase c = in;
  double peak = in.mic.samples.cwiseAbs().maxCoeff();
  if (in.farend) peak = std::max(peak, in.farend->samples.cwiseAbs().maxCoeff());
  const double gain = peak > 0.9 ? 0.9 / peak : 1.0;
  auto q = [gain](const Waveform& w) {
    return QuantizePcm16(Waveform(w.samples * gain, w.sample_rate));
  };
  c.clean = q(in.clean);
  c.noise = q(in.noise);
  c.mic = Waveform(c.clean.samples + c.noise.samples);
  if (in.echo) {
    c.echo = q(*in.echo);
    c.mic.samples += c.echo->samples;
  }
  if (in.farend) c.farend = q(*in.farend);
  return c;
}

void WriteCase(const MixtureCase& c, const fs::path& dir) {
  fs::create_directories(dir);
  WriteWav(dir / "mic.wav", c.mic);
  WriteWav(dir / "clean.wav", c.clean);
  WriteWav(dir / "noise.wav", c.noise);
  if (c.farend) WriteWav(dir / "farend.wav", *c.farend);
  if (c.echo) WriteWav(dir / "echo.wav", *c.echo);
  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c.snr_db);
  meta << "snr_db=" << buf << "\n";
  if (c.esr_db) std::snprintf(buf, sizeof buf, "%.17g", *c.esr_db);
  meta << "esr_db=" << (c.esr_db ? buf : "none") << "\n";
  meta << "delay_samples=" << c.delay_samples << "\n";
  meta << "seed=" << c.seed << "\n";
  meta << "tag=" << c.tag << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", c.duration_s);
  meta << "duration_s=" << buf << "\n";
}

MixtureCase ReadCase(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.txt";
  std::ifstream meta(meta_path);
  if (!meta) throw Error(Errc::kCorruptTestset, "missing " + meta_path.string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"snr_db", "esr_db", "delay_samples", "seed", "tag"})
    if (!kv.count(key))
      throw Error(Errc::kCorruptTestset, meta_path.string() + ": missing key " + key);

  MixtureCase c;
  try {
    c.snr_db = std::stod(kv["snr_db"]);
    if (kv["esr_db"] != "none") c.esr_db = std::stod(kv["esr_db"]);
    c.delay_samples = std::stoll(kv["delay_samples"]);
    c.seed = std::stoull(kv["seed"]);
  } catch (const std::exception&) {
    throw Error(Errc::kCorruptTestset, meta_path.string() + ": malformed value");
  }
  c.tag = kv["tag"];
  c.mic = LoadWav(dir / "mic.wav");
  c.clean = LoadWav(dir / "clean.wav");
  c.noise = LoadWav(dir / "noise.wav");
  if (fs::exists(dir / "farend.wav")) c.farend = LoadWav(dir / "farend.wav");
  if (fs::exists(dir / "echo.wav")) c.echo = LoadWav(dir / "echo.wav");
  c.duration_s = c.mic.duration_s();
  return c;
}

std::vector<fs::path> SynthTestset(const CorpusSampler& sampler, const MixSpec& spec,
                                   std::size_t count, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> dirs;
  for (std::size_t i = 0; i < count; ++i) {
    const MixtureCase c = QuantizeCase(SynthesizeCase(sampler, spec, Split::kTest, i));
    char name[32];
    std::snprintf(name, sizeof name, "case_%06zu", i);
    WriteCase(c, out_dir / name);
    dirs.push_back(out_dir / name);
  }
  return dirs;
}

std::vector<fs::path> ListTestset(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw Error(Errc::kCorruptTestset, "test set directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("case_", 0) == 0)
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace maskgru
