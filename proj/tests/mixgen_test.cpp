// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/mixgen.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include <doctest.h>

#include "maskgru/demo_corpus.hpp"
#include "maskgru/error.hpp"
#include "maskgru/metrics.hpp"
#include "maskgru/wav.hpp"
#include "support.hpp"

namespace maskgru {
namespace {

using testing::WhiteNoise;

double Rms(const Waveform& w) { return std::sqrt(MeanSquare(w.samples)); }

std::vector<char> FileBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_SUITE("mixgen") {

TEST_CASE("scaling for a target SNR") {
  Rng rng(1);
  SUBCASE("equal RMS at 0 dB leaves the interferer unchanged") {
    const Waveform a = WhiteNoise(4000, rng), b = WhiteNoise(4000, rng);
    const Waveform b2(b.samples * (Rms(a) / Rms(b)));
    CHECK(testing::RelNear(Rms(ScaleForSnr(a, b2, 0.0)), Rms(b2), 1e-12));
    CHECK((ScaleForSnr(a, b2, 0.0).samples - b2.samples).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("20 dB means a tenth of the RMS") {
    const Waveform a = WhiteNoise(4000, rng, 0.2), b = WhiteNoise(4000, rng, 0.05);
    CHECK(testing::RelNear(Rms(ScaleForSnr(a, b, 20.0)), Rms(a) / 10.0, 1e-12));
  }
  SUBCASE("measured SNR matches the request") {
    for (int i = 0; i < 50; ++i) {
      const Waveform a = WhiteNoise(3000, rng, Uniform(rng, 0.01, 1.0));
      const Waveform b = WhiteNoise(3000, rng, Uniform(rng, 0.01, 1.0));
      const double snr = Uniform(rng, -20.0, 30.0);
      CHECK(std::abs(PowerRatioDb(a, ScaleForSnr(a, b, snr)) - snr) < 1e-6);
    }
  }
  SUBCASE("silent inputs") {
    const Waveform a = WhiteNoise(100, rng);
    try {
      ScaleForSnr(a, Waveform::Zeros(100), 0.0);
      FAIL("expected DegenerateSignal");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kDegenerateSignal);
    }
    CHECK_THROWS_AS(ScaleForSnr(Waveform::Zeros(100), a, 0.0), Error);
  }
}

TEST_CASE("DNS mixing") {
  Rng rng(2);
  const Waveform clean = WhiteNoise(5000, rng, 0.3), noise = WhiteNoise(5000, rng);
  const MixtureCase c = MixDns(clean, noise, -3.0);
  CHECK((c.mic.samples - c.clean.samples - c.noise.samples).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(testing::Near(PowerRatioDb(c.clean, c.noise), -3.0, 1e-9));
  CHECK(c.tag == "low");
  CHECK(MixDns(clean, noise, 0.0).tag == "high");
  CHECK(!c.farend);
  CHECK_THROWS_AS(MixDns(clean, WhiteNoise(10, rng), 0.0), Error);
}

TEST_CASE("mixing near-clean speech keeps intelligibility at ceiling") {
  Rng rng(3);
  const Waveform speech = SynthSpeech(RandomSpeaker(rng), 3.0, rng);
  const MixtureCase c = MixDns(speech, WhiteNoise(speech.size(), rng), 60.0);
  CHECK(Stoi(c.clean, c.mic) > 0.99);
}

TEST_CASE("cancelling noise produces bins quieter than the clean component") {
  Rng rng(4);
  const Waveform clean = SynthSpeech(RandomSpeaker(rng), 1.0, rng);
  MixtureCase c;
  c.clean = clean;
  c.noise = Waveform(-0.5 * clean.samples);
  c.mic = Waveform(c.clean.samples + c.noise.samples);
  const auto xm = Magnitude(Stft(c.mic)).data, cm = Magnitude(Stft(c.clean)).data;
  CHECK((xm < cm).any());
}

TEST_CASE("at 0 dB independent signals double the power") {
  Rng rng(5);
  double ratio = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const Waveform clean = WhiteNoise(1600, rng, Uniform(rng, 0.05, 0.5));
    const Waveform noise = WhiteNoise(1600, rng, Uniform(rng, 0.05, 0.5));
    const MixtureCase c = MixDns(clean, noise, 0.0);
    ratio += MeanSquare(c.mic.samples) / MeanSquare(c.clean.samples);
  }
  CHECK(testing::RelNear(ratio / draws, 2.0, 0.05));
}

TEST_CASE("AEC mixing") {
  Rng rng(6);
  const Index n = 20000;
  const Waveform clean = WhiteNoise(n, rng, 0.2), noise = WhiteNoise(n, rng),
                 farend = WhiteNoise(n, rng, 0.4);

  SUBCASE("ESR and SNR are realized and the sum holds") {
    const MixtureCase c = MixAec(clean, noise, farend, 10.0, 5.0, 321);
    REQUIRE(c.echo);
    REQUIRE(c.farend);
    CHECK(testing::RelNear(MeanSquare(c.echo->samples) / MeanSquare(c.clean.samples), 10.0, 1e-9));
    CHECK(std::abs(PowerRatioDb(c.clean, c.noise) - 5.0) < 1e-6);
    CHECK((c.mic.samples - c.clean.samples - c.noise.samples - c.echo->samples)
              .cwiseAbs()
              .maxCoeff() <= 1e-9);
    CHECK(c.farend->samples == farend.samples);
    CHECK(c.delay_samples == 321);
    CHECK(*c.esr_db == 10.0);
  }

  SUBCASE("a silent far end reduces to DNS mixing") {
    const MixtureCase a = MixAec(clean, noise, Waveform::Zeros(n), 4.0, 2.0, 100);
    const MixtureCase d = MixDns(clean, noise, 2.0);
    CHECK(a.mic.samples == d.mic.samples);
    CHECK(a.echo->samples.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("the echo peaks at the requested delay") {
    const MixtureCase c = MixAec(clean, noise, farend, 0.0, 10.0, 8000);
    const Eigen::VectorXd residual = c.mic.samples - c.clean.samples - c.noise.samples;
    Index best = -1;
    double best_val = -1.0;
    for (Index lag = 0; lag <= 8200; ++lag) {
      const double v = residual.tail(n - lag).dot(farend.samples.head(n - lag));
      if (v > best_val) best_val = v, best = lag;
    }
    CHECK(best == 8000);
  }

  SUBCASE("an FIR echo path is applied causally") {
    Eigen::VectorXd h(3);
    h << 0.5, -0.25, 0.125;
    const MixtureCase c = MixAec(clean, noise, farend, 0.0, 0.0, 10, h);
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(n);
    for (Index t = 10; t < n; ++t)
      for (Index k = 0; k < 3 && t - 10 - k >= 0; ++k) ref[t] += h[k] * farend.samples[t - 10 - k];
    const double g = c.echo->samples.dot(ref) / ref.squaredNorm();
    CHECK((c.echo->samples - g * ref).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("delays outside 500 ms are rejected") {
    for (Index d : {Index(-1), Index(8001)}) {
      try {
        MixAec(clean, noise, farend, 0.0, 0.0, d);
        FAIL("expected InvalidDelay");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::kInvalidDelay);
      }
    }
  }
}

TEST_CASE("splitting a manifest") {
  std::vector<fs::path> files;
  for (int i = 0; i < 100; ++i) files.push_back("f" + std::to_string(i) + ".wav");

  const auto a = SplitFiles(files, 9), b = SplitFiles(files, 9);
  std::map<Split, int> counts;
  std::map<Split, std::set<fs::path>> sets;
  for (const auto& f : a) {
    ++counts[f.split];
    sets[f.split].insert(f.path);
  }
  CHECK(counts[Split::kTrain] == 80);
  CHECK(counts[Split::kVal] == 10);
  CHECK(counts[Split::kTest] == 10);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].path == b[i].path);
    CHECK(a[i].split == b[i].split);
  }
  std::set<fs::path> all;
  for (auto& [s, set] : sets) all.insert(set.begin(), set.end());
  CHECK(all == std::set<fs::path>(files.begin(), files.end()));
  CHECK(all.size() == 100);

  const auto c = SplitFiles(files, 10);
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) differs |= c[i].split != a[i].split || c[i].path != a[i].path;
  CHECK(differs);

  for (int n : {11, 15, 23, 37}) {
    std::vector<fs::path> few(files.begin(), files.begin() + n);
    std::map<Split, int> k;
    for (const auto& f : SplitFiles(few, 1)) ++k[f.split];
    CHECK(std::abs(k[Split::kTrain] - 0.8 * n) <= 1.0 + 1e-9);
    CHECK(std::abs(k[Split::kVal] - 0.1 * n) <= 1.0 + 1e-9);
    CHECK(std::abs(k[Split::kTest] - 0.1 * n) <= 1.0 + 1e-9);
  }

  try {
    SplitFiles(std::vector<fs::path>(files.begin(), files.begin() + 9), 0);
    FAIL("expected InsufficientCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kInsufficientCorpus);
  }
}

TEST_CASE("directory-stratified split covers every directory it can") {
  for (int per_dir : {5, 10, 13}) {
    std::vector<fs::path> files;
    for (int d = 0; d < 9; ++d)
      for (int i = 0; i < per_dir; ++i)
        files.push_back(fs::path("k" + std::to_string(d)) / ("f" + std::to_string(i) + ".wav"));
    const std::size_t n = files.size();
    for (std::uint64_t seed : {0, 1, 2}) {
      const auto s = SplitFiles(files, seed, true);
      std::map<Split, int> counts;
      std::map<Split, std::set<fs::path>> dirs;
      std::set<fs::path> all;
      for (const auto& f : s) {
        ++counts[f.split];
        dirs[f.split].insert(f.path.parent_path());
        all.insert(f.path);
      }
      CHECK(all == std::set<fs::path>(files.begin(), files.end()));
      CHECK(std::abs(counts[Split::kTrain] - 0.8 * double(n)) <= 1.0 + 1e-9);
      CHECK(std::abs(counts[Split::kVal] - 0.1 * double(n)) <= 1.0 + 1e-9);
      CHECK(std::abs(counts[Split::kTest] - 0.1 * double(n)) <= 1.0 + 1e-9);
      for (Split sp : {Split::kVal, Split::kTest})
        CHECK(dirs[sp].size() == std::size_t(std::min(counts[sp], 9)));
      CHECK(dirs[Split::kTrain].size() == 9);
      const auto again = SplitFiles(files, seed, true);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(again[i].path == s[i].path);
    }
  }
}

TEST_CASE("online synthesis") {
  const CorpusSampler sampler(testing::SmallManifest());
  MixSpec dns;
  dns.duration_s = 2.0;
  dns.seed = 123;
  MixSpec aec = dns;
  aec.task = MixTask::kAec;

  SUBCASE("(seed, split, index) determine a case") {
    const MixtureCase a = SynthesizeCase(sampler, aec, Split::kTrain, 7);
    const MixtureCase b = SynthesizeCase(sampler, aec, Split::kTrain, 7);
    const MixtureCase c = SynthesizeCase(sampler, aec, Split::kTrain, 8);
    CHECK(a.mic.samples == b.mic.samples);
    CHECK(a.seed == b.seed);
    CHECK(a.delay_samples == b.delay_samples);
    CHECK(a.mic.samples != c.mic.samples);
    MixSpec other = aec;
    other.seed = 124;
    CHECK(SynthesizeCase(sampler, other, Split::kTrain, 7).mic.samples != a.mic.samples);
  }

  SUBCASE("every case satisfies the linear model and its ranges") {
    for (std::uint64_t i = 0; i < 20; ++i) {
      const MixtureCase d = SynthesizeCase(sampler, dns, Split::kTrain, i);
      CHECK(d.mic.size() == 32000);
      CHECK((d.mic.samples - d.clean.samples - d.noise.samples).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(d.snr_db >= -5.0);
      CHECK(d.snr_db <= 10.0);
      CHECK(std::abs(PowerRatioDb(d.clean, d.noise) - d.snr_db) < 1e-6);

      const MixtureCase e = SynthesizeCase(sampler, aec, Split::kVal, i);
      REQUIRE(e.echo);
      CHECK((e.mic.samples - e.clean.samples - e.noise.samples - e.echo->samples)
                .cwiseAbs()
                .maxCoeff() <= 1e-9);
      CHECK(e.delay_samples >= 0);
      CHECK(e.delay_samples <= kMaxDelaySamples);
      CHECK(std::abs(PowerRatioDb(*e.echo, e.clean) - *e.esr_db) < 1e-6);
      CHECK(*e.esr_db >= -5.0);
      CHECK(*e.esr_db <= 10.0);
    }
  }

  SUBCASE("training-mode sampling never touches test files") {
    sampler.ClearAccessLog();
    for (std::uint64_t i = 0; i < 40; ++i) {
      SynthesizeCase(sampler, dns, Split::kTrain, i);
      SynthesizeCase(sampler, aec, Split::kTrain, i);
    }
    std::set<fs::path> test_files;
    for (auto c : {Category::kSpeech, Category::kNoise})
      for (const auto* f : sampler.manifest().Files(c, Split::kTest)) test_files.insert(f->path);
    REQUIRE(!test_files.empty());
    const auto log = sampler.AccessLog();
    CHECK(!log.empty());
    for (const auto& p : log) CHECK(test_files.count(p) == 0);
  }

  SUBCASE("invalid specs") {
    MixSpec bad = dns;
    bad.snr_lo_db = 20.0;
    CHECK_THROWS_AS(SynthesizeCase(sampler, bad, Split::kTrain, 0), Error);
    bad = dns;
    bad.max_delay_ms = 501;
    CHECK_THROWS_AS(SynthesizeCase(sampler, bad, Split::kTrain, 0), Error);
  }
}

TEST_CASE("spec defaults") {
  const MixSpec train;
  CHECK(train.snr_lo_db == -5.0);
  CHECK(train.snr_hi_db == 10.0);
  CHECK(train.esr_lo_db == -5.0);
  CHECK(train.esr_hi_db == 10.0);
  CHECK(train.max_delay_samples() == 8000);
  const MixSpec test = MixSpec::DnsTest();
  CHECK(test.snr_lo_db == -15.0);
  CHECK(test.snr_hi_db == 15.0);
  CHECK(test.duration_s == 10.0);
}

TEST_CASE("persisted test sets") {
  const CorpusSampler sampler(testing::SmallManifest());
  testing::TempDir tmp("testset");

  CHECK(SynthTestset(sampler, MixSpec::DnsTest(), 0, tmp / "empty").empty());
  CHECK(ListTestset(tmp / "empty").empty());

  MixSpec aec;
  aec.task = MixTask::kAec;
  aec.seed = 5;
  const auto dirs = SynthTestset(sampler, aec, 4, tmp / "aec");
  REQUIRE(dirs.size() == 4);
  CHECK(ListTestset(tmp / "aec") == dirs);
  for (const auto& d : dirs) {
    const MixtureCase c = ReadCase(d);
    CHECK(c.duration_s == 10.0);
    REQUIRE(c.farend);
    REQUIRE(c.echo);
    CHECK(c.delay_samples <= 8000);
    CHECK(c.tag == SnrTag(c.snr_db));
    CHECK((c.mic.samples - c.clean.samples - c.noise.samples - c.echo->samples)
              .cwiseAbs()
              .maxCoeff() <= 1e-9);
  }

  const auto again = SynthTestset(sampler, aec, 4, tmp / "aec2");
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (const char* f : {"mic.wav", "clean.wav", "noise.wav", "farend.wav", "echo.wav", "meta.txt"})
      CHECK(FileBytes(dirs[i] / f) == FileBytes(again[i] / f));

  MixSpec dns = MixSpec::DnsTest();
  const auto ddirs = SynthTestset(sampler, dns, 12, tmp / "dns");
  int low = 0;
  for (const auto& d : ddirs) {
    const MixtureCase c = ReadCase(d);
    CHECK(!c.farend);
    CHECK(c.snr_db >= -15.0);
    CHECK(c.snr_db <= 15.0);
    CHECK(c.tag == (c.snr_db < 0.0 ? "low" : "high"));
    low += c.tag == "low";
    CHECK((c.mic.samples - c.clean.samples - c.noise.samples).cwiseAbs().maxCoeff() <= 1e-9);
  }
  CHECK(low > 0);
  CHECK(low < 12);

  fs::remove(ddirs[0] / "meta.txt");
  try {
    ReadCase(ddirs[0]);
    FAIL("expected CorruptTestset");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kCorruptTestset);
  }
  std::ofstream(ddirs[1] / "meta.txt", std::ios::trunc) << "snr_db=abc\n";
  CHECK_THROWS_AS(ReadCase(ddirs[1]), Error);
}

TEST_CASE("quantization preserves the component sum and ratios") {
  Rng rng(9);
  const Waveform clean = WhiteNoise(8000, rng, 0.5), noise = WhiteNoise(8000, rng, 0.5);
  const MixtureCase c = QuantizeCase(MixDns(clean, noise, -2.0));
  CHECK(c.mic.samples.cwiseAbs().maxCoeff() <= 0.9 + 1e-4);
  CHECK((c.mic.samples - c.clean.samples - c.noise.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(PowerRatioDb(c.clean, c.noise) + 2.0) < 0.01);
  CHECK(c.clean.samples == QuantizePcm16(c.clean).samples);
}

}  // TEST_SUITE

}  // namespace
}  // namespace maskgru
