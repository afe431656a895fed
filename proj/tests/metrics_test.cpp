// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/metrics.hpp"

#include <doctest.h>

#include "maskgru/demo_corpus.hpp"
#include "maskgru/error.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/wav.hpp"
#include "support.hpp"

namespace maskgru {
namespace {

Errc CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInvalidState;
}

Waveform Speech(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  return SynthSpeech(RandomSpeaker(rng), seconds, rng);
}

double OracleSiSdr(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const Eigen::VectorXd t = (s.dot(y) / s.squaredNorm()) * s;
  return 10.0 * std::log10(t.squaredNorm() / (y - t).squaredNorm());
}

TEST_SUITE("metrics") {

TEST_CASE("self comparison sits at the ceiling") {
  const Waveform s = Speech(3.0, 1);
  CHECK(Stoi(s, s) > 0.99);
  CHECK(Estoi(s, s) > 0.99);
  CHECK(SiSdr(s, s) == 60.0);
  CHECK(SegSnr(s, s) == 35.0);
}

TEST_CASE("intelligibility ignores positive rescaling") {
  const Waveform s = Speech(3.0, 2);
  Rng rng(3);
  const Waveform y(s.samples + testing::WhiteNoise(s.size(), rng, 0.05).samples);
  const Waveform y3(3.0 * y.samples);
  CHECK(testing::Near(Stoi(s, y), Stoi(s, y3), 1e-9));
  CHECK(testing::Near(Estoi(s, y), Estoi(s, y3), 1e-9));
  CHECK(testing::Near(SiSdr(s, y), SiSdr(s, y3), 1e-9));
  CHECK(SiSdr(s, Waveform(0.5 * s.samples)) == 60.0);
}

TEST_CASE("unrelated signals score low across a random-pair sweep") {
  Rng rng(4);
  double sum = 0.0, worst = 0.0;
  int pairs = 0;
  for (int k = 0; k < kNumNoiseKinds; ++k)
    for (int rep = 0; rep < 3; ++rep) {
      const Waveform s = SynthSpeech(RandomSpeaker(rng), 3.0, rng);
      const double v = Stoi(s, SynthNoise(NoiseKind(k), 3.0, rng));
      sum += v;
      worst = std::max(worst, v);
      ++pairs;
      if (NoiseKind(k) == NoiseKind::kWhite) CHECK(v < 0.3);
    }
  // strongly low-passed noise (brown) reaches about 0.33 in the reference too
  MESSAGE("mean STOI vs unrelated noise ", sum / pairs, ", max ", worst);
  CHECK(sum / pairs < 0.3);
  const Waveform a = Speech(3.0, 20), b = Speech(3.0, 21);
  CHECK(Stoi(a, b) < 0.3);
}

// Reference values from pystoi 0.4.1 fed the same signals after
// scipy.signal.resample_poly(x, 5, 8); negative ESTOI is clipped here.
TEST_CASE("STOI and ESTOI match the reference implementation") {
  const double ref[6][4] = {
      {0.1582060364, -0.0082775776, 0.4994928721, 0.3274441904},
      {0.2954235670, -0.0052714367, 0.5704554632, 0.3403899569},
      {0.3314375178, 0.0097439091, 0.8693885649, 0.7448088005},
      {0.2414418630, -0.0022649849, 0.6772386318, 0.5451330468},
      {0.1438402737, -0.0473965290, 0.4568320859, 0.3088809612},
      {0.2431825300, -0.0215269579, 0.5720223078, 0.3640133405}};
  Rng rng(4);
  for (int k = 0; k < 6; ++k) {
    Rng speech_rng(10 + k);
    const Waveform s = SynthSpeech(RandomSpeaker(speech_rng), 3.0, speech_rng);
    const Waveform n = SynthNoise(NoiseKind(k), 3.0, rng);
    const Waveform sq = QuantizePcm16(s), nq = QuantizePcm16(n),
                   mq = QuantizePcm16(MixDns(s, n, 0.0).mic);
    CHECK(testing::Near(Stoi(sq, nq), ref[k][0], 1e-9));
    CHECK(testing::Near(Estoi(sq, nq), std::max(0.0, ref[k][1]), 1e-9));
    CHECK(testing::Near(Stoi(sq, mq), ref[k][2], 1e-9));
    CHECK(testing::Near(Estoi(sq, mq), ref[k][3], 1e-9));
  }
}

TEST_CASE("higher SNR is more intelligible on at least 95 percent of pairs") {
  Rng rng(5);
  int wins = 0, estoi_below = 0;
  constexpr int kPairs = 200;
  for (int i = 0; i < kPairs; ++i) {
    const Waveform s = SynthSpeech(RandomSpeaker(rng), 1.5, rng);
    const Waveform n = SynthNoise(NoiseKind(UniformInt(rng, 0, kNumNoiseKinds - 1)), 1.5, rng);
    const MixtureCase hi = MixDns(s, n, 10.0), lo = MixDns(s, n, -10.0);
    if (Stoi(s, hi.mic) > Stoi(s, lo.mic)) ++wins;
    if (Estoi(s, lo.mic) <= Stoi(s, lo.mic)) ++estoi_below;
  }
  MESSAGE("STOI ordering held on ", wins, "/", kPairs, "; ESTOI <= STOI on ", estoi_below, "/",
          kPairs);
  CHECK(wins >= 190);
}

TEST_CASE("values stay in the unit interval") {
  Rng rng(6);
  const Waveform s = Speech(2.0, 7);
  for (double snr : {-20.0, -5.0, 0.0, 5.0, 20.0}) {
    const MixtureCase c = MixDns(s, testing::WhiteNoise(s.size(), rng), snr);
    for (double v : {Stoi(s, c.mic), Estoi(s, c.mic)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const Waveform zero = Waveform::Zeros(s.size());
  CHECK(Estoi(s, zero) <= 0.05);
  CHECK(Stoi(s, zero) <= 0.05);
}

TEST_CASE("short and mismatched inputs are rejected") {
  const Waveform s = Speech(2.0, 8);
  const Waveform shorter(s.samples.head(kSampleRate - 1));
  CHECK(CodeOf([&] { Stoi(shorter, shorter); }) == Errc::kTooShort);
  CHECK(CodeOf([&] { Estoi(shorter, shorter); }) == Errc::kTooShort);
  CHECK(CodeOf([&] { Stoi(s, shorter); }) == Errc::kShapeError);
  CHECK(CodeOf([&] { SiSdr(s, shorter); }) == Errc::kShapeError);
  CHECK(CodeOf([&] { SiSdr(Waveform::Zeros(100), Waveform(s.samples.head(100))); }) ==
        Errc::kDegenerateSignal);
  CHECK(CodeOf([&] { SiSdr(Waveform(s.samples.head(100)), Waveform::Zeros(100)); }) ==
        Errc::kDegenerateSignal);
  CHECK(CodeOf([&] { SegSnr(Waveform::Zeros(100), Waveform::Zeros(100)); }) == Errc::kTooShort);
}

TEST_CASE("SI-SDR of constructed mixtures") {
  const Waveform s = Speech(2.0, 9);
  Rng rng(10);
  Eigen::VectorXd n = testing::WhiteNoise(s.size(), rng).samples;
  n -= (n.dot(s.samples) / s.samples.squaredNorm()) * s.samples;  // orthogonal to s
  n *= s.samples.norm() / n.norm();
  CHECK(testing::Near(SiSdr(s, Waveform(s.samples + n)), 0.0, 1e-9));
  CHECK(testing::Near(SiSdr(s, Waveform(s.samples + 0.1 * n)), 20.0, 1e-9));
  CHECK(SiSdr(s, Waveform(n)) <= -30.0);

  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd y = Uniform(rng, 0.2, 2.0) * s.samples +
                              Uniform(rng, 0.05, 1.0) * testing::WhiteNoise(s.size(), rng).samples;
    CHECK(testing::Near(SiSdr(s, Waveform(y)), OracleSiSdr(s.samples, y), 1e-9));
  }
}

TEST_CASE("segmental SNR matches a framewise reference") {
  const Waveform s = Speech(2.0, 11);
  Rng rng(12);
  const Waveform y(s.samples + testing::WhiteNoise(s.size(), rng, 0.02).samples);
  double total = 0.0;
  int frames = 0;
  for (Index i = 0; i + 512 <= s.size(); i += 256) {
    double sig = 0.0, err = 0.0;
    for (Index k = i; k < i + 512; ++k) {
      sig += s.samples[k] * s.samples[k];
      err += (s.samples[k] - y.samples[k]) * (s.samples[k] - y.samples[k]);
    }
    const double eps = 2.220446049250313e-16;
    const double snr = err > 0.0 ? 10.0 * std::log10((sig + eps) / (err + eps)) : 35.0;
    total += std::min(35.0, std::max(-10.0, snr));
    ++frames;
  }
  CHECK(testing::Near(SegSnr(s, y), total / frames, 1e-9));
}

TEST_CASE("polyphase resampling matches scipy.signal.resample_poly") {
  Eigen::VectorXd x(64);
  for (Index i = 0; i < 64; ++i)
    x[i] = std::sin(0.37 * double(i)) + 0.5 * std::cos(1.9 * double(i)) + 0.01 * double(i);
  const Eigen::VectorXd y = ResamplePoly(x, 5, 8);
  REQUIRE(y.size() == 40);
  const std::pair<Index, double> ref[] = {
      {0, 0.3657367056285617},   {3, 0.71057292676402695}, {10, -0.018265191909337463},
      {17, -0.27217503950703992}, {25, 1.4655160568181709}, {39, -0.15780697890844023}};
  for (auto [i, v] : ref) CHECK(testing::Near(y[i], v, 1e-12));
  CHECK(ResamplePoly(x, 3, 3) == x);
}

}  // TEST_SUITE

}  // namespace
}  // namespace maskgru
