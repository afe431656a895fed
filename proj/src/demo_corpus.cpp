// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/demo_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maskgru/error.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/wav.hpp"

namespace maskgru {
namespace {

constexpr double kFs = kSampleRate;
constexpr int kCorpusFormat = 2;

// Two-pole resonator with unit gain at DC (cascade formant section).
struct Resonator {
  double a1 = 0, a2 = 0, g = 1, y1 = 0, y2 = 0;
  void Set(double freq, double bw) {
    const double r = std::exp(-M_PI * bw / kFs);
    a1 = 2.0 * r * std::cos(2.0 * M_PI * freq / kFs);
    a2 = -r * r;
    g = 1.0 - a1 - a2;
  }
  double Run(double x) {
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// RBJ band-pass with 0 dB peak gain.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0, x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  void BandPass(double fc, double q) {
    const double w = 2.0 * M_PI * fc / kFs, alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w) / a0;
    a2 = (1.0 - alpha) / a0;
  }
  void LowPass(double fc, double q) {
    const double w = 2.0 * M_PI * fc / kFs, alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha, c = std::cos(w);
    b0 = (1.0 - c) / 2.0 / a0;
    b1 = (1.0 - c) / a0;
    b2 = b0;
    a1 = -2.0 * c / a0;
    a2 = (1.0 - alpha) / a0;
  }
  void HighPass(double fc, double q) {
    const double w = 2.0 * M_PI * fc / kFs, alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha, c = std::cos(w);
    b0 = (1.0 + c) / 2.0 / a0;
    b1 = -(1.0 + c) / a0;
    b2 = b0;
    a1 = -2.0 * c / a0;
    a2 = (1.0 - alpha) / a0;
  }
  double Run(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Vowel {
  double f1, f2, f3;
};
constexpr std::array<Vowel, 10> kVowels = {{{270, 2290, 3010},
                                            {390, 1990, 2550},
                                            {530, 1840, 2480},
                                            {660, 1720, 2410},
                                            {730, 1090, 2440},
                                            {570, 840, 2410},
                                            {440, 1020, 2240},
                                            {300, 870, 2240},
                                            {640, 1190, 2390},
                                            {490, 1350, 1690}}};

// Per-sample control tracks, filled segment by segment then smoothed.
struct Tracks {
  Eigen::VectorXd voice, fric, fric_fc, f0;
  Eigen::MatrixXd formants;  // n x 3
  explicit Tracks(Index n)
      : voice(Eigen::VectorXd::Zero(n)),
        fric(Eigen::VectorXd::Zero(n)),
        fric_fc(Eigen::VectorXd::Constant(n, 4000.0)),
        f0(Eigen::VectorXd::Constant(n, 120.0)),
        formants(n, 3) {
    formants.rowwise() = Eigen::RowVector3d(500, 1500, 2500);
  }
};

void FillFormants(Tracks& tr, Index a, Index b, const Vowel& v, double scale) {
  for (Index i = std::max<Index>(a, 0); i < std::min<Index>(b, tr.voice.size()); ++i)
    tr.formants.row(i) = Eigen::RowVector3d(v.f1, v.f2, v.f3) * scale;
}

void Smooth(Eigen::VectorXd& x, double tau_s) {
  const double a = std::exp(-1.0 / (tau_s * kFs));
  double s = x.size() ? x[0] : 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    s = a * s + (1.0 - a) * x[i];
    x[i] = s;
  }
}

// Derivative of a Rosenberg glottal flow pulse at phase in [0, 1).
double GlottalPulse(double phase) {
  constexpr double kOpen = 0.4, kClose = 0.16;
  if (phase < kOpen) return 0.5 * M_PI / kOpen * std::sin(M_PI * phase / kOpen);
  if (phase < kOpen + kClose) return -M_PI / (2.0 * kClose) * std::sin(M_PI * (phase - kOpen) / (2.0 * kClose));
  return 0.0;
}

void NormalizeRms(Eigen::VectorXd& x, double rms) {
  const double cur = std::sqrt(x.squaredNorm() / std::max<Index>(1, x.size()));
  if (cur > 0) x *= rms / cur;
  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.98) x *= 0.98 / peak;
}

Eigen::VectorXd WhiteNoise(Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = g(rng);
  return x;
}

Eigen::VectorXd PinkNoise(Index n, Rng& rng) {
  const Eigen::VectorXd w = WhiteNoise(n, rng);
  Eigen::VectorXd x(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (Index i = 0; i < n; ++i) {
    const double v = w[i];
    b0 = 0.99886 * b0 + v * 0.0555179;
    b1 = 0.99332 * b1 + v * 0.0750759;
    b2 = 0.96900 * b2 + v * 0.1538520;
    b3 = 0.86650 * b3 + v * 0.3104856;
    b4 = 0.55000 * b4 + v * 0.5329522;
    b5 = -0.7616 * b5 - v * 0.0168980;
    x[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + v * 0.5362;
    b6 = v * 0.115926;
  }
  return x;
}

Eigen::VectorXd BrownNoise(Index n, Rng& rng) {
  const Eigen::VectorXd w = WhiteNoise(n, rng);
  Eigen::VectorXd x(n);
  double s = 0;
  for (Index i = 0; i < n; ++i) {
    s = 0.997 * s + 0.05 * w[i];
    x[i] = s;
  }
  return x;
}

}  // namespace

SpeakerProfile RandomSpeaker(Rng& rng) {
  SpeakerProfile s;
  const bool low = Uniform(rng, 0, 1) < 0.5;
  s.f0_hz = low ? Uniform(rng, 85, 150) : Uniform(rng, 160, 250);
  s.formant_scale = low ? Uniform(rng, 0.88, 1.02) : Uniform(rng, 1.05, 1.22);
  s.breathiness = Uniform(rng, 0.02, 0.12);
  s.syllable_rate = Uniform(rng, 3.5, 5.5);
  return s;
}

Waveform SynthSpeech(const SpeakerProfile& spk, double seconds, Rng& rng) {
  const Index n = Index(std::llround(seconds * kFs));
  Tracks tr(n);
  const Index lead = Index(Uniform(rng, 0.05, 0.4) * kFs);
  Index pos = lead;
  while (pos < n) {
    const Index phrase_len = Index(Uniform(rng, 1.2, 3.5) * kFs);
    const Index phrase_end = std::min(n, pos + phrase_len);
    const Index phrase_start = pos;
    while (pos < phrase_end) {
      const Index syl = Index(Uniform(rng, 0.7, 1.3) / spk.syllable_rate * kFs);
      const Index syl_end = std::min(phrase_end, pos + syl);
      const Vowel v = kVowels[UniformInt(rng, 0, kVowels.size() - 1)];
      const double stress = Uniform(rng, 0, 1) < 0.35 ? 1.0 : Uniform(rng, 0.45, 0.8);
      Index vstart = pos;
      if (Uniform(rng, 0, 1) < 0.6) {
        const double kind = Uniform(rng, 0, 1);
        if (kind < 0.4) {  // fricative
          const Index len = Index(Uniform(rng, 0.04, 0.1) * kFs);
          const double fc = Uniform(rng, 2500, 6500), amp = Uniform(rng, 0.15, 0.45);
          for (Index i = pos; i < std::min(syl_end, pos + len); ++i) {
            tr.fric[i] = amp;
            tr.fric_fc[i] = fc;
          }
          if (Uniform(rng, 0, 1) < 0.4)  // voiced fricative
            for (Index i = pos; i < std::min(syl_end, pos + len); ++i) tr.voice[i] = 0.25 * stress;
          vstart = pos + len;
        } else if (kind < 0.75) {  // plosive: closure then burst
          const Index closure = Index(Uniform(rng, 0.02, 0.06) * kFs);
          const Index burst = Index(Uniform(rng, 0.008, 0.018) * kFs);
          const double fc = Uniform(rng, 1200, 5000);
          for (Index i = pos + closure; i < std::min(syl_end, pos + closure + burst); ++i) {
            tr.fric[i] = 0.6;
            tr.fric_fc[i] = fc;
          }
          vstart = pos + closure + burst;
        } else {  // nasal murmur
          const Index len = Index(Uniform(rng, 0.04, 0.08) * kFs);
          const Vowel nasal{250, Uniform(rng, 1000, 1800), 2500};
          FillFormants(tr, pos, pos + len, nasal, spk.formant_scale);
          for (Index i = pos; i < std::min(syl_end, pos + len); ++i) tr.voice[i] = 0.35 * stress;
          vstart = pos + len;
        }
      }
      Index vend = syl_end;
      if (Uniform(rng, 0, 1) < 0.25) {  // coda fricative
        const Index len = Index(Uniform(rng, 0.03, 0.07) * kFs);
        vend = std::max(vstart, syl_end - len);
        const double fc = Uniform(rng, 3000, 7000);
        for (Index i = vend; i < syl_end; ++i) {
          tr.fric[i] = 0.25;
          tr.fric_fc[i] = fc;
        }
      }
      FillFormants(tr, vstart, vend, v, spk.formant_scale);
      for (Index i = vstart; i < vend; ++i) tr.voice[i] = stress;
      for (Index i = pos; i < syl_end; ++i) {
        const double ph = double(i - phrase_start) / double(std::max<Index>(1, phrase_end - phrase_start));
        const double accent = 1.0 + 0.1 * (stress > 0.9 ? 1.0 : 0.0) *
                                        std::sin(M_PI * double(i - pos) / double(std::max<Index>(1, syl_end - pos)));
        tr.f0[i] = spk.f0_hz * (1.12 - 0.25 * ph) * accent;
      }
      pos = syl_end;
    }
    pos = phrase_end + Index(Uniform(rng, 0.15, 0.7) * kFs);
  }

  Smooth(tr.voice, 0.006);
  Smooth(tr.fric, 0.003);
  Smooth(tr.f0, 0.03);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd col = tr.formants.col(k);
    Smooth(col, 0.015);
    tr.formants.col(k) = col;
  }

  std::normal_distribution<double> g(0.0, 1.0);
  std::array<Resonator, 4> tract;
  Biquad fric_bp;
  fric_bp.BandPass(4000, 1.5);
  double phase = 0.0, jitter = 0.0;
  Eigen::VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    if (i % 16 == 0) {
      const double bw[4] = {60, 90, 130, 170};
      for (int k = 0; k < 3; ++k) tract[k].Set(tr.formants(i, k), bw[k] * spk.formant_scale);
      tract[3].Set(3500 * spk.formant_scale, bw[3]);
      fric_bp.BandPass(tr.fric_fc[i], 1.2);
      jitter = 0.995 * jitter + 0.005 * g(rng);
    }
    const double f0 = tr.f0[i] * (1.0 + 0.02 * jitter + 0.01 * std::sin(2 * M_PI * 5.0 * i / kFs));
    phase += f0 / kFs;
    if (phase >= 1.0) phase -= 1.0;
    const double src = tr.voice[i] * (GlottalPulse(phase) + spk.breathiness * g(rng));
    double v = src;
    for (auto& r : tract) v = r.Run(v);
    const double fr = tr.fric[i] * fric_bp.Run(g(rng));
    out[i] = v + fr;
  }
  // light high-pass to remove DC from the cascade
  Biquad hp;
  hp.HighPass(60.0, 0.707);
  for (Index i = 0; i < n; ++i) out[i] = hp.Run(out[i]);
  NormalizeRms(out, std::pow(10.0, Uniform(rng, -26.0, -20.0) / 20.0));
  return Waveform(std::move(out));
}

std::string_view NoiseKindName(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBrown: return "brown";
    case NoiseKind::kHum: return "hum";
    case NoiseKind::kFan: return "fan";
    case NoiseKind::kTraffic: return "traffic";
    case NoiseKind::kClatter: return "clatter";
    case NoiseKind::kRain: return "rain";
    case NoiseKind::kBabble: return "babble";
  }
  return "?";
}

Waveform SynthNoise(NoiseKind kind, double seconds, Rng& rng) {
  const Index n = Index(std::llround(seconds * kFs));
  Eigen::VectorXd x;
  switch (kind) {
    case NoiseKind::kWhite:
      x = WhiteNoise(n, rng);
      break;
    case NoiseKind::kPink:
      x = PinkNoise(n, rng);
      break;
    case NoiseKind::kBrown:
      x = BrownNoise(n, rng);
      break;
    case NoiseKind::kHum: {
      const double f = Uniform(rng, 0, 1) < 0.5 ? 50.0 : 60.0;
      x = 0.03 * WhiteNoise(n, rng);
      for (int k = 1; k <= 10; ++k) {
        const double ph = Uniform(rng, 0, 2 * M_PI), a = Uniform(rng, 0.3, 1.0) / k;
        for (Index i = 0; i < n; ++i) x[i] += a * std::sin(2 * M_PI * f * k * i / kFs + ph);
      }
      break;
    }
    case NoiseKind::kFan: {
      x = PinkNoise(n, rng);
      Biquad lp;
      lp.LowPass(Uniform(rng, 1500, 4000), 0.707);
      for (Index i = 0; i < n; ++i) x[i] = lp.Run(x[i]);
      const double blade = Uniform(rng, 80, 250), am = Uniform(rng, 0.5, 3.0);
      const double tone = 0.3 * std::sqrt(x.squaredNorm() / double(n));
      for (Index i = 0; i < n; ++i) {
        const double t = i / kFs;
        x[i] = x[i] * (1.0 + 0.15 * std::sin(2 * M_PI * am * t)) +
               tone * (std::sin(2 * M_PI * blade * t) + 0.5 * std::sin(4 * M_PI * blade * t));
      }
      break;
    }
    case NoiseKind::kTraffic: {
      x = BrownNoise(n, rng);
      const double rate = Uniform(rng, 0.05, 0.3);
      for (Index i = 0; i < n; ++i) x[i] *= 1.0 + 0.5 * std::sin(2 * M_PI * rate * i / kFs);
      const int passes = int(UniformInt(rng, 1, 4));
      Eigen::VectorXd w = WhiteNoise(n, rng);
      Biquad bp;
      bp.BandPass(Uniform(rng, 300, 1200), 0.8);
      for (Index i = 0; i < n; ++i) w[i] = bp.Run(w[i]);
      const double level = std::sqrt(x.squaredNorm() / double(n));
      for (int p = 0; p < passes; ++p) {
        const double center = Uniform(rng, 0, seconds), width = Uniform(rng, 0.8, 2.5);
        for (Index i = 0; i < n; ++i) {
          const double d = (i / kFs - center) / width;
          x[i] += 1.5 * level * std::exp(-d * d) * w[i];
        }
      }
      break;
    }
    case NoiseKind::kClatter: {
      x = 0.02 * WhiteNoise(n, rng);
      const double rate = Uniform(rng, 3, 12);
      std::exponential_distribution<double> gap(rate);
      for (double t = gap(rng); t < seconds; t += gap(rng)) {
        Resonator r;
        r.Set(Uniform(rng, 800, 4000), Uniform(rng, 30, 200));
        const double decay = Uniform(rng, 0.005, 0.03), amp = Uniform(rng, 0.3, 1.0);
        const Index start = Index(t * kFs), len = Index(6 * decay * kFs);
        std::normal_distribution<double> gg(0.0, 1.0);
        for (Index i = 0; i < len && start + i < n; ++i)
          x[start + i] += amp * r.Run(gg(rng) * std::exp(-double(i) / (decay * kFs))) * 20.0;
      }
      break;
    }
    case NoiseKind::kRain: {
      x = WhiteNoise(n, rng);
      Biquad hp;
      hp.HighPass(Uniform(rng, 1000, 3000), 0.707);
      for (Index i = 0; i < n; ++i) x[i] = hp.Run(x[i]) * 0.3;
      const double rate = Uniform(rng, 200, 800);
      std::exponential_distribution<double> gap(rate);
      for (double t = gap(rng); t < seconds; t += gap(rng)) {
        const Index start = Index(t * kFs);
        const double amp = Uniform(rng, 0.2, 2.0);
        for (Index i = 0; i < 48 && start + i < n; ++i)
          x[start + i] += amp * std::exp(-i / 8.0) * ((i % 2) ? -1.0 : 1.0);
      }
      break;
    }
    case NoiseKind::kBabble: {
      x = Eigen::VectorXd::Zero(n);
      const int talkers = int(UniformInt(rng, 5, 8));
      for (int k = 0; k < talkers; ++k) x += SynthSpeech(RandomSpeaker(rng), seconds, rng).samples;
      break;
    }
  }
  NormalizeRms(x, std::pow(10.0, -25.0 / 20.0));
  return Waveform(std::move(x));
}

std::string DemoCorpusSpec::Describe() const {
  std::ostringstream s;
  s << "format=" << kCorpusFormat << " speakers=" << speakers
    << " utterances_per_speaker=" << utterances_per_speaker << " utterance_s=" << utterance_s
    << " noise_files=" << noise_files << " noise_s=" << noise_s << " seed=" << seed;
  return s.str();
}

DemoCorpus GenerateDemoCorpus(const std::filesystem::path& dir, const DemoCorpusSpec& spec) {
  if (spec.speakers < 1 || spec.utterances_per_speaker < 1 || spec.noise_files < 1)
    throw Error(Errc::kInvalidConfig, "demo corpus needs speakers, utterances and noise files");
  DemoCorpus c;
  c.speech_dir = dir / "speech";
  c.noise_dir = dir / "noise";
  const auto stamp = dir / "corpus.stamp";
  {
    std::ifstream in(stamp);
    std::string line;
    if (in && std::getline(in, line) && line == spec.Describe()) {
      c.speech = ScanWavDir(c.speech_dir);
      c.noise = ScanWavDir(c.noise_dir);
      if (c.speech.size() == std::size_t(spec.speakers * spec.utterances_per_speaker) &&
          c.noise.size() == std::size_t(spec.noise_files))
        return c;
    }
  }
  std::filesystem::remove_all(c.speech_dir);
  std::filesystem::remove_all(c.noise_dir);
  std::filesystem::create_directories(c.speech_dir);
  std::filesystem::create_directories(c.noise_dir);
  c.speech.clear();
  c.noise.clear();
  char name[64];
  for (int s = 0; s < spec.speakers; ++s) {
    Rng spk_rng(DeriveSeed(spec.seed, {1, std::uint64_t(s)}));
    const SpeakerProfile spk = RandomSpeaker(spk_rng);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng(DeriveSeed(spec.seed, {2, std::uint64_t(s), std::uint64_t(u)}));
      std::snprintf(name, sizeof name, "spk%03d_utt%02d.wav", s, u);
      WriteWav(c.speech_dir / name, SynthSpeech(spk, spec.utterance_s, rng));
      c.speech.push_back(c.speech_dir / name);
    }
  }
  for (int k = 0; k < spec.noise_files; ++k) {
    Rng rng(DeriveSeed(spec.seed, {3, std::uint64_t(k)}));
    const auto kind = NoiseKind(k % kNumNoiseKinds);
    const std::string kind_name(NoiseKindName(kind));
    std::snprintf(name, sizeof name, "noise_%03d_%s.wav", k, kind_name.c_str());
    std::filesystem::create_directories(c.noise_dir / kind_name);
    WriteWav(c.noise_dir / kind_name / name, SynthNoise(kind, spec.noise_s, rng));
    c.noise.push_back(c.noise_dir / kind_name / name);
  }
  std::ofstream(stamp, std::ios::trunc) << spec.Describe() << "\n";
  return c;
}

}  // namespace maskgru
