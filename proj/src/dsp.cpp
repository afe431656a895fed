// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/dsp.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "maskgru/error.hpp"

namespace maskgru {

void StftConfig::Validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw Error(Errc::kInvalidConfig, "fft_size must be a power of two");
  if (hop < 1 || hop > fft_size)
    throw Error(Errc::kInvalidConfig, "hop must lie in [1, fft_size]");
}

Eigen::VectorXd MakeWindow(const StftConfig& cfg) {
  const int n = cfg.fft_size;
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    switch (cfg.window) {
      case WindowKind::kHann: w[i] = hann; break;
      case WindowKind::kSqrtHann: w[i] = std::sqrt(hann); break;
      case WindowKind::kRect: w[i] = 1.0; break;
    }
  }
  return w;
}

void RequireSampleRate(const Waveform& w) {
  if (w.sample_rate != kSampleRate)
    throw Error(Errc::kInvalidInput,
                "sample rate " + std::to_string(w.sample_rate) + " != 16000");
}

double MeanSquare(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.size() ? x.squaredNorm() / double(x.size()) : 0.0;
}

namespace {

// Reflect padding without repeating the edge sample; falls back to
// zero padding where the signal is too short to reflect.
Eigen::VectorXd ReflectPad(const Eigen::VectorXd& x, Index pad) {
  const Index n = x.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 2 * pad);
  out.segment(pad, n) = x;
  for (Index i = 1; i <= pad; ++i) {
    if (i < n) {
      out[pad - i] = x[i];
      out[pad + n - 1 + i] = x[n - 1 - i];
    }
  }
  return out;
}

}  // namespace

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg) {
  cfg.Validate();
  if (w.empty()) throw Error(Errc::kInvalidInput, "empty waveform");
  RequireSampleRate(w);

  const int n_fft = cfg.fft_size;
  const Index pad = n_fft / 2;
  const Eigen::VectorXd padded = ReflectPad(w.samples, pad);
  const Eigen::VectorXd window = MakeWindow(cfg);
  const Index frames = cfg.frames_for(w.size());

  ComplexSpectrogram s{ComplexGrid(frames, cfg.bins())};
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec;
  for (Index t = 0; t < frames; ++t) {
    const Index start = t * cfg.hop;
    for (int i = 0; i < n_fft; ++i) {
      const Index k = start + i;
      frame[i] = k < padded.size() ? padded[k] * window[i] : 0.0;
    }
    fft.fwd(spec, frame);
    for (int b = 0; b < cfg.bins(); ++b) s.data(t, b) = spec[b];
  }
  return s;
}

Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg,
               std::optional<Index> length) {
  cfg.Validate();
  if (s.bins() != cfg.bins())
    throw Error(Errc::kConfigMismatch,
                "spectrogram has " + std::to_string(s.bins()) +
                    " bins, config expects " + std::to_string(cfg.bins()));
  const Index frames = s.frames();
  const Index out_len = length.value_or(frames > 0 ? (frames - 1) * cfg.hop : 0);
  if (frames == 0) return Waveform::Zeros(out_len);

  const int n_fft = cfg.fft_size;
  const Index pad = n_fft / 2;
  const Eigen::VectorXd window = MakeWindow(cfg);
  const Index total = (frames - 1) * cfg.hop + n_fft;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(total);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(total);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec(cfg.bins());
  std::vector<double> frame;
  for (Index t = 0; t < frames; ++t) {
    for (int b = 0; b < cfg.bins(); ++b) spec[b] = s.data(t, b);
    fft.inv(frame, spec, n_fft);
    const Index start = t * cfg.hop;
    for (int i = 0; i < n_fft; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  Waveform out = Waveform::Zeros(out_len);
  for (Index i = 0; i < out_len; ++i) {
    const Index k = i + pad;
    if (k < total && norm[k] > 1e-10) out.samples[i] = acc[k] / norm[k];
  }
  return out;
}

MagnitudeSpectrogram Magnitude(const ComplexSpectrogram& s) {
  return MagnitudeSpectrogram{s.data.abs()};
}

ComplexSpectrogram ApplyMask(const ComplexSpectrogram& x, const Mask& p) {
  if (x.frames() != p.frames() || x.bins() != p.bins())
    throw Error(Errc::kShapeError, "mask shape does not match spectrogram");
  if (p.data.size() > 0 &&
      (!p.data.allFinite() || p.data.minCoeff() < 0.0 || p.data.maxCoeff() > 1.0))
    throw Error(Errc::kInvalidMask, "mask values must lie in [0, 1]");
  return ComplexSpectrogram{x.data * p.data.cast<std::complex<double>>()};
}

}  // namespace maskgru
