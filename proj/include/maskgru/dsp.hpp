// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Time-frequency analysis/synthesis and mask application.

#ifndef MASKGRU_DSP_HPP_
#define MASKGRU_DSP_HPP_

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace maskgru {

using Eigen::Index;

inline constexpr int kSampleRate = 16000;

// frames x bins grids are stored row-major so a frame is contiguous.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid = Grid<std::complex<double>>;

struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = kSampleRate;

  Waveform() = default;
  explicit Waveform(Eigen::VectorXd s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}
  static Waveform Zeros(Index n) { return Waveform(Eigen::VectorXd::Zero(n)); }

  Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  double duration_s() const { return double(size()) / sample_rate; }
};

enum class WindowKind { kHann, kSqrtHann, kRect };

struct StftConfig {
  int fft_size = 512;
  int hop = 256;
  WindowKind window = WindowKind::kHann;

  int bins() const { return fft_size / 2 + 1; }
  // center padding extends each side by fft_size / 2 samples
  Index frames_for(Index num_samples) const { return num_samples / hop + 1; }
  double frame_rate(int sample_rate = kSampleRate) const {
    return double(sample_rate) / hop;
  }
  void Validate() const;
};

// Periodic window of length fft_size.
Eigen::VectorXd MakeWindow(const StftConfig& cfg);

struct ComplexSpectrogram {
  ComplexGrid data;
  Index frames() const { return data.rows(); }
  Index bins() const { return data.cols(); }
};

struct MagnitudeSpectrogram {
  Grid<double> data;
  Index frames() const { return data.rows(); }
  Index bins() const { return data.cols(); }
};

// Proportional mask; every entry lies in [0, 1].
struct Mask {
  Grid<double> data;
  Index frames() const { return data.rows(); }
  Index bins() const { return data.cols(); }
  static Mask Constant(Index frames, Index bins, double value) {
    return Mask{Grid<double>::Constant(frames, bins, value)};
  }
};

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg = {});

// Weighted overlap-add inverse. `length` defaults to (frames - 1) * hop.
Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg = {},
               std::optional<Index> length = std::nullopt);

MagnitudeSpectrogram Magnitude(const ComplexSpectrogram& s);

// Scales every complex bin by the mask value, keeping the noisy phase.
ComplexSpectrogram ApplyMask(const ComplexSpectrogram& x, const Mask& p);

double MeanSquare(const Eigen::Ref<const Eigen::VectorXd>& x);

void RequireSampleRate(const Waveform& w);

}  // namespace maskgru

#endif  // MASKGRU_DSP_HPP_
