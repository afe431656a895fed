// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "maskgru/error.hpp"

namespace maskgru {
namespace {

constexpr int kStoiRate = 10000;
constexpr int kFrameLen = 256;
constexpr int kFftSize = 512;
constexpr int kNumBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegment = 30;        // frames per 384 ms segment
constexpr double kBeta = -15.0;     // lower signal-to-distortion bound
constexpr double kDynRange = 40.0;  // silent-frame removal range
constexpr double kEps = std::numeric_limits<double>::epsilon();

void RequireEqualLength(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size())
    throw Error(Errc::kShapeError, "metric inputs differ in length");
}

// Symmetric Hann of length n (numpy hanning(n + 2)[1:-1]).
Eigen::VectorXd InnerHann(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
  return w;
}

// Drops frames of `x` more than 40 dB below its loudest frame, from both
// signals, then overlap-adds the survivors.
void RemoveSilentFrames(Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const int hop = kFrameLen / 2;
  const Eigen::VectorXd w = InnerHann(kFrameLen);
  std::vector<Index> starts;
  for (Index i = 0; i < x.size() - kFrameLen; i += hop) starts.push_back(i);
  std::vector<double> energy(starts.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < starts.size(); ++f) {
    energy[f] = 20.0 * std::log10(
                           (x.segment(starts[f], kFrameLen).cwiseProduct(w)).norm() + kEps);
    best = std::max(best, energy[f]);
  }
  std::vector<Index> kept;
  for (std::size_t f = 0; f < starts.size(); ++f)
    if (best - kDynRange - energy[f] < 0) kept.push_back(starts[f]);
  const Index len = kept.empty() ? 0 : Index(kept.size() - 1) * hop + kFrameLen;
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(len), ys = Eigen::VectorXd::Zero(len);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    xs.segment(Index(k) * hop, kFrameLen) += x.segment(kept[k], kFrameLen).cwiseProduct(w);
    ys.segment(Index(k) * hop, kFrameLen) += y.segment(kept[k], kFrameLen).cwiseProduct(w);
  }
  x = std::move(xs);
  y = std::move(ys);
}

// bands x frames third-octave envelope.
Eigen::MatrixXd ThirdOctaveEnvelope(const Eigen::VectorXd& x) {
  static const Eigen::MatrixXd obm = [] {
    const int bins = kFftSize / 2 + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kNumBands, bins);
    for (int k = 0; k < kNumBands; ++k) {
      const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
      const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
      auto nearest = [bins](double f) {
        int best = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (int b = 0; b < bins; ++b) {
          const double d = std::abs(double(b) * kStoiRate / kFftSize - f);
          if (d < dist) dist = d, best = b;
        }
        return best;
      };
      const int lo_bin = nearest(lo), hi_bin = nearest(hi);
      for (int b = lo_bin; b < hi_bin; ++b) m(k, b) = 1.0;
    }
    return m;
  }();

  const int hop = kFrameLen / 2;
  const Eigen::VectorXd w = InnerHann(kFrameLen);
  std::vector<Index> starts;
  for (Index i = 0; i < x.size() - kFrameLen; i += hop) starts.push_back(i);
  Eigen::MatrixXd power(kFftSize / 2 + 1, Index(starts.size()));
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(kFftSize, 0.0);
  std::vector<std::complex<double>> spec;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    for (int i = 0; i < kFrameLen; ++i) frame[i] = x[starts[f] + i] * w[i];
    fft.fwd(spec, frame);
    for (int b = 0; b <= kFftSize / 2; ++b) power(b, Index(f)) = std::norm(spec[b]);
  }
  return (obm * power).cwiseSqrt();
}

struct Envelopes {
  Eigen::MatrixXd x, y;
};

Envelopes Prepare(const Waveform& clean, const Waveform& processed) {
  RequireEqualLength(clean, processed);
  RequireSampleRate(clean);
  RequireSampleRate(processed);
  if (clean.size() < kSampleRate)
    throw Error(Errc::kTooShort, "intelligibility metrics need at least 1 s");
  Eigen::VectorXd x = ResamplePoly(clean.samples, 5, 8);
  Eigen::VectorXd y = ResamplePoly(processed.samples, 5, 8);
  RemoveSilentFrames(x, y);
  if (x.size() <= kFrameLen) return {};
  return {ThirdOctaveEnvelope(x), ThirdOctaveEnvelope(y)};
}

}  // namespace

Eigen::VectorXd ResamplePoly(const Eigen::VectorXd& x, int up, int down) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return x;
  const int max_rate = std::max(up, down);
  const int half_len = 10 * max_rate;
  const int taps = 2 * half_len + 1;
  const double cutoff = 1.0 / max_rate;
  const double beta = 5.0;
  Eigen::VectorXd h(taps);
  for (int n = 0; n < taps; ++n) {
    const double t = n - half_len;
    const double arg = M_PI * cutoff * t;
    const double sinc = t == 0 ? 1.0 : std::sin(arg) / arg;
    const double r = 2.0 * n / (taps - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                          std::cyl_bessel_i(0.0, beta);
    h[n] = cutoff * sinc * kaiser;
  }
  h *= up / h.sum();

  const Index n = x.size();
  const Index out_len = (n * up + down - 1) / down;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(out_len);
  for (Index m = 0; m < out_len; ++m) {
    const Index j0 = m * down + half_len;  // index into the zero-stuffed signal
    double acc = 0.0;
    // taps k with (j0 - k) divisible by up and inside the signal
    for (Index k = j0 % up; k < taps; k += up) {
      const Index src = (j0 - k) / up;
      if (src >= 0 && src < n) acc += h[k] * x[src];
    }
    y[m] = acc;
  }
  return y;
}

double Stoi(const Waveform& clean, const Waveform& processed) {
  const Envelopes e = Prepare(clean, processed);
  const Index frames = e.x.cols();
  if (frames < kSegment) return 1e-5;
  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  Index count = 0;
  for (Index m = kSegment; m <= frames; ++m) {
    for (int b = 0; b < kNumBands; ++b) {
      Eigen::VectorXd xs = e.x.block(b, m - kSegment, 1, kSegment).transpose();
      Eigen::VectorXd ys = e.y.block(b, m - kSegment, 1, kSegment).transpose();
      const double alpha = xs.norm() / (ys.norm() + kEps);
      Eigen::VectorXd yp = (ys * alpha).cwiseMin(xs * (1.0 + clip));
      yp.array() -= yp.mean();
      xs.array() -= xs.mean();
      yp /= yp.norm() + kEps;
      xs /= xs.norm() + kEps;
      total += xs.dot(yp);
      ++count;
    }
  }
  return std::clamp(total / double(count), 0.0, 1.0);
}

double Estoi(const Waveform& clean, const Waveform& processed) {
  const Envelopes e = Prepare(clean, processed);
  const Index frames = e.x.cols();
  if (frames < kSegment) return 1e-5;
  auto normalize = [](Eigen::MatrixXd s) {
    // rows = bands, cols = frames; rows over time, then columns over bands
    s.colwise() -= s.rowwise().mean();
    for (Index r = 0; r < s.rows(); ++r) s.row(r) /= s.row(r).norm() + kEps;
    s.rowwise() -= s.colwise().mean();
    for (Index c = 0; c < s.cols(); ++c) s.col(c) /= s.col(c).norm() + kEps;
    return s;
  };
  double total = 0.0;
  Index segments = 0;
  for (Index m = kSegment; m <= frames; ++m) {
    const Eigen::MatrixXd xn = normalize(e.x.middleCols(m - kSegment, kSegment));
    const Eigen::MatrixXd yn = normalize(e.y.middleCols(m - kSegment, kSegment));
    total += xn.cwiseProduct(yn).sum() / kSegment;
    ++segments;
  }
  return std::clamp(total / double(segments), 0.0, 1.0);
}

double SiSdr(const Waveform& clean, const Waveform& processed) {
  RequireEqualLength(clean, processed);
  const double ss = clean.samples.squaredNorm();
  if (ss <= 0.0 || processed.samples.squaredNorm() <= 0.0)
    throw Error(Errc::kDegenerateSignal, "SI-SDR of an all-zero signal is undefined");
  const double alpha = clean.samples.dot(processed.samples) / ss;
  const Eigen::VectorXd target = alpha * clean.samples;
  const double noise = (processed.samples - target).squaredNorm();
  const double t = target.squaredNorm();
  if (noise <= 0.0) return 60.0;
  if (t <= 0.0) return -60.0;
  return std::clamp(10.0 * std::log10(t / noise), -60.0, 60.0);
}

double SegSnr(const Waveform& clean, const Waveform& processed) {
  RequireEqualLength(clean, processed);
  constexpr Index kLen = 512, kHop = 256;
  double total = 0.0;
  Index count = 0;
  for (Index s = 0; s + kLen <= clean.size(); s += kHop) {
    const auto c = clean.samples.segment(s, kLen);
    const double sig = c.squaredNorm();
    const double err = (c - processed.samples.segment(s, kLen)).squaredNorm();
    const double snr = err > 0.0 ? 10.0 * std::log10((sig + kEps) / (err + kEps)) : 35.0;
    total += std::clamp(snr, -10.0, 35.0);
    ++count;
  }
  if (count == 0) throw Error(Errc::kTooShort, "segmental SNR needs at least one frame");
  return total / double(count);
}

}  // namespace maskgru
