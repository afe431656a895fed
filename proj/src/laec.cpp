// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/laec.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>

#include <unsupported/Eigen/FFT>

#include "maskgru/error.hpp"

namespace maskgru {

using cd = std::complex<double>;

void LaecConfig::Validate() const {
  if (taps_per_block < 16 || (taps_per_block & (taps_per_block - 1)) != 0)
    throw Error(Errc::kInvalidConfig, "taps_per_block must be a power of two >= 16");
  if (blocks < 1) throw Error(Errc::kInvalidConfig, "blocks must be positive");
  if (coverage_samples() < Index(0.56 * kSampleRate))
    throw Error(Errc::kInvalidConfig, "filter covers " +
                                          std::to_string(coverage_samples()) +
                                          " samples, need >= 8960 (560 ms)");
  if (!(step_size > 0.0 && step_size < 2.0))
    throw Error(Errc::kInvalidConfig, "step_size must lie in (0, 2)");
  if (!(regularization > 0.0))
    throw Error(Errc::kInvalidConfig, "regularization must be positive");
  if (!(proportionate >= -1.0 && proportionate < 1.0))
    throw Error(Errc::kInvalidConfig, "proportionate must lie in [-1, 1)");
  if (!(pause_regularization >= 0.0))
    throw Error(Errc::kInvalidConfig, "pause_regularization must be >= 0");
  if (delay_search_ms < 0 || delay_search_ms > 500)
    throw Error(Errc::kInvalidConfig, "delay_search_ms must lie in [0, 500]");
}

DelayEstimate EstimateDelay(const Waveform& mic, const Waveform& farend, int max_ms) {
  if (mic.size() < kSampleRate || farend.size() < kSampleRate)
    throw Error(Errc::kInvalidInput, "delay estimation needs at least 1 s of audio");
  if (std::sqrt(MeanSquare(farend.samples)) <= 1e-8)
    throw Error(Errc::kDegenerateSignal, "far-end signal is silent");

  const Index n = std::max(mic.size(), farend.size());
  const Index max_lag = std::min<Index>(n - 1, Index(max_ms) * kSampleRate / 1000);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), f = Eigen::VectorXd::Zero(n);
  m.head(mic.size()) = mic.samples;
  f.head(farend.size()) = farend.samples;

  Index nfft = 1;
  while (nfft < n + max_lag + 1) nfft <<= 1;
  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  for (Index i = 0; i < n; ++i) a[i] = m[i], b[i] = f[i];
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cd> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= std::conj(fb[k]);
  std::vector<double> xc;
  fft.inv(xc, fa, nfft);

  // energy of mic over [l, n) and of farend over [0, n - l)
  Eigen::VectorXd mic_suffix(n + 1), far_prefix(n + 1);
  mic_suffix[n] = 0.0;
  for (Index i = n - 1; i >= 0; --i) mic_suffix[i] = mic_suffix[i + 1] + m[i] * m[i];
  far_prefix[0] = 0.0;
  for (Index i = 0; i < n; ++i) far_prefix[i + 1] = far_prefix[i] + f[i] * f[i];

  DelayEstimate best;
  best.peak_ncc = -2.0;
  for (Index lag = 0; lag <= max_lag; ++lag) {
    const double denom = std::sqrt(mic_suffix[lag] * far_prefix[n - lag]);
    const double ncc = denom > 1e-20 ? xc[lag] / denom : 0.0;
    if (ncc > best.peak_ncc) {
      best.peak_ncc = ncc;
      best.samples = lag;
    }
  }
  best.confident = best.peak_ncc >= 0.1;
  return best;
}

double Erle(const Waveform& mic, const Waveform& out, const std::vector<bool>& echo_only) {
  if (mic.size() != out.size() || Index(echo_only.size()) != mic.size())
    throw Error(Errc::kShapeError, "Erle: length mismatch");
  double pm = 0.0, po = 0.0;
  Index count = 0;
  for (Index i = 0; i < mic.size(); ++i) {
    if (!echo_only[i]) continue;
    pm += mic.samples[i] * mic.samples[i];
    po += out.samples[i] * out.samples[i];
    ++count;
  }
  if (count == 0) throw Error(Errc::kDegenerateSignal, "ERLE mask selects no samples");
  if (pm <= 0.0) throw Error(Errc::kDegenerateSignal, "mic is silent over the ERLE mask");
  return 10.0 * std::log10(pm / std::max(po, 1e-300));
}

namespace {

// Restores out = mic over any 100 ms window whose output power exceeds 4x
// the input power; repeats until no window violates the bound.
Index ApplyPowerGuard(const Eigen::VectorXd& mic, Eigen::VectorXd& out) {
  const Index n = mic.size();
  const Index win = kSampleRate / 10;
  if (n < win) return 0;
  Index events = 0;
  for (int pass = 0; pass < 64; ++pass) {
    Eigen::VectorXd pm(n + 1), po(n + 1);
    pm[0] = po[0] = 0.0;
    for (Index i = 0; i < n; ++i) {
      pm[i + 1] = pm[i] + mic[i] * mic[i];
      po[i + 1] = po[i] + out[i] * out[i];
    }
    bool violated = false;
    for (Index s = 0; s + win <= n; ++s) {
      const double in_p = pm[s + win] - pm[s];
      const double out_p = po[s + win] - po[s];
      if (out_p > 4.0 * in_p + 1e-18) {
        out.segment(s, win) = mic.segment(s, win);
        violated = true;
        ++events;
        s += win - 1;
      }
    }
    if (!violated) break;
  }
  return events;
}

}  // namespace

LaecResult Cancel(const Waveform& mic_in, const Waveform& farend_in, const LaecConfig& cfg) {
  cfg.Validate();
  const Index n = std::max(mic_in.size(), farend_in.size());
  Eigen::VectorXd mic = Eigen::VectorXd::Zero(n), far = Eigen::VectorXd::Zero(n);
  mic.head(mic_in.size()) = mic_in.samples;
  far.head(farend_in.size()) = farend_in.samples;

  LaecResult res;
  const bool far_silent = far.size() == 0 || far.cwiseAbs().maxCoeff() == 0.0;
  if (far_silent) {
    res.out = Waveform(mic);
    res.echo_estimate = Waveform::Zeros(n);
    return res;
  }

  Index shift = 0;
  if (n >= kSampleRate && std::sqrt(MeanSquare(far)) > 1e-8) {
    const DelayEstimate d = EstimateDelay(Waveform(mic), Waveform(far), cfg.delay_search_ms);
    res.estimated_delay_samples = d.samples;
    res.delay_confident = d.confident;
    if (d.confident) shift = std::max<Index>(0, d.samples - cfg.align_margin);
  }
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(n);
  if (shift < n) ref.tail(n - shift) = far.head(n - shift);

  const int L = cfg.taps_per_block;
  const int N = 2 * L;
  const int K = cfg.blocks;
  const int bins = L + 1;
  const Index num_blocks = (n + L - 1) / L;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::deque<Eigen::ArrayXcd> hist;  // newest first
  std::vector<Eigen::ArrayXcd> weights(K, Eigen::ArrayXcd::Zero(bins));
  std::vector<double> tbuf(N, 0.0), tout;
  std::vector<cd> fbuf;

  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_blocks * L);
  Eigen::VectorXd padded_mic = Eigen::VectorXd::Zero(num_blocks * L);
  padded_mic.head(n) = mic;
  Eigen::VectorXd padded_ref = Eigen::VectorXd::Zero((num_blocks + 1) * L);
  padded_ref.segment(L, n) = ref;

  auto to_time = [&](const Eigen::ArrayXcd& spec) {
    fbuf.assign(spec.data(), spec.data() + bins);
    fft.inv(tout, fbuf, N);
    return Eigen::Map<const Eigen::VectorXd>(tout.data(), N);
  };
  auto to_freq = [&](const std::vector<double>& t) {
    fft.fwd(fbuf, t);
    return Eigen::Map<const Eigen::ArrayXcd>(fbuf.data(), bins).eval();
  };

  // slow (2 s) average of the per-bin reference power
  double ref_power = 0.0;
  const double ref_alpha = double(L) / (2.0 * kSampleRate);
  for (Index b = 0; b < num_blocks; ++b) {
    // previous and current reference blocks
    for (int i = 0; i < N; ++i) tbuf[i] = padded_ref[b * L + i];
    hist.push_front(to_freq(tbuf));
    if (Index(hist.size()) > K) hist.pop_back();

    Eigen::ArrayXcd y_spec = Eigen::ArrayXcd::Zero(bins);
    Eigen::ArrayXd power = Eigen::ArrayXd::Zero(bins);
    for (std::size_t k = 0; k < hist.size(); ++k) {
      y_spec += weights[k] * hist[k];
      power += hist[k].abs2();
    }
    const Eigen::VectorXd y = to_time(y_spec).tail(L);
    const auto d = padded_mic.segment(b * L, L);
    const Eigen::VectorXd e = d - y;

    const double pe = e.squaredNorm(), pd = d.squaredNorm(), py = y.squaredNorm();
    if (pe > 4.0 * pd + 1e-18) {
      // the estimate makes this block louder: pass the mic through, keep adapting
      out.segment(b * L, L) = d;
      ++res.guard_events;
    } else {
      out.segment(b * L, L) = e;
    }

    const double mean_power = power.mean();
    if (mean_power <= 0.0) continue;
    ref_power = ref_power > 0.0 ? ref_power + ref_alpha * (mean_power - ref_power) : mean_power;
    double mu = cfg.step_size;
    if (pe > cfg.double_talk_ratio * py) mu *= 0.5;

    // IPNLMS partition gains, mean 1
    const std::size_t parts = hist.size();
    std::vector<double> gain(parts, 1.0), norm(parts);
    double total = 0.0;
    for (std::size_t k = 0; k < parts; ++k) total += norm[k] = std::sqrt(weights[k].abs2().sum());
    if (total > 0.0)
      for (std::size_t k = 0; k < parts; ++k)
        gain[k] = (1.0 - cfg.proportionate) / 2.0 +
                  (1.0 + cfg.proportionate) * double(parts) * norm[k] / (2.0 * total);
    Eigen::ArrayXd weighted = Eigen::ArrayXd::Zero(bins);
    for (std::size_t k = 0; k < parts; ++k) weighted += gain[k] * hist[k].abs2();

    std::fill(tbuf.begin(), tbuf.begin() + L, 0.0);
    for (int i = 0; i < L; ++i) tbuf[L + i] = e[i];
    const Eigen::ArrayXcd err_spec = to_freq(tbuf);
    // the ref_power floor keeps near-end energy from driving the filter in far-end pauses
    const Eigen::ArrayXd inv_power =
        1.0 / (weighted + cfg.pause_regularization * ref_power +
               cfg.regularization * mean_power + 1e-20);

    for (std::size_t k = 0; k < parts; ++k) {
      if (hist[k].abs2().maxCoeff() == 0.0) continue;
      const Eigen::ArrayXcd grad = (mu * gain[k]) * hist[k].conjugate() * err_spec * inv_power;
      // gradient constraint: keep the causal half of the time-domain update
      const Eigen::VectorXd g = to_time(grad);
      for (int i = 0; i < L; ++i) tbuf[i] = g[i];
      std::fill(tbuf.begin() + L, tbuf.end(), 0.0);
      weights[k] += to_freq(tbuf);
    }
  }

  Eigen::VectorXd out_n = out.head(n);
  res.guard_events += ApplyPowerGuard(mic, out_n);
  res.out = Waveform(out_n);
  res.echo_estimate = Waveform(mic - out_n);

  // far-end-active blocks (delay aligned), after warm-up
  const Index warm = Index(cfg.erle_warmup_s * kSampleRate);
  const Index delay = res.delay_confident ? res.estimated_delay_samples : 0;
  Eigen::VectorXd aligned = Eigen::VectorXd::Zero(n);
  if (delay < n) aligned.tail(n - delay) = far.head(n - delay);
  std::vector<double> block_power(num_blocks, 0.0);
  for (Index b = 0; b < num_blocks; ++b) {
    const Index s = b * L, len = std::min<Index>(L, n - s);
    block_power[b] = aligned.segment(s, len).squaredNorm() / double(len);
  }
  const double max_power = *std::max_element(block_power.begin(), block_power.end());
  std::vector<bool> mask(n, false);
  bool any = false;
  for (Index b = 0; b < num_blocks; ++b) {
    if (max_power <= 0.0 || block_power[b] < max_power * 1e-3) continue;
    for (Index i = b * L; i < std::min<Index>(n, (b + 1) * L); ++i)
      if (i >= warm) mask[i] = any = true;
  }
  if (any && mic.cwiseAbs().maxCoeff() > 0.0) {
    try {
      res.erle_db = Erle(Waveform(mic), res.out, mask);
    } catch (const Error&) {
      res.erle_db = 0.0;
    }
  }
  return res;
}

}  // namespace maskgru
