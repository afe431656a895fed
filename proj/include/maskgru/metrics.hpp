// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Intrusive objective measures: STOI, extended STOI, SI-SDR, segmental SNR.

#ifndef MASKGRU_METRICS_HPP_
#define MASKGRU_METRICS_HPP_

#include "maskgru/dsp.hpp"

namespace maskgru {

// Short-time objective intelligibility (third-octave bands, 384 ms
// segments, clipped correlation), computed at 10 kHz after resampling.
// Clipped to [0, 1]. Throws TooShort for clips under 1 s.
double Stoi(const Waveform& clean, const Waveform& processed);

// Extended STOI (row/column-normalized spectral correlation).
double Estoi(const Waveform& clean, const Waveform& processed);

// Scale-invariant SDR in dB, clamped to [-60, 60].
double SiSdr(const Waveform& clean, const Waveform& processed);

// Mean of per-frame SNRs (512-sample frames, hop 256) clamped to [-10, 35];
// error-free frames score the upper clamp.
double SegSnr(const Waveform& clean, const Waveform& processed);

// Polyphase FIR resampling by up/down with a Kaiser-windowed sinc.
Eigen::VectorXd ResamplePoly(const Eigen::VectorXd& x, int up, int down);

}  // namespace maskgru

#endif  // MASKGRU_METRICS_HPP_
