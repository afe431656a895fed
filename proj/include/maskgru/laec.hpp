// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Linear acoustic echo cancellation: delay pre-alignment followed by a
// frequency-domain partitioned-block NLMS filter (overlap-save, gradient
// constrained).

#ifndef MASKGRU_LAEC_HPP_
#define MASKGRU_LAEC_HPP_

#include <vector>

#include "maskgru/dsp.hpp"

namespace maskgru {

struct LaecConfig {
  int taps_per_block = 1024;
  int blocks = 9;               // 9 x 1024 = 9216 taps = 576 ms
  double step_size = 0.5;       // in (0, 2)
  double regularization = 1e-6; // relative to mean per-bin reference power
  double pause_regularization = 1.0;  // relative to its 2 s running average
  double proportionate = 0.9;   // IPNLMS alpha: -1 uniform, towards 1 proportionate
  int delay_search_ms = 500;
  double double_talk_ratio = 2.0;  // residual/prediction power that halves the step
  int align_margin = 128;       // samples kept in front of the estimated delay
  double erle_warmup_s = 1.0;

  Index coverage_samples() const { return Index(taps_per_block) * blocks; }
  void Validate() const;
};

struct DelayEstimate {
  Index samples = 0;
  double peak_ncc = 0.0;
  bool confident = false;  // peak_ncc >= 0.1
};

struct LaecResult {
  Waveform out;            // mic - echo_estimate
  Waveform echo_estimate;
  Index estimated_delay_samples = 0;
  bool delay_confident = false;
  double erle_db = 0.0;    // over far-end-active blocks after warm-up
  Index guard_events = 0;  // blocks where the divergence guard fired
};

// Lag in [0, max_ms] maximizing the normalized cross-correlation between
// mic(t) and farend(t - lag).
DelayEstimate EstimateDelay(const Waveform& mic, const Waveform& farend, int max_ms = 500);

LaecResult Cancel(const Waveform& mic, const Waveform& farend, const LaecConfig& cfg = {});

// 10 log10(P_mic / P_out) over samples where `echo_only` is set.
double Erle(const Waveform& mic, const Waveform& out, const std::vector<bool>& echo_only);

}  // namespace maskgru

#endif  // MASKGRU_LAEC_HPP_
