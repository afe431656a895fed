// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Streaming enhancement pipeline and test-set evaluation reports.

#ifndef MASKGRU_EVALUATE_HPP_
#define MASKGRU_EVALUATE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskgru/checkpoint.hpp"
#include "maskgru/dsp.hpp"
#include "maskgru/laec.hpp"
#include "maskgru/objectives.hpp"
#include "maskgru/trainer.hpp"

namespace maskgru {

struct EnhanceResult {
  Waveform out;      // same length as the input
  Waveform primary;  // the masked channel: mic, or the LAEC output
  Mask mask;
  bool used_laec = false;
  double seconds = 0.0;
  double realtime_factor = 0.0;
};

// Runs a checkpoint frame by frame: optional LAEC, STFT, streaming network
// steps, mask application to the primary channel, inverse STFT.
class Enhancer {
 public:
  explicit Enhancer(Checkpoint ckpt, LaecConfig laec = {}, StftConfig stft = {});

  TrainTask task() const { return task_; }
  int channels() const { return ckpt_.params.arch.channels; }
  const Checkpoint& checkpoint() const { return ckpt_; }

  // Throws ConfigMismatch if the presence of `farend` contradicts the
  // checkpoint's input layout.
  EnhanceResult Run(const Waveform& mic, const Waveform* farend = nullptr) const;

 private:
  Checkpoint ckpt_;
  TrainTask task_;
  LaecConfig laec_;
  StftConfig stft_;
};

// Applies the projection-target mask computed from the clean reference.
Waveform OracleEnhance(const Waveform& mic, const Waveform& clean,
                       ProjectionMode mode = ProjectionMode::kPerBinComplex,
                       const StftConfig& stft = {});

enum class EvalMode { kCheckpoint, kPassthrough, kLaecOnly, kOracle };

std::string_view EvalModeName(EvalMode m);
EvalMode ParseEvalMode(std::string_view s);

struct CaseMetrics {
  std::string name;
  std::string tag;
  double snr_db = 0.0;
  double stoi = 0.0;
  double estoi = 0.0;
  double si_sdr_db = 0.0;
  double seg_snr_db = 0.0;
};

struct MetricAggregate {
  Index count = 0;
  double stoi = 0.0;
  double estoi = 0.0;
  double si_sdr_db = 0.0;
  double seg_snr_db = 0.0;
};

struct MetricReport {
  std::string mode;
  std::vector<CaseMetrics> cases;
  MetricAggregate low;      // snr < 0 dB
  MetricAggregate high;     // snr >= 0 dB
  MetricAggregate overall;
};

CaseMetrics ScoreCase(const Waveform& clean, const Waveform& processed);

// Recomputes the Low/High/overall means from `cases`.
void Aggregate(MetricReport& report);

struct EvalOptions {
  EvalMode mode = EvalMode::kPassthrough;
  std::optional<std::filesystem::path> checkpoint;
  LaecConfig laec;
  ProjectionMode oracle_projection = ProjectionMode::kPerBinComplex;
  std::optional<std::filesystem::path> write_outputs;  // enhanced wavs per case
};

MetricReport Evaluate(const std::filesystem::path& testset_dir, const EvalOptions& opts);

// Aligned table with STOI Low, STOI High, STOI, ESTOI, SI-SDR, SegSNR.
std::string FormatReport(const MetricReport& report);
// One row per case plus aggregate rows, comma-delimited.
void WriteReportCsv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace maskgru

#endif  // MASKGRU_EVALUATE_HPP_
