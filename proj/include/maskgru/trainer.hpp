// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Online-mixing training loop: mixgen -> (optional LAEC) -> STFT ->
// network -> loss, optimized with Adam. Every synthesized item is keyed by
// (seed, step, slot), so a run is reproducible regardless of scheduling.

#ifndef MASKGRU_TRAINER_HPP_
#define MASKGRU_TRAINER_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maskgru/adam.hpp"
#include "maskgru/checkpoint.hpp"
#include "maskgru/dsp.hpp"
#include "maskgru/gru_net.hpp"
#include "maskgru/laec.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/objectives.hpp"

namespace maskgru {

enum class TrainTask { kDns, kAec, kAecLaec };

std::string_view TrainTaskName(TrainTask t);
TrainTask ParseTrainTask(std::string_view s);
inline int ChannelsFor(TrainTask t) { return t == TrainTask::kDns ? 1 : 2; }
inline MixTask MixTaskFor(TrainTask t) { return t == TrainTask::kDns ? MixTask::kDns : MixTask::kAec; }

struct TrainConfig {
  TrainTask task = TrainTask::kDns;
  ArchConfig arch = ArchConfig::Named("GRU-256");
  LossConfig loss;
  ProjectionMode projection = ProjectionMode::kPerBinComplex;
  double lr = 1e-3;
  double lr_decay = 0.98;       // applied once per epoch
  std::int64_t epoch_steps = 1000;
  int batch = 8;
  double seq_seconds = 10.0;
  std::int64_t steps = 1000;
  std::uint64_t seed = 0;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  std::int64_t checkpoint_every = 0;
  std::int64_t val_every = 0;
  int val_items = 8;
  bool fixed_mixture = false;   // reuse item 0 at every step (overfit checks)
  MixSpec mix;                  // SNR/ESR ranges and echo path
  LaecConfig laec;
  StftConfig stft;
  AdamConfig adam;

  void Validate() const;
};

// Network-ready view of one mixture.
struct TrainItem {
  RowMatrix<float> features;  // frames x input_bins raw magnitudes
  Grid<float> target;         // projection target C'
  Grid<float> x_mag;          // masking-channel magnitude
  VadFrames vad;              // from the clean magnitude
  ComplexSpectrogram primary; // masking-channel spectrum
  Waveform primary_wave;      // mic, or the LAEC output
};

// Picks the masking channel for `task` (running LAEC for AEC_LAEC) and
// builds features, target and VAD.
TrainItem PrepareItem(const MixtureCase& c, TrainTask task, ProjectionMode projection,
                      double vad_threshold_db, const LaecConfig& laec = {},
                      const StftConfig& stft = {});

struct Batch {
  RowMatrix<float> features;    // (max_frames * items) x input_bins, time-major
  std::vector<Index> frames;    // valid frames per item; the rest is padding
  std::vector<TrainItem> items;
  Index max_frames() const;
};

Batch MakeBatch(std::vector<TrainItem> items);

struct BatchLoss {
  LossReport<double> report;  // mean over items
  RowMatrix<float> d_mask;    // zero on padded rows
};

// Per-item losses on the valid frames of each item, averaged over items.
BatchLoss EvaluateBatch(const Batch& batch, const RowMatrix<float>& mask, const LossConfig& cfg);

struct TrainLogRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double speech = 0.0;
  double noise = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double wall_s = 0.0;
};

std::string FormatLogRecord(const TrainLogRecord& r);

struct ValRecord {
  std::int64_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  ModelParams<float> params;
  AdamState<float> optimizer;
  std::vector<TrainLogRecord> log;
  std::vector<ValRecord> val;
  std::filesystem::path final_checkpoint;
  std::int64_t last_step = 0;
  bool interrupted = false;
};

struct TrainHooks {
  std::function<void(const TrainLogRecord&)> on_step;
  std::function<void(const ValRecord&)> on_val;
  const std::atomic<bool>* stop = nullptr;  // checked between steps
  std::optional<std::filesystem::path> resume;
};

double LearningRate(const TrainConfig& cfg, std::int64_t step);

CheckpointMeta MetaFor(const TrainConfig& cfg, std::int64_t step);

// Trains for cfg.steps steps (counted from 1, continuing after a resumed
// checkpoint's step). Writes train.log and checkpoints under out_dir when
// it is non-empty. Throws NumericalAbort on a non-finite loss or gradient
// after saving last_good.ckpt.
TrainResult Train(const TrainConfig& cfg, const CorpusSampler& sampler,
                  const std::filesystem::path& out_dir, const TrainHooks& hooks = {});

// Mean loss over cfg.val_items fixed validation-split items.
double ValidationLoss(const TrainConfig& cfg, const CorpusSampler& sampler,
                      const ModelParams<float>& params);

struct GradCheckConfig {
  LossKind loss = LossKind::kEq10Interpreted;
  ProjectionMode projection = ProjectionMode::kPerBinComplex;
  int bins = 8;
  int hidden = 8;
  int frames = 5;
  int channels = 1;
  double h = 1e-5;
  double tolerance = 1e-5;
  std::uint64_t seed = 1;
};

struct GradCheckEntry {
  std::string tensor;
  Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  Index checked = 0;
  bool passed = false;
  std::vector<GradCheckEntry> worst;  // largest errors first
};

// End-to-end central-difference check of loss(network(features)) in double
// precision over every parameter of a tiny network.
GradCheckReport GradCheck(const GradCheckConfig& cfg);

}  // namespace maskgru

#endif  // MASKGRU_TRAINER_HPP_
