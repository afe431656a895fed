// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

#include "maskgru/error.hpp"
#include "maskgru/random.hpp"

namespace maskgru {

std::string_view TrainTaskName(TrainTask t) {
  switch (t) {
    case TrainTask::kDns: return "DNS";
    case TrainTask::kAec: return "AEC";
    case TrainTask::kAecLaec: return "AEC_LAEC";
  }
  return "?";
}

TrainTask ParseTrainTask(std::string_view s) {
  if (s == "DNS") return TrainTask::kDns;
  if (s == "AEC") return TrainTask::kAec;
  if (s == "AEC_LAEC") return TrainTask::kAecLaec;
  throw Error(Errc::kInvalidConfig, "unknown task '" + std::string(s) + "'");
}

void TrainConfig::Validate() const {
  arch.Validate();
  if (arch.channels != ChannelsFor(task))
    throw Error(Errc::kConfigMismatch,
                std::string(TrainTaskName(task)) + " needs " + std::to_string(ChannelsFor(task)) +
                    " input channel(s), arch has " + std::to_string(arch.channels));
  if (arch.output_bins != stft.bins())
    throw Error(Errc::kConfigMismatch, "arch output_bins must equal STFT bins");
  if (!(lr > 0)) throw Error(Errc::kInvalidConfig, "lr must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw Error(Errc::kInvalidConfig, "lr_decay must be in (0, 1]");
  if (epoch_steps < 1) throw Error(Errc::kInvalidConfig, "epoch_steps must be >= 1");
  if (batch < 1) throw Error(Errc::kInvalidConfig, "batch must be >= 1");
  if (!(seq_seconds >= 1.0)) throw Error(Errc::kInvalidConfig, "seq_seconds must be >= 1");
  if (steps < 0) throw Error(Errc::kInvalidConfig, "steps must be >= 0");
  if (val_items < 1) throw Error(Errc::kInvalidConfig, "val_items must be >= 1");
  stft.Validate();
  mix.Validate();
  if (task == TrainTask::kAecLaec) laec.Validate();
}

TrainItem PrepareItem(const MixtureCase& c, TrainTask task, ProjectionMode projection,
                      double vad_threshold_db, const LaecConfig& laec, const StftConfig& stft) {
  if (task != TrainTask::kDns && !c.farend)
    throw Error(Errc::kConfigMismatch, "echo task needs a far-end reference");
  TrainItem item;
  item.primary_wave = c.mic;
  if (task == TrainTask::kAecLaec) item.primary_wave = Cancel(c.mic, *c.farend, laec).out;

  item.primary = Stft(item.primary_wave, stft);
  const ComplexSpectrogram clean = Stft(c.clean, stft);
  const MagnitudeSpectrogram xm = Magnitude(item.primary);
  const TargetSpectrogram t = ProjectionTarget(item.primary, clean, projection);
  item.vad = VadFramesOf(Magnitude(clean), vad_threshold_db);
  item.target = t.c_proj.cast<float>();
  item.x_mag = xm.data.cast<float>();

  const Index frames = xm.frames(), bins = xm.bins();
  const int channels = ChannelsFor(task);
  item.features.resize(frames, channels * bins);
  item.features.leftCols(bins) = xm.data.cast<float>().matrix();
  if (channels == 2) {
    const MagnitudeSpectrogram fm = Magnitude(Stft(*c.farend, stft));
    item.features.rightCols(bins) = fm.data.cast<float>().matrix();
  }
  return item;
}

Index Batch::max_frames() const {
  return frames.empty() ? 0 : *std::max_element(frames.begin(), frames.end());
}

Batch MakeBatch(std::vector<TrainItem> items) {
  if (items.empty()) throw Error(Errc::kInvalidInput, "empty batch");
  Batch b;
  const Index n = Index(items.size());
  const Index width = items[0].features.cols();
  for (const auto& it : items) {
    if (it.features.cols() != width) throw Error(Errc::kShapeError, "mixed feature widths in batch");
    b.frames.push_back(it.features.rows());
  }
  const Index t_max = b.max_frames();
  b.features = RowMatrix<float>::Zero(t_max * n, width);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < b.frames[i]; ++t) b.features.row(t * n + i) = items[i].features.row(t);
  b.items = std::move(items);
  return b;
}

BatchLoss EvaluateBatch(const Batch& batch, const RowMatrix<float>& mask, const LossConfig& cfg) {
  const Index n = Index(batch.items.size());
  if (mask.rows() != batch.max_frames() * n)
    throw Error(Errc::kShapeError, "mask rows do not match the batch");
  BatchLoss out;
  out.d_mask = RowMatrix<float>::Zero(mask.rows(), mask.cols());
  for (Index i = 0; i < n; ++i) {
    const TrainItem& it = batch.items[i];
    const Index frames = batch.frames[i];
    Grid<float> p(frames, mask.cols());
    for (Index t = 0; t < frames; ++t) p.row(t) = mask.row(t * n + i).array();
    const VadFrames* vad = cfg.kind == LossKind::kEq10Literal ? nullptr : &it.vad;
    const LossEval<float> e = EvaluateLoss<float>(it.target, it.x_mag, p, cfg, vad);
    out.report.total += double(e.report.total) / double(n);
    out.report.speech_term += double(e.report.speech_term) / double(n);
    out.report.noise_term += double(e.report.noise_term) / double(n);
    for (Index t = 0; t < frames; ++t)
      out.d_mask.row(t * n + i) = (e.grad.row(t) / float(n)).matrix();
  }
  return out;
}

std::string FormatLogRecord(const TrainLogRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "step=%lld loss=%.9g speech=%.9g noise=%.9g grad_norm=%.9g lr=%.9g wall=%.3f",
                static_cast<long long>(r.step), r.loss, r.speech, r.noise, r.grad_norm, r.lr,
                r.wall_s);
  return buf;
}

double LearningRate(const TrainConfig& cfg, std::int64_t step) {
  const std::int64_t epoch = std::max<std::int64_t>(0, step - 1) / cfg.epoch_steps;
  return cfg.lr * std::pow(cfg.lr_decay, double(epoch));
}

CheckpointMeta MetaFor(const TrainConfig& cfg, std::int64_t step) {
  CheckpointMeta m;
  m.task = std::string(TrainTaskName(cfg.task));
  m.loss = std::string(LossKindName(cfg.loss.kind));
  m.projection = std::string(ProjectionModeName(cfg.projection));
  m.vad_threshold_db = cfg.loss.vad_threshold_db;
  m.seed = cfg.seed;
  m.step = step;
  m.extra["batch"] = std::to_string(cfg.batch);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", cfg.seq_seconds);
  m.extra["seq_seconds"] = buf;
  std::snprintf(buf, sizeof buf, "%.17g", cfg.lr);
  m.extra["lr"] = buf;
  return m;
}

namespace {

MixSpec TrainingSpec(const TrainConfig& cfg) {
  MixSpec spec = cfg.mix;
  spec.task = MixTaskFor(cfg.task);
  spec.duration_s = cfg.seq_seconds;
  spec.seed = cfg.seed;
  return spec;
}

Batch SynthesizeBatch(const TrainConfig& cfg, const CorpusSampler& sampler, Split split,
                      std::uint64_t first_index, int count) {
  const MixSpec spec = TrainingSpec(cfg);
  std::vector<TrainItem> items;
  items.reserve(std::size_t(count));
  for (int slot = 0; slot < count; ++slot) {
    const MixtureCase c = SynthesizeCase(sampler, spec, split, first_index + std::uint64_t(slot));
    items.push_back(PrepareItem(c, cfg.task, cfg.projection, cfg.loss.vad_threshold_db, cfg.laec,
                                cfg.stft));
  }
  return MakeBatch(std::move(items));
}

double BatchValLoss(const Batch& b, const ModelParams<float>& params, const LossConfig& loss) {
  const auto fwd = Forward(params, b.features, Index(b.items.size()), false);
  return EvaluateBatch(b, fwd.mask, loss).report.total;
}

bool AllFinite(const ModelParams<float>& g) {
  for (const auto& t : g.Tensors())
    for (Index i = 0; i < t.size(); ++i)
      if (!std::isfinite(t.data[i])) return false;
  return true;
}

}  // namespace

double ValidationLoss(const TrainConfig& cfg, const CorpusSampler& sampler,
                      const ModelParams<float>& params) {
  return BatchValLoss(SynthesizeBatch(cfg, sampler, Split::kVal, 0, cfg.val_items), params,
                      cfg.loss);
}

TrainResult Train(const TrainConfig& cfg, const CorpusSampler& sampler,
                  const std::filesystem::path& out_dir, const TrainHooks& hooks) {
  cfg.Validate();
  if (sampler.manifest().Files(Category::kSpeech, Split::kTrain).empty() ||
      sampler.manifest().Files(Category::kNoise, Split::kTrain).empty())
    throw Error(Errc::kInsufficientCorpus, "training split is empty");

  TrainResult res;
  res.params = InitParams<float>(cfg.arch, DeriveSeed(cfg.seed, {0x1417}));
  res.optimizer = AdamState<float>::Zeros(cfg.arch);
  std::int64_t start = 0;
  if (hooks.resume) {
    Checkpoint ck = LoadCheckpoint(*hooks.resume);
    if (!(ck.params.arch == cfg.arch))
      throw Error(Errc::kConfigMismatch, "resume checkpoint architecture differs from config");
    res.params = std::move(ck.params);
    if (ck.optimizer) res.optimizer = std::move(*ck.optimizer);
    start = ck.meta.step;
  }
  res.last_step = start;

  const bool write = !out_dir.empty();
  std::ofstream log_file;
  if (write) {
    std::filesystem::create_directories(out_dir);
    log_file.open(out_dir / "train.log", hooks.resume ? std::ios::app : std::ios::trunc);
  }
  auto save = [&](const std::string& name, const ModelParams<float>& p, const AdamState<float>& o,
                  std::int64_t step) {
    const auto path = out_dir / name;
    SaveCheckpoint(path, p, MetaFor(cfg, step), &o);
    return path;
  };

  const int B = cfg.batch;
  auto make = [&cfg, &sampler, B](std::int64_t step) {
    const std::uint64_t first = cfg.fixed_mixture ? 0 : std::uint64_t(step - 1) * std::uint64_t(B);
    return SynthesizeBatch(cfg, sampler, Split::kTrain, first, B);
  };
  std::optional<Batch> fixed;
  std::future<Batch> next;
  if (start < cfg.steps) {
    if (cfg.fixed_mixture)
      fixed = make(1);
    else
      next = std::async(std::launch::async, make, start + 1);
  }
  std::optional<Batch> val_batch;

  ModelParams<float> last_good = res.params;
  AdamState<float> last_good_opt = res.optimizer;
  std::int64_t last_good_step = start;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t step = start + 1; step <= cfg.steps; ++step) {
    if (hooks.stop && hooks.stop->load()) {
      res.interrupted = true;
      break;
    }
    Batch owned;
    if (!fixed) {
      owned = next.get();
      if (step < cfg.steps) next = std::async(std::launch::async, make, step + 1);
    }
    const Batch& batch = fixed ? *fixed : owned;

    const auto fwd = Forward(res.params, batch.features, Index(B), true);
    const BatchLoss bl = EvaluateBatch(batch, fwd.mask, cfg.loss);
    ModelParams<float> grads;
    double norm = 0.0;
    const bool loss_ok = std::isfinite(bl.report.total);
    if (loss_ok) {
      grads = Backward(res.params, fwd.cache, bl.d_mask);
      norm = GlobalNorm(grads);
    }
    if (!loss_ok || !std::isfinite(norm) || !AllFinite(grads)) {
      std::string where;
      if (write) where = "; last good checkpoint " + save("last_good.ckpt", last_good, last_good_opt,
                                                          last_good_step).string();
      if (next.valid()) next.wait();
      throw Error(Errc::kNumericalAbort,
                  "non-finite " + std::string(loss_ok ? "gradient" : "loss") + " at step " +
                      std::to_string(step) + " (loss=" + std::to_string(bl.report.total) +
                      ", grad_norm=" + std::to_string(norm) + ")" + where);
    }
    last_good = res.params;
    last_good_opt = res.optimizer;
    last_good_step = step - 1;

    if (cfg.grad_clip_norm > 0 && norm > cfg.grad_clip_norm)
      ScaleInPlace(grads, cfg.grad_clip_norm / norm);
    const double lr = LearningRate(cfg, step);
    AdamStep(res.params, grads, res.optimizer, lr, cfg.adam);
    res.last_step = step;

    TrainLogRecord rec;
    rec.step = step;
    rec.loss = bl.report.total;
    rec.speech = bl.report.speech_term;
    rec.noise = bl.report.noise_term;
    rec.grad_norm = norm;
    rec.lr = lr;
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(rec);
    if (write) log_file << FormatLogRecord(rec) << "\n" << std::flush;
    if (hooks.on_step) hooks.on_step(rec);

    if (write && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      char name[40];
      std::snprintf(name, sizeof name, "ckpt_step%07lld.ckpt", static_cast<long long>(step));
      save(name, res.params, res.optimizer, step);
    }
    if (cfg.val_every > 0 && step % cfg.val_every == 0) {
      if (!val_batch) val_batch = SynthesizeBatch(cfg, sampler, Split::kVal, 0, cfg.val_items);
      const ValRecord v{step, BatchValLoss(*val_batch, res.params, cfg.loss)};
      res.val.push_back(v);
      if (write) log_file << "val step=" << v.step << " loss=" << v.loss << "\n" << std::flush;
      if (hooks.on_val) hooks.on_val(v);
    }
  }
  if (next.valid()) next.wait();
  if (write) res.final_checkpoint = save(res.interrupted ? "interrupted.ckpt" : "final.ckpt",
                                         res.params, res.optimizer, res.last_step);
  return res;
}

namespace {

// Finite-difference reference in extended precision.
using Wide = long double;

Wide GradCheckLoss(const ModelParams<Wide>& p, const RowMatrix<Wide>& features,
                   const Grid<Wide>& target, const Grid<Wide>& x_mag, const LossConfig& lc,
                   const VadFrames& vad) {
  const auto fwd = Forward(p, features, 1, false);
  const Grid<Wide> mask = fwd.mask.array();
  return EvaluateLoss<Wide>(target, x_mag, mask, lc, &vad).report.total;
}

}  // namespace

GradCheckReport GradCheck(const GradCheckConfig& cfg) {
  ArchConfig arch;
  arch.name = "tiny";
  arch.output_bins = cfg.bins;
  arch.hidden = cfg.hidden;
  arch.channels = cfg.channels;
  ModelParams<double> params = InitParams<double>(arch, cfg.seed);
  Rng rng(DeriveSeed(cfg.seed, {0x6c}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& t : params.Tensors())
    if (t.rows == 1)
      for (Index i = 0; i < t.size(); ++i) t.data[i] = 0.1 * normal(rng);

  const Index frames = cfg.frames, bins = cfg.bins;
  ComplexSpectrogram x{ComplexGrid(frames, bins)}, c{ComplexGrid(frames, bins)};
  for (Index i = 0; i < frames; ++i)
    for (Index j = 0; j < bins; ++j) {
      // the last frame is near-silent so the VAD gate has an inactive frame
      const double level = i == frames - 1 ? 1e-4 : 1.0;
      c.data(i, j) = level * std::complex<double>(normal(rng), normal(rng));
      x.data(i, j) = c.data(i, j) + 0.7 * std::complex<double>(normal(rng), normal(rng));
    }
  const Grid<double> x_mag = Magnitude(x).data;
  const Grid<double> target = ProjectionTarget(x, c, cfg.projection).c_proj;
  RowMatrix<double> features(frames, arch.input_bins());
  features.leftCols(bins) = x_mag.matrix();
  if (cfg.channels == 2)
    for (Index i = 0; i < frames; ++i)
      for (Index j = 0; j < bins; ++j) features(i, bins + j) = std::abs(normal(rng));

  LossConfig lc;
  lc.kind = cfg.loss;
  const auto base = Forward(params, features, 1, true);
  // The gate is piecewise constant in P, so it is frozen at the base point.
  const VadFrames vad = cfg.loss == LossKind::kEq10Literal
                            ? VadFramesFrom<double>(x_mag * base.mask.array(), lc.vad_threshold_db)
                            : VadFramesOf(Magnitude(c), lc.vad_threshold_db);
  const Grid<double> base_mask = base.mask.array();
  const LossEval<double> e = EvaluateLoss<double>(target, x_mag, base_mask, lc, &vad);
  const RowMatrix<double> d_mask = e.grad.matrix();
  ModelParams<double> grads = Backward(params, base.cache, d_mask);

  GradCheckReport rep;
  std::vector<GradCheckEntry> all;
  ModelParams<Wide> wide = params.Cast<Wide>();
  const RowMatrix<Wide> wf = features.cast<Wide>();
  const Grid<Wide> wt = target.cast<Wide>(), wx = x_mag.cast<Wide>();
  auto pt = wide.Tensors();
  const auto gt = grads.Tensors();
  const Wide h = cfg.h;
  for (std::size_t k = 0; k < pt.size(); ++k) {
    for (Index i = 0; i < pt[k].size(); ++i) {
      Wide& w = pt[k].data[i];
      const Wide saved = w;
      auto at = [&](Wide offset) {
        w = saved + offset;
        return GradCheckLoss(wide, wf, wt, wx, lc, vad);
      };
      // fourth-order central stencil with step h
      const Wide num_w = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      w = saved;
      const double num = double(num_w);
      const double ana = gt[k].data[i];
      const double denom = std::max({std::abs(ana), std::abs(num), 1e-12});
      all.push_back({pt[k].name, i, ana, num, std::abs(ana - num) / denom});
      ++rep.checked;
    }
  }
  std::sort(all.begin(), all.end(),
            [](const GradCheckEntry& a, const GradCheckEntry& b) { return a.rel_error > b.rel_error; });
  rep.max_rel_error = all.empty() ? 0.0 : all.front().rel_error;
  rep.passed = rep.max_rel_error < cfg.tolerance;
  all.resize(std::min<std::size_t>(all.size(), 5));
  rep.worst = std::move(all);
  return rep;
}

}  // namespace maskgru
