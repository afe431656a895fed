// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/evaluate.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maskgru/error.hpp"
#include "maskgru/metrics.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/wav.hpp"

namespace maskgru {

Enhancer::Enhancer(Checkpoint ckpt, LaecConfig laec, StftConfig stft)
    : ckpt_(std::move(ckpt)),
      task_(ParseTrainTask(ckpt_.meta.task)),
      laec_(laec),
      stft_(stft) {
  if (ckpt_.params.arch.output_bins != stft_.bins())
    throw Error(Errc::kConfigMismatch, "checkpoint output bins do not match the STFT");
  RequireChannels(ckpt_, ChannelsFor(task_));
}

EnhanceResult Enhancer::Run(const Waveform& mic, const Waveform* farend) const {
  RequireSampleRate(mic);
  const int ch = channels();
  if (ch == 2 && !farend)
    throw Error(Errc::kConfigMismatch, "checkpoint expects a far-end reference input");
  if (ch == 1 && farend)
    throw Error(Errc::kConfigMismatch, "single-channel checkpoint given a far-end reference");
  if (farend && farend->size() != mic.size())
    throw Error(Errc::kShapeError, "mic and far-end lengths differ");

  const auto t0 = std::chrono::steady_clock::now();
  EnhanceResult r;
  r.primary = mic;
  if (task_ == TrainTask::kAecLaec) {
    r.primary = Cancel(mic, *farend, laec_).out;
    r.used_laec = true;
  }
  const ComplexSpectrogram x = Stft(r.primary, stft_);
  const MagnitudeSpectrogram xm = Magnitude(x);
  std::optional<MagnitudeSpectrogram> fm;
  if (ch == 2) fm = Magnitude(Stft(*farend, stft_));

  const Index bins = xm.bins();
  const auto& params = ckpt_.params;
  GruState<float> state = GruState<float>::Zeros(params.arch.hidden);
  RowVector<float> frame(params.arch.input_bins());
  r.mask = Mask::Constant(xm.frames(), bins, 0.0);
  for (Index t = 0; t < xm.frames(); ++t) {
    frame.leftCols(bins) = xm.data.row(t).cast<float>().matrix();
    if (fm) frame.rightCols(bins) = fm->data.row(t).cast<float>().matrix();
    const RowVector<float> m = ForwardStep<float>(params, frame, state);
    r.mask.data.row(t) = m.cast<double>().array();
  }
  r.out = Istft(ApplyMask(x, r.mask), stft_, mic.size());
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.realtime_factor = mic.duration_s() > 0 ? r.seconds / mic.duration_s() : 0.0;
  return r;
}

Waveform OracleEnhance(const Waveform& mic, const Waveform& clean, ProjectionMode mode,
                       const StftConfig& stft) {
  if (!IsAttainable(mode))
    throw Error(Errc::kAttainabilityViolation, "oracle needs an attainable projection mode");
  const ComplexSpectrogram x = Stft(mic, stft);
  const TargetSpectrogram t = ProjectionTarget(x, Stft(clean, stft), mode);
  return Istft(ApplyMask(x, TargetMask(t, Magnitude(x))), stft, mic.size());
}

std::string_view EvalModeName(EvalMode m) {
  switch (m) {
    case EvalMode::kCheckpoint: return "checkpoint";
    case EvalMode::kPassthrough: return "passthrough";
    case EvalMode::kLaecOnly: return "laec_only";
    case EvalMode::kOracle: return "oracle";
  }
  return "?";
}

EvalMode ParseEvalMode(std::string_view s) {
  for (EvalMode m : {EvalMode::kCheckpoint, EvalMode::kPassthrough, EvalMode::kLaecOnly,
                     EvalMode::kOracle})
    if (s == EvalModeName(m)) return m;
  throw Error(Errc::kInvalidConfig, "unknown evaluation mode '" + std::string(s) + "'");
}

CaseMetrics ScoreCase(const Waveform& clean, const Waveform& processed) {
  CaseMetrics m;
  m.stoi = Stoi(clean, processed);
  m.estoi = Estoi(clean, processed);
  try {
    m.si_sdr_db = SiSdr(clean, processed);
  } catch (const Error& e) {
    if (e.code() != Errc::kDegenerateSignal) throw;
    m.si_sdr_db = -60.0;
  }
  m.seg_snr_db = SegSnr(clean, processed);
  return m;
}

void Aggregate(MetricReport& report) {
  report.low = report.high = report.overall = {};
  auto add = [](MetricAggregate& a, const CaseMetrics& c) {
    ++a.count;
    a.stoi += c.stoi;
    a.estoi += c.estoi;
    a.si_sdr_db += c.si_sdr_db;
    a.seg_snr_db += c.seg_snr_db;
  };
  for (const auto& c : report.cases) {
    add(c.snr_db < 0.0 ? report.low : report.high, c);
    add(report.overall, c);
  }
  for (MetricAggregate* a : {&report.low, &report.high, &report.overall}) {
    if (a->count == 0) continue;
    const double n = double(a->count);
    a->stoi /= n;
    a->estoi /= n;
    a->si_sdr_db /= n;
    a->seg_snr_db /= n;
  }
}

MetricReport Evaluate(const std::filesystem::path& testset_dir, const EvalOptions& opts) {
  std::optional<Enhancer> enhancer;
  if (opts.mode == EvalMode::kCheckpoint) {
    if (!opts.checkpoint) throw Error(Errc::kInvalidConfig, "checkpoint mode needs a checkpoint");
    enhancer.emplace(LoadCheckpoint(*opts.checkpoint), opts.laec);
  }
  MetricReport report;
  report.mode = std::string(EvalModeName(opts.mode));
  for (const auto& dir : ListTestset(testset_dir)) {
    const MixtureCase c = ReadCase(dir);
    Waveform processed;
    switch (opts.mode) {
      case EvalMode::kPassthrough:
        processed = c.mic;
        break;
      case EvalMode::kLaecOnly:
        if (!c.farend) throw Error(Errc::kCorruptTestset, dir.string() + " has no farend.wav");
        processed = Cancel(c.mic, *c.farend, opts.laec).out;
        break;
      case EvalMode::kOracle:
        processed = OracleEnhance(c.mic, c.clean, opts.oracle_projection);
        break;
      case EvalMode::kCheckpoint: {
        const Waveform* ref = enhancer->channels() == 2 ? (c.farend ? &*c.farend : nullptr) : nullptr;
        if (enhancer->channels() == 2 && !ref)
          throw Error(Errc::kConfigMismatch, dir.string() + " has no far-end reference");
        processed = enhancer->Run(c.mic, ref).out;
        break;
      }
    }
    if (opts.write_outputs) {
      std::filesystem::create_directories(*opts.write_outputs);
      WriteWav(*opts.write_outputs / (dir.filename().string() + ".wav"), processed);
    }
    CaseMetrics m = ScoreCase(c.clean, processed);
    m.name = dir.filename().string();
    m.tag = c.tag;
    m.snr_db = c.snr_db;
    report.cases.push_back(std::move(m));
  }
  Aggregate(report);
  return report;
}

std::string FormatReport(const MetricReport& r) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %6s %9s %10s %6s %6s %8s %8s\n", "mode", "cases",
                "STOI Low", "STOI High", "STOI", "ESTOI", "SI-SDR", "SegSNR");
  out << buf;
  auto cell = [](const MetricAggregate& a, double v) {
    char b[16];
    if (a.count == 0)
      std::snprintf(b, sizeof b, "%s", "-");
    else
      std::snprintf(b, sizeof b, "%.3f", v);
    return std::string(b);
  };
  std::snprintf(buf, sizeof buf, "%-12s %6lld %9s %10s %6s %6s %8s %8s\n", r.mode.c_str(),
                static_cast<long long>(r.overall.count), cell(r.low, r.low.stoi).c_str(),
                cell(r.high, r.high.stoi).c_str(), cell(r.overall, r.overall.stoi).c_str(),
                cell(r.overall, r.overall.estoi).c_str(),
                cell(r.overall, r.overall.si_sdr_db).c_str(),
                cell(r.overall, r.overall.seg_snr_db).c_str());
  out << buf;
  return out.str();
}

void WriteReportCsv(const MetricReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kInvalidInput, "cannot write " + path.string());
  out << "case,tag,snr_db,stoi,estoi,si_sdr_db,seg_snr_db\n";
  char buf[256];
  for (const auto& c : r.cases) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", c.name.c_str(),
                  c.tag.c_str(), c.snr_db, c.stoi, c.estoi, c.si_sdr_db, c.seg_snr_db);
    out << buf;
  }
  auto agg = [&](const char* name, const MetricAggregate& a) {
    std::snprintf(buf, sizeof buf, "mean_%s,%s,,%.6f,%.6f,%.6f,%.6f\n", name, name, a.stoi,
                  a.estoi, a.si_sdr_db, a.seg_snr_db);
    out << buf;
  };
  agg("low", r.low);
  agg("high", r.high);
  agg("overall", r.overall);
}

}  // namespace maskgru
