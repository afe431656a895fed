// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "maskgru/checkpoint.hpp"
#include "maskgru/demo_corpus.hpp"
#include "maskgru/evaluate.hpp"
#include "maskgru/wav.hpp"

namespace maskgru {
namespace fs = std::filesystem;

int ExitCodeFor(Errc code) {
  switch (code) {
    case Errc::kInvalidConfig:
    case Errc::kInvalidDelay:
    case Errc::kAttainabilityViolation:
      return kExitConfig;
    case Errc::kInvalidInput:
    case Errc::kUnsupportedFormat:
    case Errc::kCorruptFile:
    case Errc::kDegenerateSignal:
    case Errc::kInsufficientCorpus:
    case Errc::kTooShort:
    case Errc::kCorruptTestset:
      return kExitData;
    case Errc::kConfigMismatch:
    case Errc::kShapeError:
    case Errc::kCorruptCheckpoint:
      return kExitMismatch;
    case Errc::kNumericalAbort:
      return kExitNumerical;
    case Errc::kInvalidMask:
    case Errc::kInvalidState:
      return 1;
  }
  return 1;
}

ArchConfig ArchFromConfig(const Config& cfg, const std::string& section) {
  const std::string name = cfg.GetString(section + ".arch", "GRU-256");
  ArchConfig a;
  if (name == "custom") {
    a.name = "custom";
    a.hidden = int(cfg.GetInt(section + ".hidden", 256));
    a.channels = int(cfg.GetInt(section + ".channels", 1));
  } else {
    a = ArchConfig::Named(name);
  }
  a.ffn_hidden = int(cfg.GetInt(section + ".ffn_hidden", 0));
  a.log_compress = cfg.GetBool(section + ".log_compress", true);
  a.Validate();
  return a;
}

LaecConfig LaecFromConfig(const Config& cfg) {
  LaecConfig l;
  l.taps_per_block = int(cfg.GetInt("laec.taps_per_block", l.taps_per_block));
  l.blocks = int(cfg.GetInt("laec.blocks", l.blocks));
  l.pause_regularization = cfg.GetDouble("laec.pause_regularization", l.pause_regularization);
  l.proportionate = cfg.GetDouble("laec.proportionate", l.proportionate);
  l.step_size = cfg.GetDouble("laec.step_size", l.step_size);
  l.regularization = cfg.GetDouble("laec.regularization", l.regularization);
  l.delay_search_ms = int(cfg.GetInt("laec.delay_search_ms", l.delay_search_ms));
  l.double_talk_ratio = cfg.GetDouble("laec.double_talk_ratio", l.double_talk_ratio);
  l.align_margin = int(cfg.GetInt("laec.align_margin", l.align_margin));
  l.Validate();
  return l;
}

MixSpec MixSpecFromConfig(const Config& cfg, const std::string& section, MixSpec d) {
  const std::string task = cfg.GetString(section + ".task", d.task == MixTask::kDns ? "DNS" : "AEC");
  if (task == "DNS")
    d.task = MixTask::kDns;
  else if (task == "AEC" || task == "AEC_LAEC")
    d.task = MixTask::kAec;
  else
    throw Error(Errc::kInvalidConfig, section + ".task: unknown task '" + task + "'");
  d.snr_lo_db = cfg.GetDouble(section + ".snr_lo_db", d.snr_lo_db);
  d.snr_hi_db = cfg.GetDouble(section + ".snr_hi_db", d.snr_hi_db);
  d.esr_lo_db = cfg.GetDouble(section + ".esr_lo_db", d.esr_lo_db);
  d.esr_hi_db = cfg.GetDouble(section + ".esr_hi_db", d.esr_hi_db);
  d.max_delay_ms = int(cfg.GetInt(section + ".max_delay_ms", d.max_delay_ms));
  d.duration_s = cfg.GetDouble(section + ".duration_s", d.duration_s);
  d.seed = std::uint64_t(cfg.GetInt("seed", std::int64_t(d.seed)));
  d.Validate();
  return d;
}

TrainConfig TrainConfigFromConfig(const Config& cfg) {
  TrainConfig t;
  t.task = ParseTrainTask(cfg.GetString("train.task", "DNS"));
  t.arch = ArchFromConfig(cfg, "train");
  t.loss.kind = ParseLossKind(cfg.GetString("train.loss", "eq10_interpreted"));
  t.loss.vad_threshold_db = cfg.GetDouble("train.vad_threshold_db", -40.0);
  t.projection = ParseProjectionMode(cfg.GetString("train.projection", "per_bin_complex"));
  t.lr = cfg.GetDouble("train.lr", t.lr);
  t.lr_decay = cfg.GetDouble("train.lr_decay", t.lr_decay);
  t.epoch_steps = cfg.GetInt("train.epoch_steps", t.epoch_steps);
  t.batch = int(cfg.GetInt("train.batch", t.batch));
  t.seq_seconds = cfg.GetDouble("train.seq_seconds", t.seq_seconds);
  t.steps = cfg.GetInt("train.steps", t.steps);
  t.seed = std::uint64_t(cfg.GetInt("seed", 0));
  t.grad_clip_norm = cfg.GetDouble("train.grad_clip_norm", t.grad_clip_norm);
  t.checkpoint_every = cfg.GetInt("train.checkpoint_every", t.checkpoint_every);
  t.val_every = cfg.GetInt("train.val_every", t.val_every);
  t.val_items = int(cfg.GetInt("train.val_items", t.val_items));
  t.fixed_mixture = cfg.GetBool("train.fixed_mixture", false);
  MixSpec mix;
  mix.task = MixTaskFor(t.task);
  t.mix = MixSpecFromConfig(cfg, "train", mix);
  if (t.task == TrainTask::kAecLaec) t.laec = LaecFromConfig(cfg);
  t.Validate();
  return t;
}

CorpusManifest ManifestFromConfig(const Config& cfg) {
  std::vector<fs::path> speech, noise;
  if (cfg.GetBool("corpus.demo", false)) {
    DemoCorpusSpec spec;
    spec.seed = std::uint64_t(cfg.GetInt("corpus.demo_seed", std::int64_t(spec.seed)));
    spec.speakers = int(cfg.GetInt("corpus.demo_speakers", spec.speakers));
    spec.utterances_per_speaker =
        int(cfg.GetInt("corpus.demo_utterances", spec.utterances_per_speaker));
    spec.noise_files = int(cfg.GetInt("corpus.demo_noise_files", spec.noise_files));
    const DemoCorpus dc = GenerateDemoCorpus(cfg.GetString("corpus.demo_dir", "demo_corpus"), spec);
    speech = dc.speech;
    noise = dc.noise;
  } else {
    if (!cfg.Has("corpus.speech_dir") || !cfg.Has("corpus.noise_dir"))
      throw Error(Errc::kInvalidConfig, "corpus.speech_dir and corpus.noise_dir are required "
                                        "(or set corpus.demo = true)");
    speech = ScanWavDir(cfg.GetString("corpus.speech_dir", ""));
    noise = ScanWavDir(cfg.GetString("corpus.noise_dir", ""));
  }
  return SplitManifest(std::move(speech), std::move(noise),
                       std::uint64_t(cfg.GetInt("corpus.split_seed", 0)));
}

namespace {

std::atomic<bool> g_stop{false};

extern "C" void OnSigint(int) { g_stop.store(true); }

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = ".";
};

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "Config file (sectioned key = value)");
  sub->add_option("-s,--set", c.overrides, "Override section.key=value (repeatable)");
  sub->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
}

Config LoadConfig(const Common& c) {
  Config cfg = c.config_path.empty() ? Config() : Config::Load(c.config_path);
  cfg.ApplyOverrides(c.overrides);
  return cfg;
}

void Snapshot(const Config& cfg, const fs::path& dir, const std::string& cmd) {
  fs::create_directories(dir);
  cfg.WriteSnapshot(dir / (cmd + ".resolved.ini"));
}

int CmdInfo(const Config& cfg, const std::string& arch_name, std::ostream& out) {
  Config c = cfg;
  if (!arch_name.empty()) c.Set("info.arch", arch_name);
  const ArchConfig a = ArchFromConfig(c, "info");
  const double fps = StftConfig{}.frame_rate();
  const auto params = ParamCount(a);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %.2fM params, %.2g GMAC/s\n", a.name.c_str(),
                double(params) / 1e6, MacsPerSecond(a, fps) / 1e9);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "  channels=%d input_bins=%d hidden=%d output_bins=%d params=%lld "
                "macs_per_frame=%lld frame_rate=%.1f\n",
                a.channels, a.input_bins(), a.hidden, a.output_bins,
                static_cast<long long>(params), static_cast<long long>(MacsPerFrame(a)), fps);
  out << buf;
  return kExitOk;
}

int CmdSynthData(const Config& cfg, const fs::path& out_dir, std::ostream& out) {
  MixSpec spec = MixSpecFromConfig(cfg, "data", MixSpec::DnsTest());
  const auto count = cfg.GetInt("data.count", 50);
  if (count < 0) throw Error(Errc::kInvalidConfig, "data.count must be >= 0");
  const CorpusSampler sampler(ManifestFromConfig(cfg));
  const auto dirs = SynthTestset(sampler, spec, std::size_t(count), out_dir);
  Snapshot(cfg, out_dir, "synth-data");
  std::map<int, int> hist;
  int low = 0;
  for (const auto& d : dirs) {
    const MixtureCase c = ReadCase(d);
    ++hist[int(std::floor(c.snr_db / 5.0)) * 5];
    low += c.tag == "low";
  }
  out << "wrote " << dirs.size() << " cases to " << out_dir.string() << " (low=" << low
      << " high=" << (dirs.size() - std::size_t(low)) << ")\n";
  for (const auto& [lo, n] : hist) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  snr [%+3d, %+3d) dB: %d\n", lo, lo + 5, n);
    out << buf;
  }
  return kExitOk;
}

int CmdTrain(const Config& cfg, const fs::path& out_dir, const std::string& resume,
             std::ostream& out) {
  const TrainConfig tc = TrainConfigFromConfig(cfg);
  const CorpusSampler sampler(ManifestFromConfig(cfg));  // fails before any output exists
  Snapshot(cfg, out_dir, "train");
  TrainHooks hooks;
  hooks.stop = &g_stop;
  const auto log_every = cfg.GetInt("train.log_every", 50);
  hooks.on_step = [&out, log_every](const TrainLogRecord& r) {
    if (log_every > 0 && r.step % log_every == 0) out << FormatLogRecord(r) << "\n" << std::flush;
  };
  hooks.on_val = [&out](const ValRecord& v) {
    out << "val step=" << v.step << " loss=" << v.loss << "\n" << std::flush;
  };
  if (!resume.empty()) hooks.resume = resume;
  g_stop.store(false);
  auto prev = std::signal(SIGINT, OnSigint);
  TrainResult r;
  try {
    r = Train(tc, sampler, out_dir, hooks);
  } catch (...) {
    std::signal(SIGINT, prev);
    throw;
  }
  std::signal(SIGINT, prev);
  out << (r.interrupted ? "interrupted at step " : "finished at step ") << r.last_step
      << "; checkpoint " << r.final_checkpoint.string() << "\n";
  return r.interrupted ? kExitInterrupted : kExitOk;
}

void WriteEnhanceStats(const fs::path& path, const EnhanceResult& r, const Enhancer& e) {
  std::ofstream s(path, std::ios::trunc);
  s << "task=" << TrainTaskName(e.task()) << "\n"
    << "used_laec=" << (r.used_laec ? 1 : 0) << "\n"
    << "seconds=" << r.seconds << "\n"
    << "realtime_factor=" << r.realtime_factor << "\n";
}

int CmdEnhance(const Config& cfg, const std::string& ckpt, const std::string& in,
               const std::string& farend, const fs::path& out_wav, std::ostream& out) {
  const Enhancer e(LoadCheckpoint(ckpt), LaecFromConfig(cfg));
  const Waveform mic = LoadWav(in);
  std::optional<Waveform> ref;
  if (!farend.empty()) ref = LoadWav(farend);
  const EnhanceResult r = e.Run(mic, ref ? &*ref : nullptr);
  const fs::path dir = out_wav.has_parent_path() ? out_wav.parent_path() : fs::path(".");
  fs::create_directories(dir);
  WriteWav(out_wav, r.out);
  Snapshot(cfg, dir, "enhance");
  char buf[160];
  std::snprintf(buf, sizeof buf, "wrote %s (%.2f s, realtime factor %.4f%s)\n",
                out_wav.string().c_str(), mic.duration_s(), r.realtime_factor,
                r.used_laec ? ", LAEC applied" : "");
  out << buf;
  return kExitOk;
}

int CmdAecRun(const Config& cfg, const std::string& ckpt, const std::string& mic_path,
              const std::string& farend_path, const fs::path& out_dir, std::ostream& out) {
  if (farend_path.empty()) throw Error(Errc::kInvalidConfig, "aec-run needs --farend");
  const Enhancer e(LoadCheckpoint(ckpt), LaecFromConfig(cfg));
  if (e.channels() != 2)
    throw Error(Errc::kConfigMismatch, "aec-run needs a dual-channel (AEC) checkpoint");
  const Waveform mic = LoadWav(mic_path), far = LoadWav(farend_path);
  const EnhanceResult r = e.Run(mic, &far);
  fs::create_directories(out_dir);
  if (r.used_laec) WriteWav(out_dir / "laec.wav", r.primary);
  WriteWav(out_dir / "enhanced.wav", r.out);
  WriteEnhanceStats(out_dir / "stats.txt", r, e);
  Snapshot(cfg, out_dir, "aec-run");
  out << "wrote " << (out_dir / "enhanced.wav").string() << " (realtime factor "
      << r.realtime_factor << ")\n";
  return kExitOk;
}

int CmdLaec(const Config& cfg, const std::string& mic_path, const std::string& farend_path,
            const fs::path& out_dir, std::ostream& out) {
  const Waveform mic = LoadWav(mic_path), far = LoadWav(farend_path);
  const LaecResult r = Cancel(mic, far, LaecFromConfig(cfg));
  fs::create_directories(out_dir);
  WriteWav(out_dir / "laec.wav", r.out);
  {
    std::ofstream s(out_dir / "laec_stats.txt", std::ios::trunc);
    s << "estimated_delay_samples=" << r.estimated_delay_samples << "\n"
      << "delay_confident=" << (r.delay_confident ? 1 : 0) << "\n"
      << "erle_db=" << r.erle_db << "\n"
      << "guard_events=" << r.guard_events << "\n";
  }
  Snapshot(cfg, out_dir, "laec");
  out << "delay=" << r.estimated_delay_samples << " samples"
      << (r.delay_confident ? "" : " (low confidence)") << ", ERLE=" << r.erle_db << " dB\n";
  return kExitOk;
}

int CmdEvaluate(const Config& cfg, const std::string& testset, const std::string& mode,
                const std::string& ckpt, const fs::path& out_dir, std::ostream& out) {
  EvalOptions o;
  o.mode = ParseEvalMode(cfg.GetString("eval.mode", mode.empty() ? "passthrough" : mode));
  const std::string ck = cfg.GetString("eval.checkpoint", ckpt);
  if (!ck.empty()) o.checkpoint = ck;
  o.laec = LaecFromConfig(cfg);
  o.oracle_projection = ParseProjectionMode(cfg.GetString("eval.projection", "per_bin_complex"));
  if (cfg.GetBool("eval.write_outputs", false)) o.write_outputs = out_dir / "enhanced";
  const std::string set = cfg.GetString("eval.testset", testset);
  if (set.empty()) throw Error(Errc::kInvalidConfig, "evaluate needs --testset");
  const MetricReport rep = Evaluate(set, o);
  fs::create_directories(out_dir);
  const std::string table = FormatReport(rep);
  std::ofstream(out_dir / "report.txt", std::ios::trunc) << table;
  WriteReportCsv(rep, out_dir / "report.csv");
  Snapshot(cfg, out_dir, "evaluate");
  out << table;
  return kExitOk;
}

int CmdGradCheck(const Config& cfg, const fs::path& out_dir, std::ostream& out) {
  std::vector<LossKind> losses = {LossKind::kEq9, LossKind::kEq10Interpreted,
                                  LossKind::kEq10Literal};
  std::vector<ProjectionMode> projections = {ProjectionMode::kPerBinComplex,
                                             ProjectionMode::kPerFrameVector,
                                             ProjectionMode::kLiteralElementwise};
  if (cfg.Has("gradcheck.loss")) losses = {ParseLossKind(cfg.GetString("gradcheck.loss", ""))};
  if (cfg.Has("gradcheck.projection"))
    projections = {ParseProjectionMode(cfg.GetString("gradcheck.projection", ""))};
  GradCheckConfig base;
  base.bins = int(cfg.GetInt("gradcheck.bins", base.bins));
  base.hidden = int(cfg.GetInt("gradcheck.hidden", base.hidden));
  base.frames = int(cfg.GetInt("gradcheck.frames", base.frames));
  base.channels = int(cfg.GetInt("gradcheck.channels", base.channels));
  base.seed = std::uint64_t(cfg.GetInt("seed", std::int64_t(base.seed)));
  Snapshot(cfg, out_dir, "grad-check");
  bool all = true;
  for (LossKind l : losses)
    for (ProjectionMode p : projections) {
      GradCheckConfig g = base;
      g.loss = l;
      g.projection = p;
      const GradCheckReport r = GradCheck(g);
      all = all && r.passed;
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-5s %-17s %-20s max_rel_error=%.3e params=%lld\n",
                    r.passed ? "PASS" : "FAIL", std::string(LossKindName(l)).c_str(),
                    std::string(ProjectionModeName(p)).c_str(), r.max_rel_error,
                    static_cast<long long>(r.checked));
      out << buf;
      if (!r.passed)
        for (const auto& w : r.worst) {
          std::snprintf(buf, sizeof buf, "    %s[%lld] analytic=%.9e numeric=%.9e rel=%.3e\n",
                        w.tensor.c_str(), static_cast<long long>(w.index), w.analytic, w.numeric,
                        w.rel_error);
          out << buf;
        }
    }
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"maskgru: mask-based speech enhancement and echo suppression"};
  app.require_subcommand(1);
  std::map<std::string, Common> common;
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    AddCommon(s, common[name]);
    return s;
  };

  CLI::App* synth = sub("synth-data", "Write a pre-mixed test set");
  CLI::App* train = sub("train", "Train a mask network with online mixing");
  std::string resume;
  train->add_option("--resume", resume, "Checkpoint to resume from");

  CLI::App* enhance = sub("enhance", "Enhance a recording with a checkpoint");
  std::string ckpt, in_wav, farend, out_wav;
  enhance->add_option("--checkpoint", ckpt)->required();
  enhance->add_option("--in", in_wav)->required();
  enhance->add_option("--farend", farend);
  enhance->add_option("--output", out_wav, "Output wav")->required();

  CLI::App* aec = sub("aec-run", "LAEC (if the checkpoint uses it) and masking on mic + far-end");
  aec->add_option("--checkpoint", ckpt)->required();
  aec->add_option("--mic", in_wav)->required();
  aec->add_option("--farend", farend)->required();

  CLI::App* laec = sub("laec", "Run the linear echo canceller alone");
  laec->add_option("--mic", in_wav)->required();
  laec->add_option("--farend", farend)->required();

  CLI::App* eval = sub("evaluate", "Score a test set");
  std::string testset, mode;
  eval->add_option("--testset", testset);
  eval->add_option("--mode", mode, "checkpoint | passthrough | laec_only | oracle");
  eval->add_option("--checkpoint", ckpt);

  CLI::App* info = sub("info", "Parameter count and compute cost of an architecture");
  std::string arch;
  info->add_option("arch", arch, "GRU-512 | GRU-256 | GRU-320 | custom");

  CLI::App* grad = sub("grad-check", "Finite-difference check of loss and network gradients");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    for (CLI::App* s : app.get_subcommands()) {
      const std::string name = s->get_name();
      const Common& c = common[name];
      const Config cfg = LoadConfig(c);
      const fs::path out_dir = c.out;
      if (s == synth) return CmdSynthData(cfg, out_dir, out);
      if (s == train) return CmdTrain(cfg, out_dir, resume, out);
      if (s == enhance) return CmdEnhance(cfg, ckpt, in_wav, farend, out_wav, out);
      if (s == aec) return CmdAecRun(cfg, ckpt, in_wav, farend, out_dir, out);
      if (s == laec) return CmdLaec(cfg, in_wav, farend, out_dir, out);
      if (s == eval) return CmdEvaluate(cfg, testset, mode, ckpt, out_dir, out);
      if (s == info) {
        const int rc = CmdInfo(cfg, arch, out);
        Snapshot(cfg, out_dir, "info");
        return rc;
      }
      if (s == grad) return CmdGradCheck(cfg, out_dir, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace maskgru
