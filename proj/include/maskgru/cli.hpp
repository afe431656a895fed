// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end. Subcommands: synth-data, train, enhance, aec-run,
// laec, evaluate, info, grad-check.
//
// Exit codes: 0 success, 2 configuration error, 3 data/corpus error,
// 4 model or pipeline mismatch, 5 numerical abort, 130 interrupted.

#ifndef MASKGRU_CLI_HPP_
#define MASKGRU_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "maskgru/config.hpp"
#include "maskgru/error.hpp"
#include "maskgru/laec.hpp"
#include "maskgru/mixgen.hpp"
#include "maskgru/trainer.hpp"

namespace maskgru {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitMismatch = 4;
inline constexpr int kExitNumerical = 5;
inline constexpr int kExitInterrupted = 130;

int ExitCodeFor(Errc code);

// Builders from a resolved configuration ("section.key" lookups).
ArchConfig ArchFromConfig(const Config& cfg, const std::string& section);
LaecConfig LaecFromConfig(const Config& cfg);
MixSpec MixSpecFromConfig(const Config& cfg, const std::string& section, MixSpec defaults);
TrainConfig TrainConfigFromConfig(const Config& cfg);
// [corpus] speech_dir/noise_dir, or demo = true to synthesize one.
CorpusManifest ManifestFromConfig(const Config& cfg);

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maskgru

#endif  // MASKGRU_CLI_HPP_
