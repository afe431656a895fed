// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Checkpoint file layout:
//   "MGRUCKPT" | u32 version | u64 manifest bytes | manifest text |
//   little-endian float32 tensors in manifest order
// The manifest is key=value lines; `tensor=<name> <rows> <cols>` lines give
// the payload order and `content_hash` is the git blob SHA-1 of the payload.

#ifndef MASKGRU_CHECKPOINT_HPP_
#define MASKGRU_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "maskgru/adam.hpp"
#include "maskgru/gru_net.hpp"

namespace maskgru {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string task = "DNS";  // DNS | AEC | AEC_LAEC
  std::string loss = "eq10_interpreted";
  std::string projection = "per_bin_complex";
  double vad_threshold_db = -40.0;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::map<std::string, std::string> extra;
};

struct Checkpoint {
  ModelParams<float> params;
  CheckpointMeta meta;
  std::optional<AdamState<float>> optimizer;
  std::string content_hash;
};

// Git-style blob hash: SHA-1 over "blob <n>\0" followed by the bytes.
std::string GitBlobSha1(const std::string& bytes);

void SaveCheckpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                    const CheckpointMeta& meta,
                    const AdamState<float>* optimizer = nullptr);

Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws ConfigMismatch when the checkpoint's input layout differs.
void RequireChannels(const Checkpoint& ckpt, int channels);

}  // namespace maskgru

#endif  // MASKGRU_CHECKPOINT_HPP_
