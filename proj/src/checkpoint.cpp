// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>
#include <vector>

#include <openssl/evp.h>

#include "maskgru/error.hpp"

namespace maskgru {
namespace {

constexpr char kMagic[8] = {'M', 'G', 'R', 'U', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Named {
  std::string name;
  const float* data;
  Index rows, cols;
};

std::vector<Named> PayloadTensors(const ModelParams<float>& params,
                                  const AdamState<float>* opt) {
  std::vector<Named> out;
  for (const auto& t : params.Tensors()) out.push_back({t.name, t.data, t.rows, t.cols});
  if (opt) {
    for (const auto& t : opt->m.Tensors())
      out.push_back({"adam_m/" + t.name, t.data, t.rows, t.cols});
    for (const auto& t : opt->v.Tensors())
      out.push_back({"adam_v/" + t.name, t.data, t.rows, t.cols});
  }
  return out;
}

}  // namespace

std::string GitBlobSha1(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void SaveCheckpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                    const CheckpointMeta& meta, const AdamState<float>* optimizer) {
  const auto tensors = PayloadTensors(params, optimizer);
  std::string payload;
  for (const auto& t : tensors)
    payload.append(reinterpret_cast<const char*>(t.data),
                   std::size_t(t.rows * t.cols) * sizeof(float));

  std::ostringstream m;
  const ArchConfig& a = params.arch;
  m << "arch.name=" << a.name << "\n"
    << "arch.channels=" << a.channels << "\n"
    << "arch.output_bins=" << a.output_bins << "\n"
    << "arch.hidden=" << a.hidden << "\n"
    << "arch.ffn_hidden=" << a.ffn_hidden << "\n"
    << "arch.log_compress=" << (a.log_compress ? 1 : 0) << "\n"
    << "task=" << meta.task << "\n"
    << "loss=" << meta.loss << "\n"
    << "projection=" << meta.projection << "\n"
    << "vad_threshold_db=" << Fmt(meta.vad_threshold_db) << "\n"
    << "seed=" << meta.seed << "\n"
    << "step=" << meta.step << "\n";
  if (optimizer) m << "adam_step=" << optimizer->step << "\n";
  for (const auto& [k, v] : meta.extra) m << "extra." << k << "=" << v << "\n";
  for (const auto& t : tensors) m << "tensor=" << t.name << " " << t.rows << " " << t.cols << "\n";
  m << "content_hash=" << GitBlobSha1(payload) << "\n";
  const std::string manifest = m.str();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kInvalidInput, "cannot write " + tmp);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t mlen = manifest.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&mlen), 8);
    out.write(manifest.data(), std::streamsize(manifest.size()));
    out.write(payload.data(), std::streamsize(payload.size()));
    if (!out) throw Error(Errc::kInvalidInput, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kCorruptCheckpoint, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto corrupt = [&path](const std::string& why) {
    return Error(Errc::kCorruptCheckpoint, path.string() + ": " + why);
  };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw corrupt("bad magic");
  std::uint32_t version;
  std::uint64_t mlen;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&mlen, bytes.data() + 12, 8);
  if (version != kCheckpointVersion) throw corrupt("unsupported version " + std::to_string(version));
  if (mlen > bytes.size() - 20) throw corrupt("truncated manifest");

  std::map<std::string, std::string> kv;
  std::vector<std::tuple<std::string, Index, Index>> layout;
  std::istringstream ms(bytes.substr(20, mlen));
  for (std::string line; std::getline(ms, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "tensor") {
      std::istringstream ts(val);
      std::string name;
      Index rows = -1, cols = -1;
      ts >> name >> rows >> cols;
      if (!ts || rows < 0 || cols < 0) throw corrupt("bad tensor entry '" + val + "'");
      layout.emplace_back(name, rows, cols);
    } else {
      kv[key] = val;
    }
  }

  Checkpoint ck;
  try {
    ArchConfig a;
    a.name = kv.at("arch.name");
    a.channels = std::stoi(kv.at("arch.channels"));
    a.output_bins = std::stoi(kv.at("arch.output_bins"));
    a.hidden = std::stoi(kv.at("arch.hidden"));
    a.ffn_hidden = std::stoi(kv.at("arch.ffn_hidden"));
    a.log_compress = kv.at("arch.log_compress") == "1";
    a.Validate();
    ck.params = ModelParams<float>::Zeros(a);
    ck.meta.task = kv.at("task");
    ck.meta.loss = kv.at("loss");
    ck.meta.projection = kv.at("projection");
    ck.meta.vad_threshold_db = std::stod(kv.at("vad_threshold_db"));
    ck.meta.seed = std::stoull(kv.at("seed"));
    ck.meta.step = std::stoll(kv.at("step"));
    ck.content_hash = kv.at("content_hash");
    for (const auto& [k, v] : kv)
      if (k.rfind("extra.", 0) == 0) ck.meta.extra[k.substr(6)] = v;
    if (kv.count("adam_step")) {
      ck.optimizer = AdamState<float>::Zeros(a);
      ck.optimizer->step = std::stoll(kv.at("adam_step"));
    }
  } catch (const Error&) {
    throw corrupt("invalid architecture in manifest");
  } catch (const std::exception&) {
    throw corrupt("missing or malformed manifest key");
  }

  std::size_t expected_bytes = 0;
  for (const auto& [name, r, c] : layout) expected_bytes += std::size_t(r * c) * sizeof(float);
  const std::size_t offset = 20 + mlen;
  if (bytes.size() - offset != expected_bytes) throw corrupt("payload size mismatch (truncated?)");
  const std::string payload = bytes.substr(offset);
  if (GitBlobSha1(payload) != ck.content_hash) throw corrupt("content hash mismatch");

  std::map<std::string, TensorView<float>> slots;
  for (auto& t : ck.params.Tensors()) slots.emplace(t.name, t);
  if (ck.optimizer) {
    for (auto& t : ck.optimizer->m.Tensors()) slots.emplace("adam_m/" + t.name, t);
    for (auto& t : ck.optimizer->v.Tensors()) slots.emplace("adam_v/" + t.name, t);
  }
  std::size_t pos = 0;
  for (const auto& [name, r, c] : layout) {
    auto it = slots.find(name);
    if (it == slots.end() || it->second.rows != r || it->second.cols != c)
      throw corrupt("unexpected tensor " + name);
    std::memcpy(it->second.data, payload.data() + pos, std::size_t(r * c) * sizeof(float));
    pos += std::size_t(r * c) * sizeof(float);
    slots.erase(it);
  }
  if (!slots.empty()) throw corrupt("missing tensor " + slots.begin()->first);
  return ck;
}

void RequireChannels(const Checkpoint& ckpt, int channels) {
  if (ckpt.params.arch.channels != channels)
    throw Error(Errc::kConfigMismatch,
                "checkpoint expects " + std::to_string(ckpt.params.arch.channels) +
                    " input channel(s), run provides " + std::to_string(channels));
}

}  // namespace maskgru
