// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Mask-prediction network: input linear, two residual GRU layers, output
// linear and sigmoid. Templated on the scalar type; float for training and
// inference, double for gradient verification, long double for the
// finite-difference reference. Explicitly instantiated in gru_net.cpp.
//
// Sequence data is row-major with one row per (frame, batch item), rows
// ordered time-major: row t * batch + b.

#ifndef MASKGRU_GRU_NET_HPP_
#define MASKGRU_GRU_NET_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace maskgru {

using Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

struct ArchConfig {
  std::string name = "custom";
  int channels = 1;
  int output_bins = 257;
  int hidden = 256;
  int ffn_hidden = 0;  // optional hidden FFN layer before the output linear
  bool log_compress = true;

  int input_bins() const { return channels * output_bins; }
  void Validate() const;
  bool operator==(const ArchConfig&) const = default;

  // GRU-512, GRU-256 (single channel) and GRU-320 (dual channel).
  static ArchConfig Named(std::string_view name);
};

std::int64_t ParamCount(const ArchConfig& cfg);
// Multiply-accumulates per frame: every weight contributes one MAC and
// every bias one accumulate, so this equals ParamCount. Pointwise
// nonlinearities and gate products are not counted.
std::int64_t MacsPerFrame(const ArchConfig& cfg);
double MacsPerSecond(const ArchConfig& cfg, double frame_rate = 62.5);

template <typename Scalar>
struct GruLayerParams {
  RowMatrix<Scalar> w_ih;  // 3H x in, gate blocks ordered reset, update, candidate
  RowMatrix<Scalar> w_hh;  // 3H x H
  RowVector<Scalar> b_ih;  // 3H
  RowVector<Scalar> b_hh;  // 3H
};

template <typename Scalar>
struct TensorView {
  std::string name;
  Scalar* data;
  Index rows;
  Index cols;
  Index size() const { return rows * cols; }
};

template <typename Scalar>
struct ModelParams {
  ArchConfig arch;
  RowMatrix<Scalar> w_in;  // H x input_bins
  RowVector<Scalar> b_in;
  std::array<GruLayerParams<Scalar>, 2> gru;
  RowMatrix<Scalar> w_ffn;  // ffn_hidden x H (empty when disabled)
  RowVector<Scalar> b_ffn;
  RowMatrix<Scalar> w_out;  // output_bins x (ffn_hidden or H)
  RowVector<Scalar> b_out;

  static ModelParams Zeros(const ArchConfig& arch);

  // Stable, named order used by the optimizer and checkpoints.
  std::vector<TensorView<Scalar>> Tensors();
  std::vector<TensorView<const Scalar>> Tensors() const;
  std::int64_t NumParams() const;

  template <typename Other>
  ModelParams<Other> Cast() const;
};

template <typename Scalar>
ModelParams<Scalar> InitParams(const ArchConfig& arch, std::uint64_t seed);

template <typename Scalar>
struct GruState {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> h1;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> h2;
  static GruState Zeros(int hidden) {
    return {RowVector<Scalar>::Zero(hidden), RowVector<Scalar>::Zero(hidden)};
  }
};

template <typename Scalar>
struct GruLayerCache {
  RowMatrix<Scalar> input;
  RowMatrix<Scalar> h_prev;
  RowMatrix<Scalar> reset, update, cand;
  RowMatrix<Scalar> gh_cand;  // recurrent candidate pre-activation (before reset)
};

template <typename Scalar>
struct ForwardCache {
  bool valid = false;
  Index batch = 1;
  RowMatrix<Scalar> features;  // after compression
  RowMatrix<Scalar> a, r1, r2, ffn_pre, q;
  std::array<GruLayerCache<Scalar>, 2> gru;
  RowMatrix<Scalar> mask;
};

template <typename Scalar>
struct ForwardResult {
  RowMatrix<Scalar> mask;  // rows x output_bins, entries in (0, 1)
  ForwardCache<Scalar> cache;
};

// Full-sequence forward. `features` are raw magnitudes, rows time-major
// over `batch` interleaved sequences; all recurrences start from zero.
template <typename Scalar>
ForwardResult<Scalar> Forward(const ModelParams<Scalar>& params,
                              const RowMatrix<Scalar>& features, Index batch = 1,
                              bool training = true);

// Single-frame streaming step; updates `state` in place.
template <typename Scalar>
RowVector<Scalar> ForwardStep(const ModelParams<Scalar>& params,
                              const Eigen::Ref<const RowVector<Scalar>>& frame,
                              GruState<Scalar>& state);

// Backprop through time over the cached sequence.
template <typename Scalar>
ModelParams<Scalar> Backward(const ModelParams<Scalar>& params,
                             const ForwardCache<Scalar>& cache,
                             const RowMatrix<Scalar>& d_mask);

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::Cast() const {
  ModelParams<Other> out;
  out.arch = arch;
  out.w_in = w_in.template cast<Other>();
  out.b_in = b_in.template cast<Other>();
  for (int l = 0; l < 2; ++l) {
    out.gru[l].w_ih = gru[l].w_ih.template cast<Other>();
    out.gru[l].w_hh = gru[l].w_hh.template cast<Other>();
    out.gru[l].b_ih = gru[l].b_ih.template cast<Other>();
    out.gru[l].b_hh = gru[l].b_hh.template cast<Other>();
  }
  out.w_ffn = w_ffn.template cast<Other>();
  out.b_ffn = b_ffn.template cast<Other>();
  out.w_out = w_out.template cast<Other>();
  out.b_out = b_out.template cast<Other>();
  return out;
}

}  // namespace maskgru

#endif  // MASKGRU_GRU_NET_HPP_
