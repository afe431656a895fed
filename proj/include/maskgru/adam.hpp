// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MASKGRU_ADAM_HPP_
#define MASKGRU_ADAM_HPP_

#include <cmath>
#include <cstdint>

#include "maskgru/error.hpp"
#include "maskgru/gru_net.hpp"

namespace maskgru {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ModelParams<Scalar> m;
  ModelParams<Scalar> v;
  std::int64_t step = 0;

  static AdamState Zeros(const ArchConfig& arch) {
    return {ModelParams<Scalar>::Zeros(arch), ModelParams<Scalar>::Zeros(arch), 0};
  }
};

// Bias-corrected adaptive-moment update, in place.
template <typename Scalar>
void AdamStep(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads,
              AdamState<Scalar>& state, double lr, const AdamConfig& cfg = {}) {
  auto p = params.Tensors();
  const auto g = grads.Tensors();
  auto m = state.m.Tensors();
  auto v = state.v.Tensors();
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw Error(Errc::kShapeError, "AdamStep: tensor lists differ");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
  const Scalar step = Scalar(lr / c1);
  const Scalar inv_sqrt_c2 = Scalar(1.0 / std::sqrt(c2));
  const Scalar eps = Scalar(cfg.eps);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size() || p[k].size() != m[k].size())
      throw Error(Errc::kShapeError, "AdamStep: shape mismatch in " + p[k].name);
    using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    Eigen::Map<Arr> pk(p[k].data, p[k].size()), mk(m[k].data, m[k].size()),
        vk(v[k].data, v[k].size());
    Eigen::Map<const Arr> gk(g[k].data, g[k].size());
    mk = b1 * mk + (Scalar(1) - b1) * gk;
    vk = b2 * vk + (Scalar(1) - b2) * gk.square();
    pk -= step * mk / (vk.sqrt() * inv_sqrt_c2 + eps);
  }
}

template <typename Scalar>
double GlobalNorm(const ModelParams<Scalar>& grads) {
  double s = 0.0;
  for (const auto& t : grads.Tensors())
    for (Index i = 0; i < t.size(); ++i) s += double(t.data[i]) * double(t.data[i]);
  return std::sqrt(s);
}

template <typename Scalar>
void ScaleInPlace(ModelParams<Scalar>& grads, double factor) {
  for (auto& t : grads.Tensors())
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(t.data, t.size()) *= Scalar(factor);
}

template <typename Scalar>
void AddInPlace(ModelParams<Scalar>& acc, const ModelParams<Scalar>& other) {
  auto a = acc.Tensors();
  const auto b = other.Tensors();
  for (std::size_t k = 0; k < a.size(); ++k)
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(a[k].data, a[k].size()) +=
        Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(b[k].data, b[k].size());
}

}  // namespace maskgru

#endif  // MASKGRU_ADAM_HPP_
