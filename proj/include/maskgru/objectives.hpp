// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Projection targets, the projected MSE, the VAD-gated loss and their
// analytic gradients with respect to the predicted mask.
//
// Notation used below: X = mixture magnitude of the masking channel,
// T = projection target, P = mask, N = frames * bins. All reductions are
// arithmetic means over the full grid.

#ifndef MASKGRU_OBJECTIVES_HPP_
#define MASKGRU_OBJECTIVES_HPP_

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "maskgru/dsp.hpp"
#include "maskgru/error.hpp"

namespace maskgru {

inline constexpr double kObjectiveEps = 1e-12;

enum class ProjectionMode { kPerBinComplex, kPerFrameVector, kLiteralElementwise };
enum class LossKind { kEq9, kEq10Interpreted, kEq10Literal };

std::string_view ProjectionModeName(ProjectionMode m);
ProjectionMode ParseProjectionMode(std::string_view s);
std::string_view LossKindName(LossKind k);
LossKind ParseLossKind(std::string_view s);

inline bool IsAttainable(ProjectionMode m) { return m != ProjectionMode::kLiteralElementwise; }

struct TargetSpectrogram {
  Grid<double> c_proj;
  ProjectionMode mode = ProjectionMode::kPerBinComplex;
};

struct VadFrames {
  std::vector<bool> active;
  double threshold_db = -40.0;

  template <typename Scalar>
  Eigen::Array<Scalar, Eigen::Dynamic, 1> Gate() const {
    Eigen::Array<Scalar, Eigen::Dynamic, 1> g(Index(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) g[Index(i)] = active[i] ? 1 : 0;
    return g;
  }
};

template <typename Scalar>
struct LossReport {
  Scalar total = 0;
  Scalar speech_term = 0;
  Scalar noise_term = 0;
};

// Mask target C' for the masking-channel spectrum x and clean spectrum c.
//   per_bin_complex:     clamp(Re(c conj(x)) / |x|, 0, |x|)
//   per_frame_vector:    clamp(<X_i, C_i> / <X_i, X_i>, 0, 1) X_i per frame
//   literal_elementwise: C_mag^2 / X_mag
TargetSpectrogram ProjectionTarget(const ComplexSpectrogram& x, const ComplexSpectrogram& c,
                                   ProjectionMode mode = ProjectionMode::kPerBinComplex);

// Mask that reproduces the target exactly: C' / X with 0/0 -> 0. Throws
// AttainabilityViolation (with the offending count) when any entry > 1.
Mask TargetMask(const TargetSpectrogram& t, const MagnitudeSpectrogram& x_mag);
Index CountUnattainable(const TargetSpectrogram& t, const MagnitudeSpectrogram& x_mag);

// Frame i is active iff its energy E_i = sum_j ref(i,j)^2 is above eps and
// 10 log10(E_i + eps) >= max_k 10 log10(E_k + eps) + threshold_db.
template <typename Scalar>
VadFrames VadFramesFrom(const Grid<Scalar>& ref_mag, double threshold_db = -40.0) {
  VadFrames v;
  v.threshold_db = threshold_db;
  const Index frames = ref_mag.rows();
  std::vector<double> level(frames), energy(frames);
  double best = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < frames; ++i) {
    energy[i] = double(ref_mag.row(i).square().sum());
    level[i] = 10.0 * std::log10(energy[i] + kObjectiveEps);
    best = std::max(best, level[i]);
  }
  v.active.resize(frames);
  for (Index i = 0; i < frames; ++i)
    v.active[i] = energy[i] > kObjectiveEps && level[i] >= best + threshold_db;
  return v;
}

inline VadFrames VadFramesOf(const MagnitudeSpectrogram& ref, double threshold_db = -40.0) {
  return VadFramesFrom(ref.data, threshold_db);
}

namespace detail {
template <typename Scalar>
void RequireSameShape(const Grid<Scalar>& a, const Grid<Scalar>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::kShapeError, std::string(what) + ": grid shapes differ");
}
}  // namespace detail

// mean((T - X P)^2)
template <typename Scalar>
LossReport<Scalar> ProjectedMse(const Grid<Scalar>& target, const Grid<Scalar>& x_mag,
                                const Grid<Scalar>& p) {
  detail::RequireSameShape(target, x_mag, "ProjectedMse");
  detail::RequireSameShape(target, p, "ProjectedMse");
  LossReport<Scalar> r;
  if (target.size() == 0) return r;
  r.speech_term = (target - x_mag * p).square().mean();
  r.total = r.speech_term;
  return r;
}

// Interpreted: mean((T - V X P)^2) + mean((X - T - X (1 - P))^2), V the
// per-frame gate. Literal: with Y = X P, mean((T - V Y)^2) +
// mean((X - T - X Y)^2), exactly as the printed formula reads.
template <typename Scalar>
LossReport<Scalar> VadProjectedLoss(const Grid<Scalar>& target, const Grid<Scalar>& x_mag,
                                    const Grid<Scalar>& p, const VadFrames& vad,
                                    bool literal) {
  detail::RequireSameShape(target, x_mag, "VadProjectedLoss");
  detail::RequireSameShape(target, p, "VadProjectedLoss");
  if (Index(vad.active.size()) != target.rows())
    throw Error(Errc::kShapeError, "VadProjectedLoss: VAD length != frames");
  LossReport<Scalar> r;
  if (target.size() == 0) return r;
  const auto gate = vad.Gate<Scalar>();
  const Grid<Scalar> y = x_mag * p;
  Grid<Scalar> gated = y;
  gated.colwise() *= gate;
  r.speech_term = (target - gated).square().mean();
  if (literal)
    r.noise_term = (x_mag - target - x_mag * y).square().mean();
  else
    r.noise_term = (x_mag - target - x_mag * (Scalar(1) - p)).square().mean();
  r.total = r.speech_term + r.noise_term;
  return r;
}

struct LossConfig {
  LossKind kind = LossKind::kEq10Interpreted;
  double vad_threshold_db = -40.0;
};

template <typename Scalar>
struct LossEval {
  LossReport<Scalar> report;
  Grid<Scalar> grad;  // dL/dP
};

// Loss and dL/dP. `vad` is the clean-derived gate for the interpreted form;
// the literal form recomputes its gate from Y = X P when `vad` is null.
template <typename Scalar>
LossEval<Scalar> EvaluateLoss(const Grid<Scalar>& target, const Grid<Scalar>& x_mag,
                              const Grid<Scalar>& p, const LossConfig& cfg,
                              const VadFrames* vad = nullptr) {
  LossEval<Scalar> out;
  const Scalar inv_n = target.size() ? Scalar(1) / Scalar(target.size()) : Scalar(0);
  switch (cfg.kind) {
    case LossKind::kEq9: {
      out.report = ProjectedMse(target, x_mag, p);
      out.grad = Scalar(2) * (x_mag * p - target) * x_mag * inv_n;
      break;
    }
    case LossKind::kEq10Interpreted: {
      if (!vad) throw Error(Errc::kInvalidInput, "interpreted loss needs a VAD");
      out.report = VadProjectedLoss(target, x_mag, p, *vad, false);
      Grid<Scalar> vx = x_mag;
      vx.colwise() *= vad->Gate<Scalar>();
      out.grad = Scalar(2) * (vx * p - target) * vx * inv_n +
                 Scalar(2) * (x_mag * p - target) * x_mag * inv_n;
      break;
    }
    case LossKind::kEq10Literal: {
      const Grid<Scalar> y = x_mag * p;
      const VadFrames own = vad ? *vad : VadFramesFrom<Scalar>(y, cfg.vad_threshold_db);
      out.report = VadProjectedLoss(target, x_mag, p, own, true);
      Grid<Scalar> vx = x_mag;
      vx.colwise() *= own.Gate<Scalar>();
      const Grid<Scalar> x2 = x_mag.square();
      out.grad = Scalar(2) * (vx * p - target) * vx * inv_n -
                 Scalar(2) * (x_mag - target - x2 * p) * x2 * inv_n;
      break;
    }
  }
  return out;
}

template <typename Scalar>
Grid<Scalar> LossGradWrtMask(const Grid<Scalar>& target, const Grid<Scalar>& x_mag,
                             const Grid<Scalar>& p, const LossConfig& cfg,
                             const VadFrames* vad = nullptr) {
  return EvaluateLoss(target, x_mag, p, cfg, vad).grad;
}

}  // namespace maskgru

#endif  // MASKGRU_OBJECTIVES_HPP_
