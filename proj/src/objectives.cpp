// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace maskgru {

std::string_view ProjectionModeName(ProjectionMode m) {
  switch (m) {
    case ProjectionMode::kPerBinComplex: return "per_bin_complex";
    case ProjectionMode::kPerFrameVector: return "per_frame_vector";
    case ProjectionMode::kLiteralElementwise: return "literal_elementwise";
  }
  return "?";
}

ProjectionMode ParseProjectionMode(std::string_view s) {
  for (auto m : {ProjectionMode::kPerBinComplex, ProjectionMode::kPerFrameVector,
                 ProjectionMode::kLiteralElementwise})
    if (s == ProjectionModeName(m)) return m;
  throw Error(Errc::kInvalidConfig, "unknown projection mode '" + std::string(s) + "'");
}

std::string_view LossKindName(LossKind k) {
  switch (k) {
    case LossKind::kEq9: return "eq9";
    case LossKind::kEq10Interpreted: return "eq10_interpreted";
    case LossKind::kEq10Literal: return "eq10_literal";
  }
  return "?";
}

LossKind ParseLossKind(std::string_view s) {
  for (auto k : {LossKind::kEq9, LossKind::kEq10Interpreted, LossKind::kEq10Literal})
    if (s == LossKindName(k)) return k;
  throw Error(Errc::kInvalidConfig, "unknown loss '" + std::string(s) + "'");
}

TargetSpectrogram ProjectionTarget(const ComplexSpectrogram& x, const ComplexSpectrogram& c,
                                   ProjectionMode mode) {
  if (x.frames() != c.frames() || x.bins() != c.bins())
    throw Error(Errc::kShapeError, "ProjectionTarget: spectrogram shapes differ");
  TargetSpectrogram t;
  t.mode = mode;
  const Grid<double> x_mag = x.data.abs();
  t.c_proj = Grid<double>::Zero(x.frames(), x.bins());

  switch (mode) {
    case ProjectionMode::kPerBinComplex:
      for (Index i = 0; i < x.frames(); ++i)
        for (Index j = 0; j < x.bins(); ++j) {
          const double xm = x_mag(i, j);
          if (xm < kObjectiveEps) continue;
          const double along = std::real(c.data(i, j) * std::conj(x.data(i, j))) / xm;
          t.c_proj(i, j) = std::clamp(along, 0.0, xm);
        }
      break;
    case ProjectionMode::kPerFrameVector: {
      const Grid<double> c_mag = c.data.abs();
      for (Index i = 0; i < x.frames(); ++i) {
        const double xx = x_mag.row(i).square().sum();
        if (xx < kObjectiveEps) continue;
        const double coef = std::clamp((x_mag.row(i) * c_mag.row(i)).sum() / xx, 0.0, 1.0);
        t.c_proj.row(i) = coef * x_mag.row(i);
      }
      break;
    }
    case ProjectionMode::kLiteralElementwise: {
      const Grid<double> c_mag = c.data.abs();
      for (Index i = 0; i < x.frames(); ++i)
        for (Index j = 0; j < x.bins(); ++j) {
          const double xm = x_mag(i, j);
          if (xm < kObjectiveEps) continue;
          t.c_proj(i, j) = c_mag(i, j) * (xm * c_mag(i, j)) / (xm * xm);
        }
      break;
    }
  }
  return t;
}

namespace {

Grid<double> RawRatio(const TargetSpectrogram& t, const MagnitudeSpectrogram& x_mag) {
  if (t.c_proj.rows() != x_mag.frames() || t.c_proj.cols() != x_mag.bins())
    throw Error(Errc::kShapeError, "TargetMask: shapes differ");
  Grid<double> m = Grid<double>::Zero(x_mag.frames(), x_mag.bins());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (x_mag.data(i, j) >= kObjectiveEps) m(i, j) = t.c_proj(i, j) / x_mag.data(i, j);
  return m;
}

}  // namespace

Index CountUnattainable(const TargetSpectrogram& t, const MagnitudeSpectrogram& x_mag) {
  return (RawRatio(t, x_mag) > 1.0 + 1e-12).count();
}

Mask TargetMask(const TargetSpectrogram& t, const MagnitudeSpectrogram& x_mag) {
  Grid<double> m = RawRatio(t, x_mag);
  const Index bad = (m > 1.0 + 1e-12).count();
  if (bad > 0)
    throw Error(Errc::kAttainabilityViolation,
                std::to_string(bad) + " bins need a mask above 1");
  // absorb rounding in the division
  return Mask{m.min(1.0).max(0.0)};
}

}  // namespace maskgru
