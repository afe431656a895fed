// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/gru_net.hpp"

#include <cmath>
#include <random>

#include "maskgru/error.hpp"

namespace maskgru {

void ArchConfig::Validate() const {
  if (hidden < 1) throw Error(Errc::kInvalidConfig, "hidden must be positive");
  if (output_bins < 1) throw Error(Errc::kInvalidConfig, "output_bins must be positive");
  if (channels != 1 && channels != 2)
    throw Error(Errc::kInvalidConfig, "channels must be 1 or 2");
  if (ffn_hidden < 0) throw Error(Errc::kInvalidConfig, "ffn_hidden must be >= 0");
}

ArchConfig ArchConfig::Named(std::string_view name) {
  ArchConfig a;
  a.name = std::string(name);
  if (name == "GRU-512") {
    a.hidden = 512;
  } else if (name == "GRU-256") {
    a.hidden = 256;
  } else if (name == "GRU-320") {
    a.hidden = 320;
    a.channels = 2;
  } else {
    throw Error(Errc::kInvalidConfig, "unknown architecture '" + std::string(name) + "'");
  }
  return a;
}

std::int64_t ParamCount(const ArchConfig& cfg) {
  cfg.Validate();
  const std::int64_t in = cfg.input_bins(), h = cfg.hidden, f = cfg.ffn_hidden,
                     out = cfg.output_bins;
  const std::int64_t head = f > 0 ? f : h;
  std::int64_t n = h * in + h;
  n += 2 * (3 * h * h + 3 * h * h + 6 * h);
  if (f > 0) n += f * h + f;
  n += out * head + out;
  return n;
}

std::int64_t MacsPerFrame(const ArchConfig& cfg) {
  cfg.Validate();
  const std::int64_t in = cfg.input_bins(), h = cfg.hidden, f = cfg.ffn_hidden,
                     out = cfg.output_bins;
  const std::int64_t head = f > 0 ? f : h;
  // weight MACs plus one accumulate per bias
  return (h * in + h) + 2 * (6 * h * h + 6 * h) + (f * h + f) + (out * head + out);
}

double MacsPerSecond(const ArchConfig& cfg, double frame_rate) {
  return double(MacsPerFrame(cfg)) * frame_rate;
}

template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::Zeros(const ArchConfig& arch) {
  arch.Validate();
  const Index in = arch.input_bins(), h = arch.hidden, f = arch.ffn_hidden;
  ModelParams p;
  p.arch = arch;
  p.w_in = RowMatrix<Scalar>::Zero(h, in);
  p.b_in = RowVector<Scalar>::Zero(h);
  for (auto& g : p.gru) {
    g.w_ih = RowMatrix<Scalar>::Zero(3 * h, h);
    g.w_hh = RowMatrix<Scalar>::Zero(3 * h, h);
    g.b_ih = RowVector<Scalar>::Zero(3 * h);
    g.b_hh = RowVector<Scalar>::Zero(3 * h);
  }
  p.w_ffn = RowMatrix<Scalar>::Zero(f, f > 0 ? h : 0);
  p.b_ffn = RowVector<Scalar>::Zero(f);
  p.w_out = RowMatrix<Scalar>::Zero(arch.output_bins, f > 0 ? f : h);
  p.b_out = RowVector<Scalar>::Zero(arch.output_bins);
  return p;
}

namespace {

template <typename P, typename View>
std::vector<View> CollectTensors(P& p) {
  std::vector<View> v;
  auto add = [&v](const char* name, auto& m) {
    v.push_back(View{name, m.data(), m.rows(), m.cols()});
  };
  add("w_in", p.w_in);
  add("b_in", p.b_in);
  const char* names[2][4] = {{"gru1.w_ih", "gru1.w_hh", "gru1.b_ih", "gru1.b_hh"},
                             {"gru2.w_ih", "gru2.w_hh", "gru2.b_ih", "gru2.b_hh"}};
  for (int l = 0; l < 2; ++l) {
    add(names[l][0], p.gru[l].w_ih);
    add(names[l][1], p.gru[l].w_hh);
    add(names[l][2], p.gru[l].b_ih);
    add(names[l][3], p.gru[l].b_hh);
  }
  if (p.arch.ffn_hidden > 0) {
    add("w_ffn", p.w_ffn);
    add("b_ffn", p.b_ffn);
  }
  add("w_out", p.w_out);
  add("b_out", p.b_out);
  return v;
}

template <typename Derived>
auto Sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

}  // namespace

template <typename Scalar>
std::vector<TensorView<Scalar>> ModelParams<Scalar>::Tensors() {
  return CollectTensors<ModelParams<Scalar>, TensorView<Scalar>>(*this);
}

template <typename Scalar>
std::vector<TensorView<const Scalar>> ModelParams<Scalar>::Tensors() const {
  return CollectTensors<const ModelParams<Scalar>, TensorView<const Scalar>>(*this);
}

template <typename Scalar>
std::int64_t ModelParams<Scalar>::NumParams() const {
  std::int64_t n = 0;
  for (const auto& t : Tensors()) n += t.size();
  return n;
}

template <typename Scalar>
ModelParams<Scalar> InitParams(const ArchConfig& arch, std::uint64_t seed) {
  ModelParams<Scalar> p = ModelParams<Scalar>::Zeros(arch);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](RowMatrix<Scalar>& m) {
    if (m.size() == 0) return;
    const double k = 1.0 / std::sqrt(double(m.cols()));
    std::uniform_real_distribution<double> u(-k, k);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(u(rng));
  };
  fill(p.w_in);
  for (auto& g : p.gru) {
    fill(g.w_ih);
    fill(g.w_hh);
  }
  fill(p.w_ffn);
  fill(p.w_out);
  return p;
}

namespace {

template <typename Scalar>
RowMatrix<Scalar> Compress(const ModelParams<Scalar>& p, const RowMatrix<Scalar>& features) {
  if (features.cols() != p.arch.input_bins())
    throw Error(Errc::kShapeError, "feature width " + std::to_string(features.cols()) +
                                       " != input_bins " +
                                       std::to_string(p.arch.input_bins()));
  if (!p.arch.log_compress) return features;
  return features.array().max(Scalar(0)).log1p().matrix();
}

// One GRU step for a block of rows. gi: input projections (rows x 3H).
template <typename Scalar>
void GruCell(const GruLayerParams<Scalar>& p, const Eigen::Ref<const RowMatrix<Scalar>>& gi,
             const Eigen::Ref<const RowMatrix<Scalar>>& h_prev,
             Eigen::Ref<RowMatrix<Scalar>> h_out, GruLayerCache<Scalar>* cache, Index row0) {
  const Index h = h_prev.cols();
  RowMatrix<Scalar> gh = h_prev * p.w_hh.transpose();
  gh.rowwise() += p.b_hh;
  const RowMatrix<Scalar> r = Sigmoid(gi.leftCols(h) + gh.leftCols(h));
  const RowMatrix<Scalar> z = Sigmoid(gi.middleCols(h, h) + gh.middleCols(h, h));
  const RowMatrix<Scalar> n =
      (gi.rightCols(h).array() + r.array() * gh.rightCols(h).array()).tanh().matrix();
  h_out = ((Scalar(1) - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
  if (cache) {
    const Index rows = h_prev.rows();
    cache->h_prev.middleRows(row0, rows) = h_prev;
    cache->reset.middleRows(row0, rows) = r;
    cache->update.middleRows(row0, rows) = z;
    cache->cand.middleRows(row0, rows) = n;
    cache->gh_cand.middleRows(row0, rows) = gh.rightCols(h);
  }
}

template <typename Scalar>
RowMatrix<Scalar> GruSequence(const GruLayerParams<Scalar>& p, const RowMatrix<Scalar>& x,
                              Index batch, GruLayerCache<Scalar>* cache) {
  const Index rows = x.rows(), h = p.w_hh.cols();
  const Index frames = rows / batch;
  RowMatrix<Scalar> gi = x * p.w_ih.transpose();
  gi.rowwise() += p.b_ih;
  if (cache) {
    cache->input = x;
    cache->h_prev.resize(rows, h);
    cache->reset.resize(rows, h);
    cache->update.resize(rows, h);
    cache->cand.resize(rows, h);
    cache->gh_cand.resize(rows, h);
  }
  RowMatrix<Scalar> out(rows, h);
  RowMatrix<Scalar> h_prev = RowMatrix<Scalar>::Zero(batch, h);
  for (Index t = 0; t < frames; ++t) {
    GruCell<Scalar>(p, gi.middleRows(t * batch, batch), h_prev,
                    out.middleRows(t * batch, batch), cache, t * batch);
    h_prev = out.middleRows(t * batch, batch);
  }
  return out;
}

// Returns dL/dx for the layer input; accumulates parameter gradients.
template <typename Scalar>
RowMatrix<Scalar> GruSequenceBackward(const GruLayerParams<Scalar>& p,
                                      const GruLayerCache<Scalar>& c,
                                      const RowMatrix<Scalar>& d_out, Index batch,
                                      GruLayerParams<Scalar>& g) {
  const Index rows = d_out.rows(), h = p.w_hh.cols();
  const Index frames = rows / batch;
  RowMatrix<Scalar> d_gi(rows, 3 * h), d_gh(rows, 3 * h);
  RowMatrix<Scalar> dh_next = RowMatrix<Scalar>::Zero(batch, h);
  for (Index t = frames - 1; t >= 0; --t) {
    const Index r0 = t * batch;
    const auto z = c.update.middleRows(r0, batch).array();
    const auto r = c.reset.middleRows(r0, batch).array();
    const auto n = c.cand.middleRows(r0, batch).array();
    const auto hp = c.h_prev.middleRows(r0, batch).array();
    const auto ghn = c.gh_cand.middleRows(r0, batch).array();

    const RowMatrix<Scalar> dh = d_out.middleRows(r0, batch) + dh_next;
    const auto dha = dh.array();
    const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dn_pre =
        dha * (Scalar(1) - z) * (Scalar(1) - n.square());
    const auto dz_pre = dha * (hp - n) * z * (Scalar(1) - z);
    const auto dr_pre = dn_pre * ghn * r * (Scalar(1) - r);

    d_gi.block(r0, 0, batch, h) = dr_pre.matrix();
    d_gi.block(r0, h, batch, h) = dz_pre.matrix();
    d_gi.block(r0, 2 * h, batch, h) = dn_pre.matrix();
    d_gh.block(r0, 0, batch, h) = dr_pre.matrix();
    d_gh.block(r0, h, batch, h) = dz_pre.matrix();
    d_gh.block(r0, 2 * h, batch, h) = (dn_pre * r).matrix();

    dh_next = (dha * z).matrix() + d_gh.middleRows(r0, batch) * p.w_hh;
  }
  g.w_hh.noalias() += d_gh.transpose() * c.h_prev;
  g.b_hh += d_gh.colwise().sum();
  g.w_ih.noalias() += d_gi.transpose() * c.input;
  g.b_ih += d_gi.colwise().sum();
  return d_gi * p.w_ih;
}

}  // namespace

template <typename Scalar>
ForwardResult<Scalar> Forward(const ModelParams<Scalar>& p, const RowMatrix<Scalar>& features,
                              Index batch, bool training) {
  if (batch < 1 || features.rows() % batch != 0)
    throw Error(Errc::kShapeError, "row count is not a multiple of the batch size");
  ForwardResult<Scalar> res;
  ForwardCache<Scalar>* c = training ? &res.cache : nullptr;

  RowMatrix<Scalar> f = Compress(p, features);
  RowMatrix<Scalar> a = f * p.w_in.transpose();
  a.rowwise() += p.b_in;
  RowMatrix<Scalar> r1 = GruSequence(p.gru[0], a, batch, c ? &c->gru[0] : nullptr);
  r1 += a;
  RowMatrix<Scalar> r2 = GruSequence(p.gru[1], r1, batch, c ? &c->gru[1] : nullptr);
  r2 += r1;

  RowMatrix<Scalar> ffn_pre, q;
  if (p.arch.ffn_hidden > 0) {
    ffn_pre = r2 * p.w_ffn.transpose();
    ffn_pre.rowwise() += p.b_ffn;
    q = ffn_pre.cwiseMax(Scalar(0));
  }
  const RowMatrix<Scalar>& head = p.arch.ffn_hidden > 0 ? q : r2;
  RowMatrix<Scalar> o = head * p.w_out.transpose();
  o.rowwise() += p.b_out;
  res.mask = Sigmoid(o);

  if (c) {
    c->valid = true;
    c->batch = batch;
    c->features = std::move(f);
    c->a = std::move(a);
    c->r1 = std::move(r1);
    c->r2 = std::move(r2);
    c->ffn_pre = std::move(ffn_pre);
    c->q = std::move(q);
    c->mask = res.mask;
  }
  return res;
}

template <typename Scalar>
RowVector<Scalar> ForwardStep(const ModelParams<Scalar>& p,
                              const Eigen::Ref<const RowVector<Scalar>>& frame,
                              GruState<Scalar>& state) {
  const RowMatrix<Scalar> f = Compress(p, RowMatrix<Scalar>(frame));
  const Index h = p.arch.hidden;
  if (state.h1.size() != h || state.h2.size() != h)
    throw Error(Errc::kShapeError, "GRU state width does not match the model");

  RowMatrix<Scalar> a = f * p.w_in.transpose();
  a += p.b_in;
  RowMatrix<Scalar> gi = a * p.gru[0].w_ih.transpose();
  gi += p.gru[0].b_ih;
  RowMatrix<Scalar> h1(1, h);
  GruCell<Scalar>(p.gru[0], gi, state.h1, h1, nullptr, 0);
  const RowMatrix<Scalar> r1 = h1 + a;

  gi = r1 * p.gru[1].w_ih.transpose();
  gi += p.gru[1].b_ih;
  RowMatrix<Scalar> h2(1, h);
  GruCell<Scalar>(p.gru[1], gi, state.h2, h2, nullptr, 0);
  RowMatrix<Scalar> head = h2 + r1;

  if (p.arch.ffn_hidden > 0) {
    RowMatrix<Scalar> pre = head * p.w_ffn.transpose();
    pre += p.b_ffn;
    head = pre.cwiseMax(Scalar(0));
  }
  RowMatrix<Scalar> o = head * p.w_out.transpose();
  o += p.b_out;
  state.h1 = h1;
  state.h2 = h2;
  return Sigmoid(o);
}

template <typename Scalar>
ModelParams<Scalar> Backward(const ModelParams<Scalar>& p, const ForwardCache<Scalar>& c,
                             const RowMatrix<Scalar>& d_mask) {
  if (!c.valid) throw Error(Errc::kInvalidState, "backward needs a training-mode forward cache");
  if (d_mask.rows() != c.mask.rows() || d_mask.cols() != c.mask.cols())
    throw Error(Errc::kShapeError, "upstream gradient shape does not match the mask");
  ModelParams<Scalar> g = ModelParams<Scalar>::Zeros(p.arch);

  const RowMatrix<Scalar> d_o =
      (d_mask.array() * c.mask.array() * (Scalar(1) - c.mask.array())).matrix();
  const bool ffn = p.arch.ffn_hidden > 0;
  const RowMatrix<Scalar>& head = ffn ? c.q : c.r2;
  g.w_out.noalias() = d_o.transpose() * head;
  g.b_out = d_o.colwise().sum();
  RowMatrix<Scalar> d_r2 = d_o * p.w_out;
  if (ffn) {
    const RowMatrix<Scalar> d_pre =
        (d_r2.array() * (c.ffn_pre.array() > Scalar(0)).template cast<Scalar>()).matrix();
    g.w_ffn.noalias() = d_pre.transpose() * c.r2;
    g.b_ffn = d_pre.colwise().sum();
    d_r2 = d_pre * p.w_ffn;
  }

  RowMatrix<Scalar> d_r1 = d_r2 + GruSequenceBackward(p.gru[1], c.gru[1], d_r2, c.batch, g.gru[1]);
  RowMatrix<Scalar> d_a = d_r1 + GruSequenceBackward(p.gru[0], c.gru[0], d_r1, c.batch, g.gru[0]);
  g.w_in.noalias() = d_a.transpose() * c.features;
  g.b_in = d_a.colwise().sum();
  return g;
}

#define MASKGRU_INSTANTIATE(S)                                                          \
  template struct ModelParams<S>;                                                       \
  template ModelParams<S> InitParams<S>(const ArchConfig&, std::uint64_t);              \
  template ForwardResult<S> Forward<S>(const ModelParams<S>&, const RowMatrix<S>&, Index, \
                                       bool);                                           \
  template RowVector<S> ForwardStep<S>(const ModelParams<S>&,                            \
                                       const Eigen::Ref<const RowVector<S>>&, GruState<S>&); \
  template ModelParams<S> Backward<S>(const ModelParams<S>&, const ForwardCache<S>&,     \
                                      const RowMatrix<S>&);

MASKGRU_INSTANTIATE(float)
MASKGRU_INSTANTIATE(double)
MASKGRU_INSTANTIATE(long double)

#undef MASKGRU_INSTANTIATE

}  // namespace maskgru
