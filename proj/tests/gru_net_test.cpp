// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/gru_net.hpp"

#include <random>

#include <doctest.h>

#include "maskgru/error.hpp"
#include "maskgru/objectives.hpp"
#include "support.hpp"

namespace maskgru {
namespace {

// Input linear, two GRU layers with input and recurrent biases on all three
// gates, output linear.
std::int64_t ClosedFormCount(std::int64_t in, std::int64_t h, std::int64_t out) {
  return (in * h + h) + 2 * 3 * (h * h * 2 + 2 * h) + (h * out + out);
}

ArchConfig Tiny(int bins = 8, int hidden = 8, int channels = 1) {
  ArchConfig a;
  a.output_bins = bins;
  a.hidden = hidden;
  a.channels = channels;
  return a;
}

template <typename S>
RowMatrix<S> RandomFeatures(Index rows, Index cols, Rng& rng) {
  RowMatrix<S> f(rows, cols);
  for (Index i = 0; i < f.size(); ++i) f.data()[i] = S(Uniform(rng, 0.0, 3.0));
  return f;
}

template <typename S>
void RandomizeBiases(ModelParams<S>& p, Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& t : p.Tensors())
    if (t.rows == 1)
      for (Index i = 0; i < t.size(); ++i) t.data[i] = S(g(rng));
}

Errc CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInvalidState;
}

TEST_SUITE("gru_net") {

TEST_CASE("named architectures and their sizes") {
  const ArchConfig g512 = ArchConfig::Named("GRU-512"), g256 = ArchConfig::Named("GRU-256"),
                   g320 = ArchConfig::Named("GRU-320");
  CHECK(g512.hidden == 512);
  CHECK(g512.input_bins() == 257);
  CHECK(g256.hidden == 256);
  CHECK(g320.hidden == 320);
  CHECK(g320.channels == 2);
  CHECK(g320.input_bins() == 514);

  CHECK(ParamCount(g512) == ClosedFormCount(257, 512, 257));
  CHECK(ParamCount(g512) == 3415809);
  CHECK(ParamCount(g256) == 921601);
  CHECK(ParamCount(g320) == ClosedFormCount(514, 320, 257));
  CHECK(std::abs(double(ParamCount(g512)) - 3.41e6) / 3.41e6 < 0.003);
  CHECK(std::abs(double(ParamCount(g256)) - 0.92e6) / 0.92e6 < 0.003);
  CHECK(std::abs(double(ParamCount(g320)) - 1.48e6) / 1.48e6 < 0.003);

  for (const auto& a : {g512, g256, g320}) {
    CHECK(InitParams<float>(a, 1).NumParams() == ParamCount(a));
    CHECK(MacsPerFrame(a) == ParamCount(a));
    CHECK(MacsPerSecond(a) == doctest::Approx(62.5 * double(MacsPerFrame(a))));
  }
  CHECK(MacsPerSecond(g512) / 0.2e9 < 1.15);
  CHECK(0.2e9 / MacsPerSecond(g512) < 1.15);
  CHECK(MacsPerSecond(g256) / 0.06e9 < 1.15);
  CHECK(0.06e9 / MacsPerSecond(g256) < 1.15);

  CHECK(CodeOf([] { ArchConfig::Named("GRU-1024"); }) == Errc::kInvalidConfig);
}

TEST_CASE("an optional hidden FFN layer adds its weights") {
  ArchConfig a = ArchConfig::Named("GRU-256");
  a.ffn_hidden = 128;
  const std::int64_t base = ClosedFormCount(257, 256, 257) - (256 * 257 + 257);
  CHECK(ParamCount(a) == base + (256 * 128 + 128) + (128 * 257 + 257));
  CHECK(InitParams<float>(a, 1).NumParams() == ParamCount(a));
}

TEST_CASE("degenerate configurations are rejected") {
  ArchConfig a = Tiny();
  a.hidden = 0;
  CHECK(CodeOf([&] { a.Validate(); }) == Errc::kInvalidConfig);
  CHECK(CodeOf([&] { InitParams<float>(a, 1); }) == Errc::kInvalidConfig);
  ArchConfig c = Tiny();
  c.channels = 3;
  CHECK(CodeOf([&] { c.Validate(); }) == Errc::kInvalidConfig);
}

TEST_CASE("initialization") {
  const ArchConfig a = Tiny(10, 12, 2);
  const auto p = InitParams<float>(a, 42), q = InitParams<float>(a, 42), r = InitParams<float>(a, 43);
  const auto pt = p.Tensors(), qt = q.Tensors(), rt = r.Tensors();
  bool any_diff = false;
  for (std::size_t k = 0; k < pt.size(); ++k) {
    for (Index i = 0; i < pt[k].size(); ++i) {
      CHECK(pt[k].data[i] == qt[k].data[i]);
      any_diff |= pt[k].data[i] != rt[k].data[i];
    }
    if (pt[k].rows == 1) {
      for (Index i = 0; i < pt[k].size(); ++i) CHECK(pt[k].data[i] == 0.0f);
    } else {
      const double k_bound = 1.0 / std::sqrt(double(pt[k].cols));
      for (Index i = 0; i < pt[k].size(); ++i) CHECK(std::abs(pt[k].data[i]) <= k_bound);
    }
  }
  CHECK(any_diff);
  CHECK(p.w_in.rows() == 12);
  CHECK(p.w_in.cols() == 20);
  CHECK(p.gru[0].w_ih.rows() == 36);
  CHECK(p.w_out.rows() == 10);
}

TEST_CASE("forward output range and shape checks") {
  Rng rng(1);
  auto p = InitParams<double>(Tiny(), 3);
  RandomizeBiases(p, rng);
  const auto f = RandomFeatures<double>(30, 8, rng);
  const auto out = Forward(p, f);
  CHECK(out.mask.rows() == 30);
  CHECK(out.mask.cols() == 8);
  CHECK(out.mask.minCoeff() > 0.0);
  CHECK(out.mask.maxCoeff() < 1.0);
  CHECK(out.cache.valid);
  CHECK(!Forward(p, f, 1, false).cache.valid);
  CHECK(CodeOf([&] { Forward(p, RandomFeatures<double>(4, 9, rng)); }) == Errc::kShapeError);
  CHECK(CodeOf([&] { Forward(p, f, 7); }) == Errc::kShapeError);
}

TEST_CASE("causality") {
  Rng rng(2);
  auto p = InitParams<double>(Tiny(), 4);
  RandomizeBiases(p, rng);
  const auto f = RandomFeatures<double>(20, 8, rng);
  const auto base = Forward(p, f).mask;
  for (Index t : {0, 7, 19}) {
    auto g = f;
    g.row(t).array() += 1.0;
    const auto m = Forward(p, g).mask;
    CHECK((m.topRows(t).array() == base.topRows(t).array()).all());
    CHECK(!(m.row(t).array() == base.row(t).array()).all());
  }
}

TEST_CASE("zero input settles to a constant mask") {
  Rng rng(3);
  auto p = InitParams<double>(Tiny(), 5);
  RandomizeBiases(p, rng);
  const auto m = Forward(p, RowMatrix<double>(RowMatrix<double>::Zero(400, 8))).mask;
  CHECK((m.row(398) - m.row(399)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Forward(p, RowMatrix<double>(RowMatrix<double>::Zero(400, 8))).mask - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("streaming steps match the sequence forward") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = InitParams<double>(Tiny(16, 12, 1 + trial % 2), 10 + trial);
    RandomizeBiases(p, rng);
    const auto f = RandomFeatures<double>(50, p.arch.input_bins(), rng);
    const auto batch = Forward(p, f).mask;
    auto st = GruState<double>::Zeros(p.arch.hidden);
    double worst = 0.0;
    for (Index t = 0; t < f.rows(); ++t) {
      const RowVector<double> m = ForwardStep<double>(p, f.row(t), st);
      worst = std::max(worst, (m - batch.row(t)).cwiseAbs().maxCoeff());
      CHECK(st.h1.cwiseAbs().maxCoeff() < 1.0);
      CHECK(st.h2.cwiseAbs().maxCoeff() < 1.0);
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("recurrent state carries over between calls") {
  Rng rng(5);
  auto p = InitParams<double>(Tiny(), 6);
  const auto a = RandomFeatures<double>(10, 8, rng), b = RandomFeatures<double>(10, 8, rng);
  auto carried = GruState<double>::Zeros(8);
  for (Index t = 0; t < a.rows(); ++t) ForwardStep<double>(p, a.row(t), carried);
  auto fresh = GruState<double>::Zeros(8);
  const RowVector<double> m1 = ForwardStep<double>(p, b.row(0), carried);
  const RowVector<double> m2 = ForwardStep<double>(p, b.row(0), fresh);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() > 0.0);
  CHECK((m2 - Forward(p, b).mask.row(0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("interleaved batches equal independent sequences") {
  Rng rng(6);
  auto p = InitParams<double>(Tiny(), 7);
  RandomizeBiases(p, rng);
  const Index T = 12, B = 3;
  std::vector<RowMatrix<double>> seqs;
  RowMatrix<double> batch(T * B, 8);
  for (Index b = 0; b < B; ++b) {
    seqs.push_back(RandomFeatures<double>(T, 8, rng));
    for (Index t = 0; t < T; ++t) batch.row(t * B + b) = seqs[b].row(t);
  }
  const auto m = Forward(p, batch, B).mask;
  for (Index b = 0; b < B; ++b) {
    const auto single = Forward(p, seqs[b]).mask;
    for (Index t = 0; t < T; ++t) CHECK((m.row(t * B + b) - single.row(t)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("backward edge cases") {
  Rng rng(7);
  auto p = InitParams<double>(Tiny(), 8);
  const auto f = RandomFeatures<double>(6, 8, rng);
  const auto out = Forward(p, f);
  const auto g = Backward(p, out.cache, RowMatrix<double>(RowMatrix<double>::Zero(6, 8)));
  for (const auto& t : g.Tensors())
    for (Index i = 0; i < t.size(); ++i) CHECK(t.data[i] == 0.0);
  const auto eval = Forward(p, f, 1, false);
  CHECK(CodeOf([&] { Backward(p, eval.cache, RowMatrix<double>(RowMatrix<double>::Zero(6, 8))); }) ==
        Errc::kInvalidState);
  CHECK(CodeOf([&] { Backward(p, out.cache, RowMatrix<double>(RowMatrix<double>::Zero(5, 8))); }) ==
        Errc::kShapeError);
}

TEST_CASE("backward matches extended-precision finite differences") {
  Rng rng(8);
  for (int variant = 0; variant < 3; ++variant) {
    ArchConfig a = Tiny(8, 8, variant == 2 ? 2 : 1);
    a.ffn_hidden = variant == 1 ? 6 : 0;
    a.log_compress = variant != 1;
    auto p = InitParams<double>(a, 20 + variant);
    RandomizeBiases(p, rng);
    const Index T = 5, B = variant == 2 ? 2 : 1;
    const auto f = RandomFeatures<double>(T * B, a.input_bins(), rng);
    RowMatrix<double> w(T * B, 8);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = Uniform(rng, -1.0, 1.0);

    // loss = sum(w .* mask)
    const auto fwd = Forward(p, f, B);
    const auto grads = Backward(p, fwd.cache, w);

    using L = long double;
    auto wide = p.Cast<L>();
    const RowMatrix<L> fl = f.cast<L>(), wl = w.cast<L>();
    auto loss = [&](const ModelParams<L>& q) {
      return (Forward(q, fl, B, false).mask.array() * wl.array()).sum();
    };
    auto wt = wide.Tensors();
    const auto gt = grads.Tensors();
    double worst = 0.0;
    const L h = 1e-5L;
    for (std::size_t k = 0; k < wt.size(); ++k) {
      for (Index i = 0; i < wt[k].size(); ++i) {
        const L orig = wt[k].data[i];
        auto at = [&](L d) {
          wt[k].data[i] = orig + d;
          const L v = loss(wide);
          wt[k].data[i] = orig;
          return v;
        };
        const L num = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
        const double an = gt[k].data[i];
        const double nd = double(num);
        worst = std::max(worst, std::abs(an - nd) / std::max({std::abs(an), std::abs(nd), 1e-12}));
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("an exactly attained projection target gives a vanishing gradient") {
  Rng rng(9);
  auto p = InitParams<double>(Tiny(), 30);
  RandomizeBiases(p, rng);
  const auto f = RandomFeatures<double>(10, 8, rng);
  const auto fwd = Forward(p, f);
  const Grid<double> x = f.array();
  const Grid<double> mask = fwd.mask.array();
  const Grid<double> target = x * mask;  // reachable by construction
  LossConfig cfg;
  cfg.kind = LossKind::kEq9;
  const Grid<double> d = LossGradWrtMask(target, x, mask, cfg);
  const auto g = Backward(p, fwd.cache, RowMatrix<double>(d.matrix()));
  double norm = 0.0;
  for (const auto& t : g.Tensors())
    for (Index i = 0; i < t.size(); ++i) norm += t.data[i] * t.data[i];
  CHECK(std::sqrt(norm) < 1e-14);
}

TEST_CASE("forward and backward are deterministic") {
  Rng rng(10);
  const auto p = InitParams<float>(Tiny(16, 16), 31);
  const auto f = RandomFeatures<float>(40, 16, rng);
  const auto a = Forward(p, f), b = Forward(p, f);
  CHECK((a.mask.array() == b.mask.array()).all());
  const RowMatrix<float> up = RowMatrix<float>::Constant(40, 16, 0.01f);
  const auto ga = Backward(p, a.cache, up), gb = Backward(p, b.cache, up);
  const auto ta = ga.Tensors(), tb = gb.Tensors();
  for (std::size_t k = 0; k < ta.size(); ++k)
    for (Index i = 0; i < ta[k].size(); ++i) CHECK(ta[k].data[i] == tb[k].data[i]);
}

}  // TEST_SUITE

}  // namespace
}  // namespace maskgru
