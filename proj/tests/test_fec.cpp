#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "tw/fec.hpp"

using namespace tw;
using namespace tw::fec;
using tw::future::FutureClip;
using tw::sim::Frame;

namespace {

const sim::EnvConfig kCfg{};

EncoderDims small_dims() {
  EncoderDims d;
  d.frame_w = 9;
  d.frame_h = 9;
  d.d_e = 6;
  d.B = 2;
  d.d_g = 4;
  return d;
}

Frame random_frame(int w, int h, Rng& rng) {
  Frame f;
  f.w = w;
  f.h = h;
  f.px.resize(static_cast<size_t>(w) * h * 3);
  for (auto& v : f.px) v = rng.uniform(0.0f, 1.0f);
  return f;
}

FutureClip random_clip(int T, int w, int h, Rng& rng) {
  FutureClip clip;
  clip.source = future::Source::GT;
  for (int i = 0; i < T; ++i) clip.frames.push_back(random_frame(w, h, rng));
  return clip;
}

FrameEmbeddings scalar_rows(const std::vector<float>& vals) {
  FrameEmbeddings e;
  e.T = static_cast<int>(vals.size());
  e.d_e = 1;
  e.e = vals;
  return e;
}

// brute-force oracle straight from the boundary formula
std::vector<float> pool_oracle(const std::vector<float>& rows, int T, int d_e, int B) {
  std::vector<float> u(static_cast<size_t>(B) * d_e, 0.0f);
  for (int b = 1; b <= B; ++b) {
    const int lo = static_cast<int>(static_cast<long>(b - 1) * T / B);
    const int hi = static_cast<int>(static_cast<long>(b) * T / B);
    for (int k = 0; k < d_e; ++k) {
      if (lo >= hi) {
        u[(b - 1) * d_e + k] = rows[std::min(lo, T - 1) * d_e + k];
      } else {
        double acc = 0.0;
        for (int i = lo; i < hi; ++i) acc += rows[i * d_e + k];
        u[(b - 1) * d_e + k] = static_cast<float>(acc / (hi - lo));
      }
    }
  }
  return u;
}

}  // namespace

TEST_CASE("encode_frames: shape, purity, per-frame oracle") {
  const EncoderDims d = small_dims();
  Rng rng(4);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(9);
  FutureClip clip = random_clip(5, d.frame_w, d.frame_h, frng);
  const FrameEmbeddings e = encode_frames(clip, enc);
  CHECK(e.T == 5);
  CHECK(e.d_e == d.d_e);
  for (int i = 0; i < e.T; ++i) {
    const auto row = encode_frame(clip.frames[i], enc);
    for (int k = 0; k < d.d_e; ++k) CHECK(row[k] == e.row(i)[k]);
  }
  // identical frames give identical rows
  for (auto& f : clip.frames) f = clip.frames[0];
  const FrameEmbeddings same = encode_frames(clip, enc);
  for (int i = 1; i < same.T; ++i)
    for (int k = 0; k < d.d_e; ++k) CHECK(same.row(i)[k] == same.row(0)[k]);
}

TEST_CASE("encode_frames: size mismatch error") {
  const EncoderDims d = small_dims();
  Rng rng(4);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(2);
  FutureClip clip = random_clip(2, d.frame_w + 1, d.frame_h, frng);
  CHECK_THROWS_AS(encode_frames(clip, enc), std::invalid_argument);
}

TEST_CASE("pool_bins: T=16 B=4 ramp gives [2.5, 6.5, 10.5, 14.5]") {
  std::vector<float> vals(16);
  std::iota(vals.begin(), vals.end(), 1.0f);
  const BinnedEmbeddings u = pool_bins(scalar_rows(vals), 4);
  REQUIRE(u.B == 4);
  CHECK(u.u[0] == 2.5f);
  CHECK(u.u[1] == 6.5f);
  CHECK(u.u[2] == 10.5f);
  CHECK(u.u[3] == 14.5f);
}

TEST_CASE("pool_bins: T=5 B=4 boundary formula gives [0, 1, 2, 3.5]") {
  const BinnedEmbeddings u = pool_bins(scalar_rows({0, 1, 2, 3, 4}), 4);
  CHECK(u.u[0] == 0.0f);
  CHECK(u.u[1] == 1.0f);
  CHECK(u.u[2] == 2.0f);
  CHECK(u.u[3] == 3.5f);
}

TEST_CASE("pool_bins: constant rows stay constant for any T, B") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = rng.uniform_int(1, 32);
    const int B = rng.uniform_int(1, 8);
    const float c = rng.uniform(-2.0f, 2.0f);
    const BinnedEmbeddings u = pool_bins(scalar_rows(std::vector<float>(T, c)), B);
    for (int b = 0; b < B; ++b) CHECK(u.u[b] == doctest::Approx(c).epsilon(1e-7));
  }
}

TEST_CASE("pool_bins: matches the brute-force oracle for all T in [1,32], B in [1,8]") {
  Rng rng(11);
  for (int T = 1; T <= 32; ++T)
    for (int B = 1; B <= 8; ++B) {
      const int d_e = 3;
      std::vector<float> rows(static_cast<size_t>(T) * d_e);
      for (auto& v : rows) v = rng.uniform(-1.0f, 1.0f);
      FrameEmbeddings e;
      e.T = T;
      e.d_e = d_e;
      e.e = rows;
      const BinnedEmbeddings u = pool_bins(e, B);
      const auto want = pool_oracle(rows, T, d_e, B);
      REQUIRE(u.u.size() == want.size());
      for (size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(u.u[i] - want[i]) <= 1e-6f);
    }
}

TEST_CASE("pool_bins: permutation inside one bin leaves the output unchanged") {
  Rng rng(17);
  std::vector<float> rows(16);
  for (auto& v : rows) v = rng.uniform(-1.0f, 1.0f);
  const BinnedEmbeddings base = pool_bins(scalar_rows(rows), 4);
  // permute rows inside bin 2's range [4, 8)
  std::swap(rows[4], rows[7]);
  std::swap(rows[5], rows[6]);
  const BinnedEmbeddings perm = pool_bins(scalar_rows(rows), 4);
  for (int b = 0; b < 4; ++b) CHECK(base.u[b] == doctest::Approx(perm.u[b]).epsilon(1e-7));
}

TEST_CASE("pool_bins: B < 1 rejected") {
  CHECK_THROWS_AS(pool_bins(scalar_rows({1, 2}), 0), std::invalid_argument);
}

TEST_CASE("project: zero map, shape, matmul oracle") {
  const EncoderDims d = small_dims();
  Rng rng(6);
  EncoderParams enc = init_encoder(d, rng);

  BinnedEmbeddings u;
  u.B = d.B;
  u.d_e = d.d_e;
  u.u.resize(static_cast<size_t>(d.B) * d.d_e);
  for (auto& v : u.u) v = rng.uniform(-1.0f, 1.0f);

  EncoderParams zero = enc;
  std::fill(zero.proj.values.begin(), zero.proj.values.end(), 0.0f);
  const FutureLatent g0 = project(u, zero);
  CHECK(g0.g == std::vector<float>(d.d_g, 0.0f));

  const FutureLatent g = project(u, enc);
  REQUIRE(static_cast<int>(g.g.size()) == d.d_g);
  CHECK(g.present);
  // independent matmul oracle over the concatenated bins
  const int in = d.B * d.d_e;
  for (int o = 0; o < d.d_g; ++o) {
    double acc = enc.proj.values[static_cast<size_t>(in) * d.d_g + o];
    for (int i = 0; i < in; ++i)
      acc += static_cast<double>(enc.proj.values[static_cast<size_t>(o) * in + i]) * u.u[i];
    CHECK(g.g[o] == doctest::Approx(static_cast<float>(acc)).epsilon(1e-5));
  }
}

TEST_CASE("future_latent: NoFuture is the fixed absent latent") {
  const EncoderDims d = small_dims();
  Rng r1(1), r2(2);
  const EncoderParams enc_a = init_encoder(d, r1);
  const EncoderParams enc_b = init_encoder(d, r2);  // different encoder weights
  const FutureLatent a = future_latent(std::nullopt, enc_a);
  const FutureLatent b = future_latent(std::nullopt, enc_b);
  CHECK(!a.present);
  CHECK(a.g == std::vector<float>(d.d_g, 0.0f));
  CHECK(a.g == b.g);  // independent of encoder parameters
}

TEST_CASE("future_latent: equals the three-step composition") {
  const EncoderDims d = small_dims();
  Rng rng(8);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(13);
  const FutureClip clip = random_clip(7, d.frame_w, d.frame_h, frng);
  const FutureLatent direct = future_latent(clip, enc);
  CHECK(direct.present);
  const FutureLatent chained = project(pool_bins(encode_frames(clip, enc), d.B), enc);
  CHECK(direct.g == chained.g);
}

TEST_CASE("temporal_shift: identity at s=0, bitwise-equal latent") {
  const EncoderDims d = small_dims();
  Rng rng(21);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(22);
  const FutureClip clip = random_clip(6, d.frame_w, d.frame_h, frng);
  const FutureClip shifted = temporal_shift(clip, 0);
  for (int i = 0; i < clip.length(); ++i) CHECK(shifted.frames[i] == clip.frames[i]);
  CHECK(future_latent(shifted, enc).g == future_latent(clip, enc).g);
}

TEST_CASE("temporal_shift: constant clips are shift-invariant") {
  const EncoderDims d = small_dims();
  Rng rng(31);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(32);
  FutureClip clip;
  const Frame f = random_frame(d.frame_w, d.frame_h, frng);
  for (int i = 0; i < 8; ++i) clip.frames.push_back(f);
  const FutureLatent base = future_latent(clip, enc);
  for (int s = 1; s < 8; ++s)
    CHECK(future_latent(temporal_shift(clip, s), enc).g == base.g);
}

TEST_CASE("temporal_shift: padding repeats the final frame") {
  Rng frng(41);
  const FutureClip clip = random_clip(16, 5, 5, frng);
  const FutureClip s2 = temporal_shift(clip, 2);
  REQUIRE(s2.length() == 16);
  for (int i = 0; i < 14; ++i) CHECK(s2.frames[i] == clip.frames[i + 2]);
  CHECK(s2.frames[14] == clip.frames[15]);
  CHECK(s2.frames[15] == clip.frames[15]);
  CHECK_THROWS_AS(temporal_shift(clip, 16), std::invalid_argument);
  CHECK_THROWS_AS(temporal_shift(clip, -1), std::invalid_argument);
}

TEST_CASE("temporal_shift: s=2 moves exactly 2 frames out of each T=16/B=4 bin") {
  const int T = 16, B = 4, s = 2;
  for (int b = 1; b <= B; ++b) {
    const int lo = (b - 1) * T / B, hi = b * T / B;
    std::set<int> before, after;
    for (int i = lo; i < hi; ++i) {
      before.insert(i);
      after.insert(std::min(i + s, T - 1));  // original index landing in this bin slot
    }
    int left = 0;
    for (int i : before)
      if (!after.count(i)) ++left;
    CHECK(left == 2);
  }
}

TEST_CASE("future_latent_backward: gradients match finite differences") {
  EncoderDims d;
  d.frame_w = 8;
  d.frame_h = 8;
  d.d_e = 4;
  d.B = 2;
  d.d_g = 3;
  Rng rng(51);
  EncoderParams enc = init_encoder(d, rng);
  Rng frng(52);
  const FutureClip clip = random_clip(5, d.frame_w, d.frame_h, frng);
  std::vector<float> w(d.d_g);
  for (auto& v : w) v = rng.uniform(-1.0f, 1.0f);

  EncodeCache cache;
  future_latent_cached(clip, enc, cache);
  nn::GradVector gf, gp;
  gf.values.assign(enc.frame_net.values.size(), 0.0f);
  gp.values.assign(enc.proj.values.size(), 0.0f);
  future_latent_backward(enc, cache, w, gf, gp, 1.0f);

  auto loss = [&](const EncoderParams& p) {
    const FutureLatent g = future_latent(clip, p);
    double acc = 0.0;
    for (int k = 0; k < d.d_g; ++k) acc += static_cast<double>(w[k]) * g.g[k];
    return acc;
  };
  // the chain is piecewise-linear in each parameter (conv/relu/dense), so
  // central differences are exact away from relu kinks
  const float h = 1e-2f;
  Rng pick(53);
  auto check_subset = [&](nn::ParamVector& params, const nn::GradVector& grad, int count) {
    EncoderParams probe = enc;
    for (int trial = 0; trial < count; ++trial) {
      const size_t i = static_cast<size_t>(pick.next_u64() % params.values.size());
      nn::ParamVector& target =
          (&params == &enc.frame_net) ? probe.frame_net : probe.proj;
      const float keep = target.values[i];
      target.values[i] = keep + h;
      const double up = loss(probe);
      target.values[i] = keep - h;
      const double dn = loss(probe);
      target.values[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = grad.values[i];
      if (std::abs(an) > 1e-4)
        CHECK(std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)) < 1e-2);
    }
  };
  check_subset(enc.frame_net, gf, 60);
  check_subset(enc.proj, gp, 40);
}
