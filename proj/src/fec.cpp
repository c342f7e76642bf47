#include "tw/fec.hpp"

#include <cstring>
#include <stdexcept>

namespace tw::fec {

namespace {

struct ConvDims {
  int h1, w1, h2, w2;
};

ConvDims conv_dims(const EncoderDims& d) {
  ConvDims c;
  c.h1 = (d.frame_h - 3) / 2 + 1;
  c.w1 = (d.frame_w - 3) / 2 + 1;
  c.h2 = (c.h1 - 3) / 2 + 1;
  c.w2 = (c.w1 - 3) / 2 + 1;
  return c;
}

// 1-based bin b covers embedding rows [floor((b-1)T/B), floor(bT/B)).
std::pair<int, int> bin_range(int b, int T, int B) {
  const int lo = static_cast<int>(static_cast<long>(b - 1) * T / B);
  const int hi = static_cast<int>(static_cast<long>(b) * T / B);
  return {lo, hi};
}

}  // namespace

nn::NetSpec frame_encoder_spec(const EncoderDims& d) {
  const ConvDims c = conv_dims(d);
  nn::NetSpec spec;
  spec.push_back(nn::conv2d(3, d.frame_h, d.frame_w, 8, 3, 2));
  spec.push_back(nn::relu(8 * c.h1 * c.w1));
  spec.push_back(nn::conv2d(8, c.h1, c.w1, 16, 3, 2));
  spec.push_back(nn::relu(16 * c.h2 * c.w2));
  if (d.avg_pool) {
    spec.push_back(nn::global_avg_pool(16, c.h2 * c.w2));
    spec.push_back(nn::dense(16, d.d_e));
  } else {
    spec.push_back(nn::dense(16 * c.h2 * c.w2, d.d_e));
  }
  return spec;
}

nn::NetSpec projection_spec(const EncoderDims& d) {
  return {nn::dense(d.B * d.d_e, d.d_g)};
}

EncoderParams init_encoder(const EncoderDims& dims, Rng& rng) {
  EncoderParams enc;
  enc.dims = dims;
  Rng frame_rng = rng.stream("encoder/frame");
  Rng proj_rng = rng.stream("encoder/proj");
  enc.frame_net = nn::init_params(frame_encoder_spec(dims), frame_rng);
  enc.proj = nn::init_params(projection_spec(dims), proj_rng);
  return enc;
}

std::vector<float> frame_to_chw(const sim::Frame& frame) {
  const size_t plane = static_cast<size_t>(frame.w) * frame.h;
  std::vector<float> chw(plane * 3);
  const float* src = frame.px.data();
  for (size_t i = 0; i < plane; ++i) {
    chw[i] = src[i * 3 + 0];
    chw[plane + i] = src[i * 3 + 1];
    chw[2 * plane + i] = src[i * 3 + 2];
  }
  return chw;
}

std::vector<float> encode_frame(const sim::Frame& frame, const EncoderParams& enc) {
  if (frame.w != enc.dims.frame_w || frame.h != enc.dims.frame_h)
    throw std::invalid_argument("fec: frame size mismatch: expected " +
                                std::to_string(enc.dims.frame_w) + "x" +
                                std::to_string(enc.dims.frame_h) + ", got " +
                                std::to_string(frame.w) + "x" + std::to_string(frame.h));
  return nn::forward(enc.frame_net, frame_to_chw(frame));
}

FrameEmbeddings encode_frames(const future::FutureClip& clip, const EncoderParams& enc) {
  FrameEmbeddings out;
  out.T = clip.length();
  out.d_e = enc.dims.d_e;
  out.e.resize(static_cast<size_t>(out.T) * out.d_e);
  for (int i = 0; i < out.T; ++i) {
    const std::vector<float> row = encode_frame(clip.frames[i], enc);
    std::memcpy(out.e.data() + static_cast<size_t>(i) * out.d_e, row.data(),
                sizeof(float) * out.d_e);
  }
  return out;
}

BinnedEmbeddings pool_bins(const FrameEmbeddings& e, int B) {
  if (B < 1) throw std::invalid_argument("fec: bin count must be >= 1, got " + std::to_string(B));
  if (e.T < 1) throw std::invalid_argument("fec: cannot pool an empty embedding matrix");
  BinnedEmbeddings out;
  out.B = B;
  out.d_e = e.d_e;
  out.u.assign(static_cast<size_t>(B) * e.d_e, 0.0f);
  std::vector<double> acc(e.d_e);
  for (int b = 1; b <= B; ++b) {
    float* dst = out.u.data() + static_cast<size_t>(b - 1) * e.d_e;
    auto [lo, hi] = bin_range(b, e.T, B);
    if (lo >= hi) {
      const int src = std::min(lo, e.T - 1);
      std::memcpy(dst, e.row(src), sizeof(float) * e.d_e);
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = lo; i < hi; ++i) {
      const float* src = e.row(i);
      for (int k = 0; k < e.d_e; ++k) acc[k] += src[k];
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (int k = 0; k < e.d_e; ++k) dst[k] = static_cast<float>(acc[k] * inv);
  }
  return out;
}

FutureLatent project(const BinnedEmbeddings& u, const EncoderParams& enc) {
  if (u.B != enc.dims.B || u.d_e != enc.dims.d_e)
    throw std::invalid_argument("fec: binned embedding shape mismatch: expected " +
                                std::to_string(enc.dims.B) + "x" + std::to_string(enc.dims.d_e) +
                                ", got " + std::to_string(u.B) + "x" + std::to_string(u.d_e));
  FutureLatent latent;
  latent.g = nn::forward(enc.proj, u.u);
  latent.present = true;
  return latent;
}

FutureLatent future_latent(const std::optional<future::FutureClip>& clip,
                           const EncoderParams& enc) {
  if (!clip.has_value()) {
    FutureLatent latent;
    latent.g.assign(enc.dims.d_g, 0.0f);
    latent.present = false;
    return latent;
  }
  return project(pool_bins(encode_frames(*clip, enc), enc.dims.B), enc);
}

future::FutureClip temporal_shift(const future::FutureClip& clip, int s) {
  const int T = clip.length();
  if (s < 0 || s >= T)
    throw std::invalid_argument("fec: shift " + std::to_string(s) + " out of range [0, " +
                                std::to_string(T) + ")");
  future::FutureClip out;
  out.source = clip.source;
  out.robot_free = clip.robot_free;
  out.origin_task = clip.origin_task;
  out.frames.reserve(T);
  for (int i = 0; i < T; ++i) out.frames.push_back(clip.frames[std::min(i + s, T - 1)]);
  return out;
}

void future_latent_cached(const future::FutureClip& clip, const EncoderParams& enc,
                          EncodeCache& cache) {
  const int T = clip.length();
  const int d_e = enc.dims.d_e;
  cache.frame_ws.resize(T);
  cache.emb.T = T;
  cache.emb.d_e = d_e;
  cache.emb.e.resize(static_cast<size_t>(T) * d_e);
  for (int i = 0; i < T; ++i) {
    if (clip.frames[i].w != enc.dims.frame_w || clip.frames[i].h != enc.dims.frame_h)
      throw std::invalid_argument("fec: frame size mismatch in clip");
    nn::forward_ws(enc.frame_net, frame_to_chw(clip.frames[i]), cache.frame_ws[i]);
    std::memcpy(cache.emb.e.data() + static_cast<size_t>(i) * d_e,
                cache.frame_ws[i].acts.back().data(), sizeof(float) * d_e);
  }
  cache.bins = pool_bins(cache.emb, enc.dims.B);
  nn::forward_ws(enc.proj, cache.bins.u, cache.proj_ws);
  cache.latent.g = cache.proj_ws.acts.back();
  cache.latent.present = true;
}

void future_latent_backward(const EncoderParams& enc, const EncodeCache& cache,
                            std::span<const float> dg, nn::GradVector& grad_frame,
                            nn::GradVector& grad_proj, float scale) {
  const int B = enc.dims.B;
  const int d_e = enc.dims.d_e;
  const int T = cache.emb.T;

  std::vector<float> dbins;
  nn::backward_ws(enc.proj, cache.proj_ws, dg, grad_proj, scale, &dbins);

  // un-pool: averaged rows share the bin gradient, copied rows take it whole
  std::vector<float> drow(d_e);
  for (int b = 1; b <= B; ++b) {
    const float* db = dbins.data() + static_cast<size_t>(b - 1) * d_e;
    auto [lo, hi] = bin_range(b, T, B);
    if (lo >= hi) {
      const int src = std::min(lo, T - 1);
      nn::backward_ws(enc.frame_net, cache.frame_ws[src], std::span<const float>(db, d_e),
                      grad_frame, scale);
      continue;
    }
    const float inv = 1.0f / static_cast<float>(hi - lo);
    for (int k = 0; k < d_e; ++k) drow[k] = db[k] * inv;
    for (int i = lo; i < hi; ++i)
      nn::backward_ws(enc.frame_net, cache.frame_ws[i], drow, grad_frame, scale);
  }
}

}  // namespace tw::fec
