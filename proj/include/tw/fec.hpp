#pragma once

#include <optional>
#include <vector>

#include "tw/future.hpp"
#include "tw/nn.hpp"
#include "tw/twinworld.hpp"

namespace tw::fec {

// Row-major per-frame embedding matrix, one row per clip frame.
struct FrameEmbeddings {
  int T = 0, d_e = 0;
  std::vector<float> e;

  const float* row(int i) const { return e.data() + static_cast<size_t>(i) * d_e; }
};

struct BinnedEmbeddings {
  int B = 0, d_e = 0;
  std::vector<float> u;

  const float* row(int b) const { return u.data() + static_cast<size_t>(b) * d_e; }
};

// Conditioning vector g; `present` distinguishes a real latent from the
// NoFuture placeholder (zero vector, flag 0).
struct FutureLatent {
  std::vector<float> g;
  bool present = false;
};

struct EncoderDims {
  int frame_w = 32, frame_h = 32;
  int d_e = 64;
  int B = 4;
  int d_g = 64;
  bool avg_pool = false;  // flatten by default; true enables global average pooling
};

// Frame conv net (Frame -> R^{d_e}) plus the bin projection P
// (R^{B*d_e} -> R^{d_g}).
struct EncoderParams {
  EncoderDims dims;
  nn::ParamVector frame_net;
  nn::ParamVector proj;
};

nn::NetSpec frame_encoder_spec(const EncoderDims& dims);
nn::NetSpec projection_spec(const EncoderDims& dims);
EncoderParams init_encoder(const EncoderDims& dims, Rng& rng);

// HWC frame to the CHW layout the conv stack consumes.
std::vector<float> frame_to_chw(const sim::Frame& frame);

// Single-frame embedding (shared by history and future encoding).
std::vector<float> encode_frame(const sim::Frame& frame, const EncoderParams& enc);

FrameEmbeddings encode_frames(const future::FutureClip& clip, const EncoderParams& enc);

// Adaptive average pooling into B bins: bin b (1-based) averages rows
// [floor((b-1)T/B), floor(bT/B)); empty ranges copy row
// min(floor((b-1)T/B), T-1).
BinnedEmbeddings pool_bins(const FrameEmbeddings& e, int B);

FutureLatent project(const BinnedEmbeddings& u, const EncoderParams& enc);

// Full pipeline; absent clip yields the zero latent with presence flag 0.
FutureLatent future_latent(const std::optional<future::FutureClip>& clip,
                           const EncoderParams& enc);

// Shift frames forward by s, repeating the final frame; length preserved.
future::FutureClip temporal_shift(const future::FutureClip& clip, int s);

// Gradient plumbing for joint training: re-embeds the clip while keeping
// activations, then lets callers push dL/dg back through projection, bins
// and the frame net.
struct EncodeCache {
  std::vector<nn::Workspace> frame_ws;  // one per clip frame
  nn::Workspace proj_ws;
  FrameEmbeddings emb;
  BinnedEmbeddings bins;
  FutureLatent latent;
};

void future_latent_cached(const future::FutureClip& clip, const EncoderParams& enc,
                          EncodeCache& cache);
// Accumulates parameter gradients (scaled) for dL/dg into grad_frame/grad_proj.
void future_latent_backward(const EncoderParams& enc, const EncodeCache& cache,
                            std::span<const float> dg, nn::GradVector& grad_frame,
                            nn::GradVector& grad_proj, float scale);

}  // namespace tw::fec
