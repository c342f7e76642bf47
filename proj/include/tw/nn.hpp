#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tw/rng.hpp"

namespace tw::nn {

enum class LayerKind { Dense, Conv2d, Relu, Tanh, GlobalAvgPool };

// One layer of a feed-forward net. Dense uses in/out; Conv2d consumes a
// CHW tensor (in_c x in_h x in_w) with a square kernel, valid padding and
// a fixed stride; Relu/Tanh are elementwise over `in` values.
struct LayerDesc {
  LayerKind kind = LayerKind::Dense;
  int in = 0, out = 0;                         // Dense / elementwise
  int in_c = 0, in_h = 0, in_w = 0;            // Conv2d input
  int out_c = 0, ksize = 0, stride = 1;        // Conv2d kernel

  int conv_out_h() const { return (in_h - ksize) / stride + 1; }
  int conv_out_w() const { return (in_w - ksize) / stride + 1; }
  int input_size() const;
  int output_size() const;
  int param_count() const;
};

using NetSpec = std::vector<LayerDesc>;

LayerDesc dense(int in, int out);
LayerDesc conv2d(int in_c, int in_h, int in_w, int out_c, int ksize, int stride);
LayerDesc relu(int n);
LayerDesc tanh_layer(int n);
LayerDesc global_avg_pool(int channels, int plane);  // CHW -> per-channel mean

int param_count(const NetSpec& net);
int input_size(const NetSpec& net);
int output_size(const NetSpec& net);

// Flat float32 parameters plus the layer layout they belong to.
struct ParamVector {
  NetSpec layers;
  std::vector<float> values;

  int size() const { return static_cast<int>(values.size()); }
};

struct GradVector {
  std::vector<float> values;
};

// Glorot-uniform weights, zero biases, drawn from the given stream.
ParamVector init_params(const NetSpec& net, Rng& rng);

// Reused activation storage for the hot training loops.
struct Workspace {
  std::vector<std::vector<float>> acts;  // acts[0] = input, acts[i+1] = layer i output
};

std::vector<float> forward(const ParamVector& params, std::span<const float> input);

// Forward keeping every intermediate activation in `ws`.
void forward_ws(const ParamVector& params, std::span<const float> input, Workspace& ws);

// Accumulates d(upstream . output)/d(params) into grad (scaled by `scale`)
// and optionally d/d(input) into input_grad (overwritten).
void backward_ws(const ParamVector& params, const Workspace& ws,
                 std::span<const float> upstream, GradVector& grad, float scale = 1.0f,
                 std::vector<float>* input_grad = nullptr);

GradVector backward(const ParamVector& params, std::span<const float> input,
                    std::span<const float> upstream,
                    std::vector<float>* input_grad = nullptr);

struct AdamState {
  std::vector<float> m, v;
  long step = 0;
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

AdamState make_adam(int n, float lr);

// Standard bias-corrected Adam. Rejects non-finite gradients without
// touching the state.
void adam_step_inplace(AdamState& state, ParamVector& params, const GradVector& grads);
std::pair<AdamState, ParamVector> adam_step(AdamState state, ParamVector params,
                                            const GradVector& grads);

// Checkpoint container: JSON header with layer descriptors and counts per
// named sub-network, followed by the raw float32 values. Byte-exact.
struct NamedNet {
  std::string name;
  const ParamVector* params;
};

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedNet>& nets,
                     const std::string& meta_json = "{}");
std::vector<std::pair<std::string, ParamVector>> load_checkpoint(
    const std::filesystem::path& path, std::string* meta_json = nullptr);

}  // namespace tw::nn
