#include "tw/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tw/blob.hpp"

#include <json.hpp>

namespace tw::nn {

namespace {

[[noreturn]] void shape_error(const char* what, int expected, int actual) {
  throw std::invalid_argument(std::string("nn: ") + what + ": expected " +
                              std::to_string(expected) + ", got " + std::to_string(actual));
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::GlobalAvgPool: return "gap";
  }
  return "?";
}

LayerKind kind_from_name(const std::string& s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "relu") return LayerKind::Relu;
  if (s == "tanh") return LayerKind::Tanh;
  if (s == "gap") return LayerKind::GlobalAvgPool;
  throw std::runtime_error("nn: unknown layer kind '" + s + "'");
}

}  // namespace

int LayerDesc::input_size() const {
  switch (kind) {
    case LayerKind::Dense: return in;
    case LayerKind::Conv2d: return in_c * in_h * in_w;
    case LayerKind::Relu:
    case LayerKind::Tanh: return in;
    case LayerKind::GlobalAvgPool: return in_c * in;
  }
  return 0;
}

int LayerDesc::output_size() const {
  switch (kind) {
    case LayerKind::Dense: return out;
    case LayerKind::Conv2d: return out_c * conv_out_h() * conv_out_w();
    case LayerKind::Relu:
    case LayerKind::Tanh: return in;
    case LayerKind::GlobalAvgPool: return in_c;
  }
  return 0;
}

int LayerDesc::param_count() const {
  switch (kind) {
    case LayerKind::Dense: return in * out + out;
    case LayerKind::Conv2d: return out_c * in_c * ksize * ksize + out_c;
    case LayerKind::Relu:
    case LayerKind::Tanh:
    case LayerKind::GlobalAvgPool: return 0;
  }
  return 0;
}

LayerDesc dense(int in, int out) {
  LayerDesc d;
  d.kind = LayerKind::Dense;
  d.in = in;
  d.out = out;
  return d;
}

LayerDesc conv2d(int in_c, int in_h, int in_w, int out_c, int ksize, int stride) {
  LayerDesc d;
  d.kind = LayerKind::Conv2d;
  d.in_c = in_c;
  d.in_h = in_h;
  d.in_w = in_w;
  d.out_c = out_c;
  d.ksize = ksize;
  d.stride = stride;
  if (d.conv_out_h() < 1 || d.conv_out_w() < 1)
    throw std::invalid_argument("nn: conv2d kernel larger than input");
  return d;
}

LayerDesc relu(int n) {
  LayerDesc d;
  d.kind = LayerKind::Relu;
  d.in = n;
  return d;
}

LayerDesc tanh_layer(int n) {
  LayerDesc d;
  d.kind = LayerKind::Tanh;
  d.in = n;
  return d;
}

LayerDesc global_avg_pool(int channels, int plane) {
  LayerDesc d;
  d.kind = LayerKind::GlobalAvgPool;
  d.in_c = channels;
  d.in = plane;  // elements per channel
  return d;
}

int param_count(const NetSpec& net) {
  int n = 0;
  for (const auto& l : net) n += l.param_count();
  return n;
}

int input_size(const NetSpec& net) {
  return net.empty() ? 0 : net.front().input_size();
}

int output_size(const NetSpec& net) {
  return net.empty() ? 0 : net.back().output_size();
}

ParamVector init_params(const NetSpec& net, Rng& rng) {
  ParamVector p;
  p.layers = net;
  p.values.assign(param_count(net), 0.0f);
  int off = 0;
  for (const auto& l : net) {
    if (l.kind == LayerKind::Dense) {
      const float bound = std::sqrt(6.0f / static_cast<float>(l.in + l.out));
      for (int i = 0; i < l.in * l.out; ++i) p.values[off + i] = rng.uniform(-bound, bound);
      off += l.param_count();  // biases stay zero
    } else if (l.kind == LayerKind::Conv2d) {
      const int fan_in = l.in_c * l.ksize * l.ksize;
      const int fan_out = l.out_c * l.ksize * l.ksize;
      const float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
      const int nw = l.out_c * l.in_c * l.ksize * l.ksize;
      for (int i = 0; i < nw; ++i) p.values[off + i] = rng.uniform(-bound, bound);
      off += l.param_count();
    }
  }
  return p;
}

namespace {

void dense_forward(const LayerDesc& l, const float* w, const float* x, float* y) {
  const float* b = w + l.in * l.out;
  for (int o = 0; o < l.out; ++o) {
    const float* row = w + o * l.in;
    float acc = b[o];
    for (int i = 0; i < l.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void conv_forward(const LayerDesc& l, const float* w, const float* x, float* y) {
  const int oh = l.conv_out_h(), ow = l.conv_out_w();
  const float* bias = w + l.out_c * l.in_c * l.ksize * l.ksize;
  for (int oc = 0; oc < l.out_c; ++oc) {
    float* yplane = y + oc * oh * ow;
    for (int i = 0; i < oh * ow; ++i) yplane[i] = bias[oc];
    for (int ic = 0; ic < l.in_c; ++ic) {
      const float* xplane = x + ic * l.in_h * l.in_w;
      const float* k = w + ((oc * l.in_c) + ic) * l.ksize * l.ksize;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ky = 0; ky < l.ksize; ++ky) {
          const float* xrow = xplane + (oy * l.stride + ky) * l.in_w;
          float* yrow = yplane + oy * ow;
          for (int kx = 0; kx < l.ksize; ++kx) {
            const float kv = k[ky * l.ksize + kx];
            for (int ox = 0; ox < ow; ++ox) yrow[ox] += kv * xrow[ox * l.stride + kx];
          }
        }
      }
    }
  }
}

void conv_backward(const LayerDesc& l, const float* w, const float* x, const float* up,
                   float* gw, float* gx, float scale) {
  const int oh = l.conv_out_h(), ow = l.conv_out_w();
  float* gbias = gw + l.out_c * l.in_c * l.ksize * l.ksize;
  for (int oc = 0; oc < l.out_c; ++oc) {
    const float* uplane = up + oc * oh * ow;
    float acc = 0.0f;
    for (int i = 0; i < oh * ow; ++i) acc += uplane[i];
    gbias[oc] += scale * acc;
    for (int ic = 0; ic < l.in_c; ++ic) {
      const float* xplane = x + ic * l.in_h * l.in_w;
      const float* k = w + ((oc * l.in_c) + ic) * l.ksize * l.ksize;
      float* gk = gw + ((oc * l.in_c) + ic) * l.ksize * l.ksize;
      float* gxplane = gx ? gx + ic * l.in_h * l.in_w : nullptr;
      for (int oy = 0; oy < oh; ++oy) {
        const float* urow = uplane + oy * ow;
        for (int ky = 0; ky < l.ksize; ++ky) {
          const float* xrow = xplane + (oy * l.stride + ky) * l.in_w;
          float* gxrow = gxplane ? gxplane + (oy * l.stride + ky) * l.in_w : nullptr;
          for (int kx = 0; kx < l.ksize; ++kx) {
            float gacc = 0.0f;
            const float kv = k[ky * l.ksize + kx];
            for (int ox = 0; ox < ow; ++ox) {
              const float u = urow[ox];
              gacc += u * xrow[ox * l.stride + kx];
              if (gxrow) gxrow[ox * l.stride + kx] += kv * u;
            }
            gk[ky * l.ksize + kx] += scale * gacc;
          }
        }
      }
    }
  }
}

}  // namespace

void forward_ws(const ParamVector& params, std::span<const float> input, Workspace& ws) {
  const NetSpec& net = params.layers;
  if (static_cast<int>(params.values.size()) != param_count(net))
    shape_error("param vector length", param_count(net), static_cast<int>(params.values.size()));
  if (static_cast<int>(input.size()) != input_size(net))
    shape_error("input length", input_size(net), static_cast<int>(input.size()));

  ws.acts.resize(net.size() + 1);
  ws.acts[0].assign(input.begin(), input.end());
  int off = 0;
  for (size_t li = 0; li < net.size(); ++li) {
    const LayerDesc& l = net[li];
    const float* x = ws.acts[li].data();
    ws.acts[li + 1].resize(l.output_size());
    float* y = ws.acts[li + 1].data();
    switch (l.kind) {
      case LayerKind::Dense:
        dense_forward(l, params.values.data() + off, x, y);
        break;
      case LayerKind::Conv2d:
        conv_forward(l, params.values.data() + off, x, y);
        break;
      case LayerKind::Relu:
        for (int i = 0; i < l.in; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
        break;
      case LayerKind::Tanh:
        for (int i = 0; i < l.in; ++i) y[i] = std::tanh(x[i]);
        break;
      case LayerKind::GlobalAvgPool: {
        const float inv = 1.0f / static_cast<float>(l.in);
        for (int c = 0; c < l.in_c; ++c) {
          double acc = 0.0;
          const float* plane = x + static_cast<size_t>(c) * l.in;
          for (int i = 0; i < l.in; ++i) acc += plane[i];
          y[c] = static_cast<float>(acc) * inv;
        }
        break;
      }
    }
    off += l.param_count();
  }
}

std::vector<float> forward(const ParamVector& params, std::span<const float> input) {
  Workspace ws;
  forward_ws(params, input, ws);
  return ws.acts.back();
}

void backward_ws(const ParamVector& params, const Workspace& ws,
                 std::span<const float> upstream, GradVector& grad, float scale,
                 std::vector<float>* input_grad) {
  const NetSpec& net = params.layers;
  if (ws.acts.size() != net.size() + 1)
    throw std::invalid_argument("nn: workspace does not match network");
  if (static_cast<int>(upstream.size()) != output_size(net))
    shape_error("upstream length", output_size(net), static_cast<int>(upstream.size()));
  grad.values.resize(params.values.size(), 0.0f);

  // parameter offsets per layer
  std::vector<int> offs(net.size());
  int off = 0;
  for (size_t i = 0; i < net.size(); ++i) {
    offs[i] = off;
    off += net[i].param_count();
  }

  std::vector<float> up(upstream.begin(), upstream.end());
  std::vector<float> down;
  for (int li = static_cast<int>(net.size()) - 1; li >= 0; --li) {
    const LayerDesc& l = net[li];
    const float* x = ws.acts[li].data();
    const float* y = ws.acts[li + 1].data();
    const bool need_down = li > 0 || input_grad != nullptr;
    down.assign(l.input_size(), 0.0f);
    switch (l.kind) {
      case LayerKind::Dense: {
        const float* w = params.values.data() + offs[li];
        float* gw = grad.values.data() + offs[li];
        float* gb = gw + l.in * l.out;
        for (int o = 0; o < l.out; ++o) {
          const float u = up[o];
          gb[o] += scale * u;
          float* grow = gw + o * l.in;
          const float* wrow = w + o * l.in;
          const float su = scale * u;
          for (int i = 0; i < l.in; ++i) {
            grow[i] += su * x[i];
            if (need_down) down[i] += wrow[i] * u;
          }
        }
        break;
      }
      case LayerKind::Conv2d:
        conv_backward(l, params.values.data() + offs[li], x, up.data(),
                      grad.values.data() + offs[li], need_down ? down.data() : nullptr, scale);
        break;
      case LayerKind::Relu:
        for (int i = 0; i < l.in; ++i) down[i] = x[i] > 0.0f ? up[i] : 0.0f;
        break;
      case LayerKind::Tanh:
        for (int i = 0; i < l.in; ++i) down[i] = up[i] * (1.0f - y[i] * y[i]);
        break;
      case LayerKind::GlobalAvgPool: {
        const float inv = 1.0f / static_cast<float>(l.in);
        for (int c = 0; c < l.in_c; ++c) {
          const float u = up[c] * inv;
          float* plane = down.data() + static_cast<size_t>(c) * l.in;
          for (int i = 0; i < l.in; ++i) plane[i] = u;
        }
        break;
      }
    }
    up.swap(down);
  }
  if (input_grad) *input_grad = std::move(up);
}

GradVector backward(const ParamVector& params, std::span<const float> input,
                    std::span<const float> upstream, std::vector<float>* input_grad) {
  Workspace ws;
  forward_ws(params, input, ws);
  GradVector g;
  backward_ws(params, ws, upstream, g, 1.0f, input_grad);
  return g;
}

AdamState make_adam(int n, float lr) {
  AdamState s;
  s.m.assign(n, 0.0f);
  s.v.assign(n, 0.0f);
  s.lr = lr;
  return s;
}

void adam_step_inplace(AdamState& state, ParamVector& params, const GradVector& grads) {
  const size_t n = params.values.size();
  if (grads.values.size() != n)
    shape_error("gradient length", static_cast<int>(n), static_cast<int>(grads.values.size()));
  if (state.m.size() != n || state.v.size() != n)
    shape_error("adam state length", static_cast<int>(n), static_cast<int>(state.m.size()));
  for (float g : grads.values)
    if (!std::isfinite(g)) throw std::runtime_error("nn: non-finite gradient, update rejected");

  state.step += 1;
  const float b1 = state.beta1, b2 = state.beta2;
  const float c1 = 1.0f - std::pow(b1, static_cast<float>(state.step));
  const float c2 = 1.0f - std::pow(b2, static_cast<float>(state.step));
  const float lr = state.lr;
  float* m = state.m.data();
  float* v = state.v.data();
  float* p = params.values.data();
  const float* g = grads.values.data();
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0f - b1) * g[i];
    v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
    const float mhat = m[i] / c1;
    const float vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

std::pair<AdamState, ParamVector> adam_step(AdamState state, ParamVector params,
                                            const GradVector& grads) {
  adam_step_inplace(state, params, grads);
  return {std::move(state), std::move(params)};
}

namespace {

nlohmann::json layer_to_json(const LayerDesc& l) {
  nlohmann::json j;
  j["kind"] = kind_name(l.kind);
  switch (l.kind) {
    case LayerKind::Dense:
      j["in"] = l.in;
      j["out"] = l.out;
      break;
    case LayerKind::Conv2d:
      j["in_c"] = l.in_c;
      j["in_h"] = l.in_h;
      j["in_w"] = l.in_w;
      j["out_c"] = l.out_c;
      j["ksize"] = l.ksize;
      j["stride"] = l.stride;
      break;
    case LayerKind::Relu:
    case LayerKind::Tanh:
      j["in"] = l.in;
      break;
    case LayerKind::GlobalAvgPool:
      j["in_c"] = l.in_c;
      j["in"] = l.in;
      break;
  }
  return j;
}

LayerDesc layer_from_json(const nlohmann::json& j) {
  const LayerKind k = kind_from_name(j.at("kind").get<std::string>());
  switch (k) {
    case LayerKind::Dense: return dense(j.at("in"), j.at("out"));
    case LayerKind::Conv2d:
      return conv2d(j.at("in_c"), j.at("in_h"), j.at("in_w"), j.at("out_c"), j.at("ksize"),
                    j.at("stride"));
    case LayerKind::Relu: return relu(j.at("in"));
    case LayerKind::Tanh: return tanh_layer(j.at("in"));
    case LayerKind::GlobalAvgPool: return global_avg_pool(j.at("in_c"), j.at("in"));
  }
  throw std::runtime_error("nn: bad layer json");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedNet>& nets,
                     const std::string& meta_json) {
  Blob blob;
  blob.header["format"] = "tw-checkpoint-1";
  blob.header["meta"] = nlohmann::json::parse(meta_json);
  nlohmann::json subnets = nlohmann::json::array();
  for (const auto& [name, params] : nets) {
    nlohmann::json sj;
    sj["name"] = name;
    sj["param_count"] = params->values.size();
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : params->layers) layers.push_back(layer_to_json(l));
    sj["layers"] = layers;
    subnets.push_back(sj);
    blob.arrays.emplace_back(name, params->values);
  }
  blob.header["subnets"] = subnets;
  write_blob(path, blob);
}

std::vector<std::pair<std::string, ParamVector>> load_checkpoint(
    const std::filesystem::path& path, std::string* meta_json) {
  Blob blob = read_blob(path);
  if (blob.header.value("format", "") != "tw-checkpoint-1")
    throw std::runtime_error("nn: not a checkpoint file: " + path.string());
  if (meta_json) *meta_json = blob.header.at("meta").dump();
  std::vector<std::pair<std::string, ParamVector>> out;
  for (const auto& sj : blob.header.at("subnets")) {
    ParamVector p;
    for (const auto& lj : sj.at("layers")) p.layers.push_back(layer_from_json(lj));
    const std::string name = sj.at("name").get<std::string>();
    p.values = blob.array(name);
    const int expect = param_count(p.layers);
    if (static_cast<int>(p.values.size()) != expect ||
        sj.at("param_count").get<int>() != expect)
      shape_error("checkpoint param count", expect, static_cast<int>(p.values.size()));
    out.emplace_back(name, std::move(p));
  }
  return out;
}

}  // namespace tw::nn
