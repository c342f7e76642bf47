#include <cmath>
#include <stdexcept>

#include "tw/policy.hpp"

namespace tw::policy {

namespace {

nn::NetSpec velocity_spec(const PolicyDims& dims, const SFPConfig& cfg) {
  const int chunk = cfg.T_train * dims.d_a;
  const int in = chunk + 1 + dims.feature_dim();
  return {nn::dense(in, dims.trunk_hidden), nn::relu(dims.trunk_hidden),
          nn::dense(dims.trunk_hidden, dims.trunk_hidden), nn::relu(dims.trunk_hidden),
          nn::dense(dims.trunk_hidden, chunk)};
}

}  // namespace

SFPModel init_sfp_model(const PolicyDims& dims, const SFPConfig& cfg, Rng& rng) {
  SFPModel m;
  m.dims = dims;
  m.cfg = cfg;
  m.enc = fec::init_encoder(dims.enc, rng);
  Rng hist_rng = rng.stream("sfp/hist_head");
  Rng vel_rng = rng.stream("sfp/vel");
  m.hist_head = nn::init_params({nn::dense(dims.hist_in(), dims.hist_dim)}, hist_rng);
  m.vel = nn::init_params(velocity_spec(dims, cfg), vel_rng);
  return m;
}

void sfp_flow_targets(std::span<const float> sigma, std::span<const float> sigma_dot,
                      float lambda, std::span<const float> eps, float k, float sigma0,
                      std::span<float> a_out, std::span<float> v_out) {
  const size_t n = sigma.size();
  if (sigma_dot.size() != n || eps.size() != n || a_out.size() != n || v_out.size() != n)
    throw std::invalid_argument("sfp: chunk shape mismatch in flow targets");
  const float decay = sigma0 * std::exp(-k * lambda);
  for (size_t i = 0; i < n; ++i) {
    const float eta = decay * eps[i];
    a_out[i] = sigma[i] + eta;
    v_out[i] = sigma_dot[i] - k * eta;
  }
}

SFPOptimizer make_sfp_optimizer(const SFPModel& m, float lr) {
  SFPOptimizer opt;
  opt.frame = nn::make_adam(m.enc.frame_net.size(), lr);
  opt.proj = nn::make_adam(m.enc.proj.size(), lr);
  opt.hist = nn::make_adam(m.hist_head.size(), lr);
  opt.vel = nn::make_adam(m.vel.size(), lr);
  return opt;
}

float sfp_loss_and_grad(const SFPModel& m, std::span<const TrainSample> batch, Rng& rng,
                        SFPGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("sfp: empty training batch");
  const int chunk = m.chunk_dim();
  const int T = m.cfg.T_train;
  const int d_a = m.dims.d_a;

  if (grads) {
    grads->frame.values.assign(m.enc.frame_net.values.size(), 0.0f);
    grads->proj.values.assign(m.enc.proj.values.size(), 0.0f);
    grads->hist.values.assign(m.hist_head.values.size(), 0.0f);
    grads->vel.values.assign(m.vel.values.size(), 0.0f);
  }

  detail::FeatureWork w;
  nn::Workspace vel_ws;
  std::vector<float> sigma_dot(chunk), eps(chunk), a(chunk), v(chunk), vin, upstream(chunk),
      dvin;
  double loss = 0.0;
  const float inv = 1.0f / (static_cast<float>(batch.size()) * chunk);

  for (const TrainSample& s : batch) {
    if (static_cast<int>(s.chunk_norm.size()) != chunk)
      throw std::invalid_argument("sfp: training chunk shorter than T_train * d_a: got " +
                                  std::to_string(s.chunk_norm.size()) + ", want " +
                                  std::to_string(chunk));
    // finite-difference velocity, last row repeated
    const float dt_inv = static_cast<float>(T - 1);
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < d_a; ++k) {
        const int i = t * d_a + k;
        if (t + 1 < T)
          sigma_dot[i] = (s.chunk_norm[(t + 1) * d_a + k] - s.chunk_norm[i]) * dt_inv;
        else
          sigma_dot[i] = T >= 2 ? sigma_dot[(T - 2) * d_a + k] : 0.0f;
      }
    const float lambda = static_cast<float>(rng.uniform());
    for (auto& e : eps) e = rng.normal();
    sfp_flow_targets(s.chunk_norm, sigma_dot, lambda, eps, m.cfg.k, m.cfg.sigma0, a, v);

    detail::feature_forward(m.enc, m.hist_head, m.dims, s, w);
    vin.clear();
    vin.insert(vin.end(), a.begin(), a.end());
    vin.push_back(lambda);
    vin.insert(vin.end(), w.feat.begin(), w.feat.end());
    nn::forward_ws(m.vel, vin, vel_ws);
    const auto& out = vel_ws.acts.back();
    for (int i = 0; i < chunk; ++i) {
      const float r = out[i] - v[i];
      loss += static_cast<double>(r) * r;
      upstream[i] = 2.0f * r * inv;
    }
    if (grads) {
      nn::backward_ws(m.vel, vel_ws, upstream, grads->vel, 1.0f, &dvin);
      detail::feature_backward(m.enc, m.hist_head, m.dims, w,
                               std::span<const float>(dvin.data() + chunk + 1,
                                                      m.dims.feature_dim()),
                               grads->frame, grads->proj, grads->hist, 1.0f);
    }
  }
  return static_cast<float>(loss * inv);
}

float sfp_train_step(SFPModel& m, std::span<const TrainSample> batch, SFPOptimizer& opt,
                     Rng& rng) {
  SFPGrads grads;
  const float loss = sfp_loss_and_grad(m, batch, rng, &grads);
  nn::adam_step_inplace(opt.frame, m.enc.frame_net, grads.frame);
  nn::adam_step_inplace(opt.proj, m.enc.proj, grads.proj);
  nn::adam_step_inplace(opt.hist, m.hist_head, grads.hist);
  nn::adam_step_inplace(opt.vel, m.vel, grads.vel);
  return loss;
}

std::vector<float> sfp_sample_action(const SFPModel& m, std::span<const float> features,
                                     std::span<const float> prev_chunk, Rng& rng, int n_ode) {
  if (n_ode < 1) throw std::invalid_argument("sfp: n_ode must be >= 1");
  const int chunk = m.chunk_dim();
  if (static_cast<int>(prev_chunk.size()) != chunk)
    throw std::invalid_argument("sfp: prev chunk size mismatch");

  std::vector<float> a(prev_chunk.begin(), prev_chunk.end());
  for (auto& v : a) v += m.cfg.sigma0 * rng.normal();

  std::vector<float> vin;
  const float h = 1.0f / static_cast<float>(n_ode);
  for (int step = 0; step < n_ode; ++step) {
    const float lambda = static_cast<float>(step) * h;
    vin.clear();
    vin.insert(vin.end(), a.begin(), a.end());
    vin.push_back(lambda);
    vin.insert(vin.end(), features.begin(), features.end());
    const std::vector<float> v = nn::forward(m.vel, vin);
    for (int i = 0; i < chunk; ++i) a[i] += h * v[i];
  }
  for (auto& v : a) v = std::clamp(v, -1.0f, 1.0f);
  return a;
}

}  // namespace tw::policy
