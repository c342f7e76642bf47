#include "tw/policy.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace tw::policy {

std::array<float, 3> to_norm_action(const sim::Action& a, float delta_max) {
  auto clamp1 = [](float v) { return std::min(std::max(v, -1.0f), 1.0f); };
  return {clamp1(a.dx / delta_max), clamp1(a.dy / delta_max), clamp1(a.grip * 2.0f - 1.0f)};
}

sim::Action to_env_action(const std::array<float, 3>& a, float delta_max) {
  sim::Action out;
  out.dx = a[0] * delta_max;
  out.dy = a[1] * delta_max;
  out.grip = (a[2] + 1.0f) * 0.5f;
  return out;
}

nn::NetSpec trunk_spec(const PolicyDims& d) {
  return {nn::dense(d.feature_dim(), d.trunk_hidden), nn::relu(d.trunk_hidden),
          nn::dense(d.trunk_hidden, d.trunk_hidden), nn::relu(d.trunk_hidden),
          nn::dense(d.trunk_hidden, d.d_a), nn::tanh_layer(d.d_a)};
}

nn::NetSpec critic_spec(const PolicyDims& d) {
  return {nn::dense(d.feature_dim() + d.d_a, d.critic_hidden), nn::relu(d.critic_hidden),
          nn::dense(d.critic_hidden, d.critic_hidden), nn::relu(d.critic_hidden),
          nn::dense(d.critic_hidden, 1)};
}

namespace {

nn::NetSpec hist_head_spec(const PolicyDims& d) {
  return {nn::dense(d.hist_in(), d.hist_dim)};
}

void append_onehot(std::vector<float>& feat, sim::TaskId task, int n_tasks) {
  const size_t base = feat.size();
  feat.resize(base + n_tasks, 0.0f);
  feat[base + static_cast<int>(task)] = 1.0f;
}

}  // namespace

BCPolicy init_bc_policy(const PolicyDims& dims, Rng& rng) {
  BCPolicy p;
  p.dims = dims;
  p.enc = fec::init_encoder(dims.enc, rng);
  Rng hist_rng = rng.stream("policy/hist_head");
  Rng trunk_rng = rng.stream("policy/trunk");
  p.hist_head = nn::init_params(hist_head_spec(dims), hist_rng);
  p.trunk = nn::init_params(trunk_spec(dims), trunk_rng);
  return p;
}

std::vector<float> features_from_embeddings(const BCPolicy& p,
                                            std::span<const float> hist_embeddings,
                                            const fec::FutureLatent& g, sim::TaskId task) {
  if (static_cast<int>(hist_embeddings.size()) != p.dims.hist_in())
    throw std::invalid_argument("policy: history embedding size mismatch: expected " +
                                std::to_string(p.dims.hist_in()) + ", got " +
                                std::to_string(hist_embeddings.size()));
  if (static_cast<int>(g.g.size()) != p.dims.enc.d_g)
    throw std::invalid_argument("policy: latent size mismatch");
  std::vector<float> feat = nn::forward(p.hist_head, hist_embeddings);
  feat.insert(feat.end(), g.g.begin(), g.g.end());
  feat.push_back(g.present ? 1.0f : 0.0f);
  append_onehot(feat, task, p.dims.n_tasks);
  return feat;
}

std::vector<float> build_features(const BCPolicy& p, const PolicyInput& in) {
  if (static_cast<int>(in.history.size()) != p.dims.K + 1)
    throw std::invalid_argument("policy: history length mismatch: expected " +
                                std::to_string(p.dims.K + 1) + ", got " +
                                std::to_string(in.history.size()));
  std::vector<float> emb;
  emb.reserve(p.dims.hist_in());
  for (const auto& frame : in.history) {
    const std::vector<float> e = fec::encode_frame(frame, p.enc);
    emb.insert(emb.end(), e.begin(), e.end());
  }
  return features_from_embeddings(p, emb, in.g, in.task);
}

std::array<float, 3> actor_forward(const nn::ParamVector& trunk,
                                   std::span<const float> features) {
  const std::vector<float> out = nn::forward(trunk, features);
  return {out[0], out[1], out[2]};
}

sim::Action bc_action(const BCPolicy& p, const PolicyInput& in, float delta_max) {
  return to_env_action(actor_forward(p.trunk, build_features(p, in)), delta_max);
}

BCOptimizer make_bc_optimizer(const BCPolicy& p, float lr) {
  BCOptimizer opt;
  opt.frame = nn::make_adam(p.enc.frame_net.size(), lr);
  opt.proj = nn::make_adam(p.enc.proj.size(), lr);
  opt.hist = nn::make_adam(p.hist_head.size(), lr);
  opt.trunk = nn::make_adam(p.trunk.size(), lr);
  return opt;
}

namespace detail {

void feature_forward(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                     const PolicyDims& dims, const TrainSample& s, FeatureWork& w) {
  const int K1 = dims.K + 1;
  if (static_cast<int>(s.history.size()) != K1)
    throw std::invalid_argument("policy: history length mismatch in training sample");
  w.hist_ws.resize(K1);
  w.emb.resize(dims.hist_in());
  for (int i = 0; i < K1; ++i) {
    nn::forward_ws(enc.frame_net, fec::frame_to_chw(s.history[i]), w.hist_ws[i]);
    std::memcpy(w.emb.data() + static_cast<size_t>(i) * dims.enc.d_e,
                w.hist_ws[i].acts.back().data(), sizeof(float) * dims.enc.d_e);
  }
  nn::forward_ws(hist_head, w.emb, w.head_ws);

  w.feat.clear();
  const auto& h = w.head_ws.acts.back();
  w.feat.insert(w.feat.end(), h.begin(), h.end());
  w.has_future = s.clip.has_value();
  if (w.has_future) {
    fec::future_latent_cached(*s.clip, enc, w.cache);
    w.feat.insert(w.feat.end(), w.cache.latent.g.begin(), w.cache.latent.g.end());
    w.feat.push_back(1.0f);
  } else {
    w.feat.insert(w.feat.end(), dims.enc.d_g, 0.0f);
    w.feat.push_back(0.0f);
  }
  append_onehot(w.feat, s.task, dims.n_tasks);
}

// Pushes dL/dfeatures back into the perception parameter gradients.
void feature_backward(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                      const PolicyDims& dims, const FeatureWork& w,
                      std::span<const float> dfeat, nn::GradVector& g_frame,
                      nn::GradVector& g_proj, nn::GradVector& g_hist, float scale) {
  std::vector<float> demb;
  nn::backward_ws(hist_head, w.head_ws, dfeat.subspan(0, dims.hist_dim), g_hist, scale, &demb);
  for (int i = 0; i < dims.K + 1; ++i)
    nn::backward_ws(enc.frame_net, w.hist_ws[i],
                    std::span<const float>(demb.data() + static_cast<size_t>(i) * dims.enc.d_e,
                                           dims.enc.d_e),
                    g_frame, scale);
  if (w.has_future)
    fec::future_latent_backward(enc, w.cache, dfeat.subspan(dims.hist_dim, dims.enc.d_g),
                                g_frame, g_proj, scale);
}

}  // namespace detail

float bc_train_step(BCPolicy& p, std::span<const TrainSample> batch, BCOptimizer& opt) {
  if (batch.empty()) throw std::invalid_argument("policy: empty training batch");
  const int d_a = p.dims.d_a;
  nn::GradVector g_frame, g_proj, g_hist, g_trunk;
  g_frame.values.assign(p.enc.frame_net.values.size(), 0.0f);
  g_proj.values.assign(p.enc.proj.values.size(), 0.0f);
  g_hist.values.assign(p.hist_head.values.size(), 0.0f);
  g_trunk.values.assign(p.trunk.values.size(), 0.0f);

  detail::FeatureWork w;
  nn::Workspace trunk_ws;
  double loss = 0.0;
  const float inv = 1.0f / (static_cast<float>(batch.size()) * d_a);
  std::vector<float> upstream(d_a), dfeat;
  for (const TrainSample& s : batch) {
    detail::feature_forward(p.enc, p.hist_head, p.dims, s, w);
    nn::forward_ws(p.trunk, w.feat, trunk_ws);
    const auto& out = trunk_ws.acts.back();
    for (int k = 0; k < d_a; ++k) {
      const float r = out[k] - s.target_norm[k];
      loss += static_cast<double>(r) * r;
      upstream[k] = 2.0f * r * inv;
    }
    nn::backward_ws(p.trunk, trunk_ws, upstream, g_trunk, 1.0f, &dfeat);
    detail::feature_backward(p.enc, p.hist_head, p.dims, w, dfeat, g_frame, g_proj, g_hist, 1.0f);
  }
  nn::adam_step_inplace(opt.frame, p.enc.frame_net, g_frame);
  nn::adam_step_inplace(opt.proj, p.enc.proj, g_proj);
  nn::adam_step_inplace(opt.hist, p.hist_head, g_hist);
  nn::adam_step_inplace(opt.trunk, p.trunk, g_trunk);
  return static_cast<float>(loss * inv);
}

// ---------------------------------------------------------------------------
// rollout plumbing shared by collection and evaluation

RolloutState start_rollout(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                           const PolicyDims& dims, const sim::SceneState& scene,
                           sim::TaskId task, const fec::FutureLatent& g,
                           const sim::EnvConfig& env) {
  (void)hist_head;
  RolloutState rs;
  rs.scene = scene;
  rs.task = task;
  rs.g = g;
  const std::vector<float> e0 = fec::encode_frame(sim::render(scene, env), enc);
  for (int i = 0; i < dims.K + 1; ++i) rs.frame_emb.push_back(e0);
  return rs;
}

std::vector<float> rollout_features(const fec::EncoderParams& enc,
                                    const nn::ParamVector& hist_head, const PolicyDims& dims,
                                    const RolloutState& rs) {
  std::vector<float> emb;
  emb.reserve(dims.hist_in());
  for (const auto& e : rs.frame_emb) emb.insert(emb.end(), e.begin(), e.end());
  std::vector<float> feat = nn::forward(hist_head, emb);
  feat.insert(feat.end(), rs.g.g.begin(), rs.g.g.end());
  feat.push_back(rs.g.present ? 1.0f : 0.0f);
  append_onehot(feat, rs.task, dims.n_tasks);
  return feat;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

nlohmann::json dims_to_json(const PolicyDims& d) {
  nlohmann::json j;
  j["frame_w"] = d.enc.frame_w;
  j["frame_h"] = d.enc.frame_h;
  j["d_e"] = d.enc.d_e;
  j["B"] = d.enc.B;
  j["d_g"] = d.enc.d_g;
  j["avg_pool"] = d.enc.avg_pool;
  j["K"] = d.K;
  j["hist_dim"] = d.hist_dim;
  j["trunk_hidden"] = d.trunk_hidden;
  j["critic_hidden"] = d.critic_hidden;
  j["n_tasks"] = d.n_tasks;
  j["d_a"] = d.d_a;
  return j;
}

PolicyDims dims_from_json(const nlohmann::json& j) {
  PolicyDims d;
  d.enc.frame_w = j.at("frame_w");
  d.enc.frame_h = j.at("frame_h");
  d.enc.d_e = j.at("d_e");
  d.enc.B = j.at("B");
  d.enc.d_g = j.at("d_g");
  d.enc.avg_pool = j.at("avg_pool");
  d.K = j.at("K");
  d.hist_dim = j.at("hist_dim");
  d.trunk_hidden = j.at("trunk_hidden");
  d.critic_hidden = j.at("critic_hidden");
  d.n_tasks = j.at("n_tasks");
  d.d_a = j.at("d_a");
  return d;
}

nn::ParamVector take_net(std::vector<std::pair<std::string, nn::ParamVector>>& nets,
                         const std::string& name) {
  for (auto& [n, p] : nets)
    if (n == name) return std::move(p);
  throw std::runtime_error("policy: checkpoint missing sub-network '" + name + "'");
}

}  // namespace

void save_bc_checkpoint(const std::filesystem::path& path, const BCPolicy& p) {
  nlohmann::json meta;
  meta["kind"] = "bc";
  meta["dims"] = dims_to_json(p.dims);
  nn::save_checkpoint(path,
                      {{"frame_net", &p.enc.frame_net},
                       {"proj", &p.enc.proj},
                       {"hist_head", &p.hist_head},
                       {"trunk", &p.trunk}},
                      meta.dump());
}

BCPolicy load_bc_checkpoint(const std::filesystem::path& path) {
  std::string meta_text;
  auto nets = nn::load_checkpoint(path, &meta_text);
  const nlohmann::json meta = nlohmann::json::parse(meta_text);
  if (meta.value("kind", "") != "bc")
    throw std::runtime_error("policy: not a bc checkpoint: " + path.string());
  BCPolicy p;
  p.dims = dims_from_json(meta.at("dims"));
  p.enc.dims = p.dims.enc;
  p.enc.frame_net = take_net(nets, "frame_net");
  p.enc.proj = take_net(nets, "proj");
  p.hist_head = take_net(nets, "hist_head");
  p.trunk = take_net(nets, "trunk");
  return p;
}

void save_td3_checkpoint(const std::filesystem::path& path, const TD3Agent& a) {
  nlohmann::json meta;
  meta["kind"] = "td3";
  meta["dims"] = dims_to_json(a.dims);
  meta["update_count"] = a.update_count;
  nn::save_checkpoint(path,
                      {{"frame_net", &a.enc.frame_net},
                       {"proj", &a.enc.proj},
                       {"hist_head", &a.hist_head},
                       {"actor", &a.actor},
                       {"critic1", &a.critic1},
                       {"critic2", &a.critic2},
                       {"target_actor", &a.target_actor},
                       {"target_critic1", &a.target_critic1},
                       {"target_critic2", &a.target_critic2}},
                      meta.dump());
}

TD3Agent load_td3_checkpoint(const std::filesystem::path& path) {
  std::string meta_text;
  auto nets = nn::load_checkpoint(path, &meta_text);
  const nlohmann::json meta = nlohmann::json::parse(meta_text);
  if (meta.value("kind", "") != "td3")
    throw std::runtime_error("policy: not a td3 checkpoint: " + path.string());
  TD3Agent a;
  a.dims = dims_from_json(meta.at("dims"));
  a.update_count = meta.at("update_count");
  a.enc.dims = a.dims.enc;
  a.enc.frame_net = take_net(nets, "frame_net");
  a.enc.proj = take_net(nets, "proj");
  a.hist_head = take_net(nets, "hist_head");
  a.actor = take_net(nets, "actor");
  a.critic1 = take_net(nets, "critic1");
  a.critic2 = take_net(nets, "critic2");
  a.target_actor = take_net(nets, "target_actor");
  a.target_critic1 = take_net(nets, "target_critic1");
  a.target_critic2 = take_net(nets, "target_critic2");
  a.opt_actor = nn::make_adam(a.actor.size(), a.cfg.actor_lr);
  a.opt_critic1 = nn::make_adam(a.critic1.size(), a.cfg.critic_lr);
  a.opt_critic2 = nn::make_adam(a.critic2.size(), a.cfg.critic_lr);
  return a;
}

void save_sfp_checkpoint(const std::filesystem::path& path, const SFPModel& m) {
  nlohmann::json meta;
  meta["kind"] = "sfp";
  meta["dims"] = dims_to_json(m.dims);
  meta["T_train"] = m.cfg.T_train;
  meta["k"] = m.cfg.k;
  meta["sigma0"] = m.cfg.sigma0;
  meta["n_ode"] = m.cfg.n_ode;
  nn::save_checkpoint(path,
                      {{"frame_net", &m.enc.frame_net},
                       {"proj", &m.enc.proj},
                       {"hist_head", &m.hist_head},
                       {"vel", &m.vel}},
                      meta.dump());
}

SFPModel load_sfp_checkpoint(const std::filesystem::path& path) {
  std::string meta_text;
  auto nets = nn::load_checkpoint(path, &meta_text);
  const nlohmann::json meta = nlohmann::json::parse(meta_text);
  if (meta.value("kind", "") != "sfp")
    throw std::runtime_error("policy: not an sfp checkpoint: " + path.string());
  SFPModel m;
  m.dims = dims_from_json(meta.at("dims"));
  m.cfg.T_train = meta.at("T_train");
  m.cfg.k = meta.at("k");
  m.cfg.sigma0 = meta.at("sigma0");
  m.cfg.n_ode = meta.at("n_ode");
  m.enc.dims = m.dims.enc;
  m.enc.frame_net = take_net(nets, "frame_net");
  m.enc.proj = take_net(nets, "proj");
  m.hist_head = take_net(nets, "hist_head");
  m.vel = take_net(nets, "vel");
  return m;
}

}  // namespace tw::policy
