#include <cmath>
#include <stdexcept>

#include "tw/policy.hpp"

namespace tw::policy {

void ReplayBuffer::add(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[insert_] = std::move(t);  // FIFO overwrite
  insert_ = (insert_ + 1) % capacity_;
}

TD3Agent make_td3_agent(const BCPolicy& bc, const TD3Config& cfg, Rng& rng) {
  TD3Agent a;
  a.dims = bc.dims;
  a.cfg = cfg;
  a.enc = bc.enc;
  a.hist_head = bc.hist_head;
  a.actor = bc.trunk;  // RL starts exactly at the BC solution
  Rng c1 = rng.stream("td3/critic1");
  Rng c2 = rng.stream("td3/critic2");
  a.critic1 = nn::init_params(critic_spec(bc.dims), c1);
  a.critic2 = nn::init_params(critic_spec(bc.dims), c2);
  a.target_actor = a.actor;
  a.target_critic1 = a.critic1;
  a.target_critic2 = a.critic2;
  a.opt_actor = nn::make_adam(a.actor.size(), cfg.actor_lr);
  a.opt_critic1 = nn::make_adam(a.critic1.size(), cfg.critic_lr);
  a.opt_critic2 = nn::make_adam(a.critic2.size(), cfg.critic_lr);
  a.buffer = ReplayBuffer(cfg.buffer_capacity);
  return a;
}

void polyak_update(nn::ParamVector& target, const nn::ParamVector& online, float tau) {
  float* t = target.values.data();
  const float* o = online.values.data();
  const size_t n = target.values.size();
  for (size_t i = 0; i < n; ++i) t[i] = tau * o[i] + (1.0f - tau) * t[i];
}

float clipped_policy_noise(Rng& rng, const TD3Config& cfg) {
  return std::clamp(rng.normal() * cfg.policy_noise, -cfg.noise_clip, cfg.noise_clip);
}

std::vector<float> td3_compute_targets(const TD3Agent& agent, std::span<const size_t> idx,
                                       Rng& rng) {
  const TD3Config& cfg = agent.cfg;
  const int d_a = agent.dims.d_a;
  std::vector<float> y(idx.size());
  std::vector<float> qin;
  for (size_t b = 0; b < idx.size(); ++b) {
    const Transition& tr = agent.buffer.at(idx[b]);
    if (tr.done) {
      y[b] = tr.reward;  // terminal transitions bootstrap nothing
      continue;
    }
    const std::array<float, 3> na = actor_forward(agent.target_actor, tr.next_feat);
    qin.assign(tr.next_feat.begin(), tr.next_feat.end());
    for (int k = 0; k < d_a; ++k)
      qin.push_back(std::clamp(na[k] + clipped_policy_noise(rng, cfg), -1.0f, 1.0f));
    const float q1 = nn::forward(agent.target_critic1, qin)[0];
    const float q2 = nn::forward(agent.target_critic2, qin)[0];
    y[b] = tr.reward + cfg.gamma * std::min(q1, q2);
  }
  return y;
}

void td3_update(TD3Agent& agent, int batch_size, Rng& rng) {
  if (agent.buffer.size() < static_cast<size_t>(batch_size))
    throw std::runtime_error("td3: replay buffer not ready (" +
                             std::to_string(agent.buffer.size()) + " < " +
                             std::to_string(batch_size) + ")");
  const TD3Config& cfg = agent.cfg;
  const int d_a = agent.dims.d_a;

  std::vector<size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<size_t>(rng.next_u64() % agent.buffer.size());

  const std::vector<float> y = td3_compute_targets(agent, idx, rng);
  nn::Workspace ws;
  std::vector<float> qin;

  // critic regression on the shared batch
  const float inv = 1.0f / static_cast<float>(batch_size);
  auto critic_update = [&](nn::ParamVector& critic, nn::AdamState& opt) {
    nn::GradVector grad;
    grad.values.assign(critic.values.size(), 0.0f);
    std::array<float, 1> upstream;
    for (int b = 0; b < batch_size; ++b) {
      const Transition& tr = agent.buffer.at(idx[b]);
      qin.assign(tr.feat.begin(), tr.feat.end());
      qin.insert(qin.end(), tr.action.begin(), tr.action.end());
      nn::forward_ws(critic, qin, ws);
      upstream[0] = 2.0f * (ws.acts.back()[0] - y[b]) * inv;
      nn::backward_ws(critic, ws, upstream, grad);
    }
    nn::adam_step_inplace(opt, critic, grad);
  };
  critic_update(agent.critic1, agent.opt_critic1);
  critic_update(agent.critic2, agent.opt_critic2);

  agent.update_count += 1;
  if (agent.update_count % cfg.policy_delay == 0) {
    // deterministic policy gradient: ascend Q1(s, pi(s)) through the action
    nn::GradVector grad;
    grad.values.assign(agent.actor.values.size(), 0.0f);
    nn::GradVector critic_scratch;
    critic_scratch.values.assign(agent.critic1.values.size(), 0.0f);
    nn::Workspace actor_ws, critic_ws;
    const std::array<float, 1> one{1.0f};
    std::vector<float> dqin;
    std::vector<float> da(d_a);
    for (int b = 0; b < batch_size; ++b) {
      const Transition& tr = agent.buffer.at(idx[b]);
      nn::forward_ws(agent.actor, tr.feat, actor_ws);
      const auto& a = actor_ws.acts.back();
      qin.assign(tr.feat.begin(), tr.feat.end());
      qin.insert(qin.end(), a.begin(), a.end());
      nn::forward_ws(agent.critic1, qin, critic_ws);
      nn::backward_ws(agent.critic1, critic_ws, one, critic_scratch, 0.0f, &dqin);
      for (int k = 0; k < d_a; ++k)
        da[k] = -dqin[agent.dims.feature_dim() + k] * inv;  // minimize -Q
      nn::backward_ws(agent.actor, actor_ws, da, grad);
    }
    nn::adam_step_inplace(agent.opt_actor, agent.actor, grad);

    polyak_update(agent.target_actor, agent.actor, cfg.tau);
    polyak_update(agent.target_critic1, agent.critic1, cfg.tau);
    polyak_update(agent.target_critic2, agent.critic2, cfg.tau);
  }
}

CollectResult collect_step(TD3Agent& agent, RolloutState& rs, float exploration_sigma,
                           Rng& rng, const sim::EnvConfig& env) {
  std::vector<float> feat = rollout_features(agent.enc, agent.hist_head, agent.dims, rs);
  std::array<float, 3> a = actor_forward(agent.actor, feat);
  for (auto& v : a) v = std::clamp(v + rng.normal() * exploration_sigma, -1.0f, 1.0f);

  const sim::StepResult sr = sim::step(rs.scene, to_env_action(a, env.delta_max), rs.task, env);
  rs.scene = sr.state;
  rs.frame_emb.pop_front();
  rs.frame_emb.push_back(fec::encode_frame(sim::render(sr.state, env), agent.enc));

  Transition tr;
  tr.feat = std::move(feat);
  tr.action = a;
  tr.reward = sr.reward;
  tr.next_feat = rollout_features(agent.enc, agent.hist_head, agent.dims, rs);
  tr.done = sr.done ? 1 : 0;
  agent.buffer.add(std::move(tr));

  CollectResult out;
  out.reward = sr.reward;
  out.done = sr.done;
  out.success = sr.success;
  return out;
}

}  // namespace tw::policy
