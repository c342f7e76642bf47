#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tw/fec.hpp"
#include "tw/future.hpp"
#include "tw/nn.hpp"
#include "tw/twinworld.hpp"

namespace tw::policy {

struct PolicyDims {
  fec::EncoderDims enc;
  int K = 2;               // observation history is K+1 frames
  int hist_dim = 64;       // history projection head width
  int trunk_hidden = 128;
  int critic_hidden = 128;
  int n_tasks = sim::kNumTasks;
  int d_a = sim::kActionDim;

  int hist_in() const { return (K + 1) * enc.d_e; }
  int feature_dim() const { return hist_dim + enc.d_g + 1 + n_tasks; }
};

// Normalized action space: every controller works in [-1,1]^3 and converts
// at the env boundary.
std::array<float, 3> to_norm_action(const sim::Action& a, float delta_max);
sim::Action to_env_action(const std::array<float, 3>& a, float delta_max);

// What a controller sees at one step: recent frames, the future latent with
// its presence flag, and the task id (one-hot in the feature vector).
struct PolicyInput {
  std::vector<sim::Frame> history;  // K+1 frames, oldest first
  fec::FutureLatent g;
  sim::TaskId task = sim::TaskId::open_drawer;
};

struct BCPolicy {
  PolicyDims dims;
  fec::EncoderParams enc;     // shared frame net + future projection
  nn::ParamVector hist_head;  // (K+1)*d_e -> hist_dim, linear
  nn::ParamVector trunk;      // feature_dim -> hidden -> hidden -> d_a, tanh output
};

BCPolicy init_bc_policy(const PolicyDims& dims, Rng& rng);

nn::NetSpec trunk_spec(const PolicyDims& dims);
nn::NetSpec critic_spec(const PolicyDims& dims);

// features = [hist_head(enc(history)) | g | presence | task one-hot]
std::vector<float> build_features(const BCPolicy& p, const PolicyInput& in);
// fast path when per-frame embeddings are cached by the rollout loop
std::vector<float> features_from_embeddings(const BCPolicy& p,
                                            std::span<const float> hist_embeddings,
                                            const fec::FutureLatent& g, sim::TaskId task);

std::array<float, 3> actor_forward(const nn::ParamVector& trunk, std::span<const float> features);

sim::Action bc_action(const BCPolicy& p, const PolicyInput& in, float delta_max = 0.05f);

// One supervised sample. The clip is encoded with the live encoder during
// the step so gradients reach the whole perception stack.
struct TrainSample {
  std::vector<sim::Frame> history;
  std::optional<future::FutureClip> clip;
  sim::TaskId task = sim::TaskId::open_drawer;
  std::array<float, 3> target_norm{0, 0, 0};
  std::vector<float> chunk_norm;  // SFP only: T_train * d_a executed actions
};

struct BCOptimizer {
  nn::AdamState frame, proj, hist, trunk;
};
BCOptimizer make_bc_optimizer(const BCPolicy& p, float lr);

// One Adam step on the mean-squared normalized-action error over the batch;
// returns the pre-step loss.
float bc_train_step(BCPolicy& p, std::span<const TrainSample> batch, BCOptimizer& opt);

// ---------------------------------------------------------------------------
// TD3 fine-tuning over frozen perception features

struct TD3Config {
  float gamma = 0.99f;
  float tau = 0.005f;
  float policy_noise = 0.05f;
  float noise_clip = 0.08f;
  int policy_delay = 2;
  float actor_lr = 5e-5f;
  float critic_lr = 5e-5f;
  int batch_size = 64;
  size_t buffer_capacity = 100000;
  int warmup_steps = 1000;
  float explore_noise = 0.05f;
};

struct Transition {
  std::vector<float> feat;
  std::array<float, 3> action;  // normalized
  float reward = 0.0f;
  std::vector<float> next_feat;
  uint8_t done = 0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 100000) : capacity_(capacity) {}
  void add(Transition t);
  size_t size() const { return data_.size(); }
  const Transition& at(size_t i) const { return data_[i]; }

 private:
  size_t capacity_;
  size_t insert_ = 0;
  std::vector<Transition> data_;
};

struct TD3Agent {
  PolicyDims dims;
  TD3Config cfg;
  fec::EncoderParams enc;     // frozen during RL (features live in the buffer)
  nn::ParamVector hist_head;  // frozen
  nn::ParamVector actor, critic1, critic2;
  nn::ParamVector target_actor, target_critic1, target_critic2;
  nn::AdamState opt_actor, opt_critic1, opt_critic2;
  ReplayBuffer buffer;
  long update_count = 0;
};

// Actor starts as the BC trunk; critics are freshly initialized; targets
// start equal to their online networks.
TD3Agent make_td3_agent(const BCPolicy& bc, const TD3Config& cfg, Rng& rng);

// theta' <- tau * theta + (1 - tau) * theta'
void polyak_update(nn::ParamVector& target, const nn::ParamVector& online, float tau);

// One clipped target-smoothing noise draw: clip(N(0, policy_noise^2), +-noise_clip).
float clipped_policy_noise(Rng& rng, const TD3Config& cfg);

// y = r + gamma (1-done) min(Q1', Q2')(s', pi'(s') + clipped noise)
std::vector<float> td3_compute_targets(const TD3Agent& agent, std::span<const size_t> idx,
                                       Rng& rng);

void td3_update(TD3Agent& agent, int batch_size, Rng& rng);

// Rolling per-episode state for collection and evaluation.
struct RolloutState {
  sim::SceneState scene;
  sim::TaskId task = sim::TaskId::open_drawer;
  std::deque<std::vector<float>> frame_emb;  // K+1 most recent embeddings
  fec::FutureLatent g;
};

// Seeds the embedding history with the reset frame repeated K+1 times.
RolloutState start_rollout(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                           const PolicyDims& dims, const sim::SceneState& scene,
                           sim::TaskId task, const fec::FutureLatent& g,
                           const sim::EnvConfig& env);

std::vector<float> rollout_features(const fec::EncoderParams& enc,
                                    const nn::ParamVector& hist_head, const PolicyDims& dims,
                                    const RolloutState& rs);

// Steps the env with actor(features) + exploration noise, appends the
// transition to the replay buffer and advances the rollout state.
struct CollectResult {
  float reward = 0.0f;
  bool done = false;
  bool success = false;
};
CollectResult collect_step(TD3Agent& agent, RolloutState& rs, float exploration_sigma,
                           Rng& rng, const sim::EnvConfig& env);

// ---------------------------------------------------------------------------
// Streaming flow policy baseline

struct SFPConfig {
  int T_train = 8;
  float k = 1.0f;
  float sigma0 = 0.1f;
  int n_ode = 10;
  float lr = 1e-3f;
};

struct SFPModel {
  PolicyDims dims;
  SFPConfig cfg;
  fec::EncoderParams enc;
  nn::ParamVector hist_head;
  nn::ParamVector vel;  // [chunk | lambda | features] -> hidden -> hidden -> chunk

  int chunk_dim() const { return cfg.T_train * dims.d_a; }
};

SFPModel init_sfp_model(const PolicyDims& dims, const SFPConfig& cfg, Rng& rng);

// eta = sigma0 e^{-k lambda} eps; a = sigma + eta; v = sigma_dot - k eta
void sfp_flow_targets(std::span<const float> sigma, std::span<const float> sigma_dot,
                      float lambda, std::span<const float> eps, float k, float sigma0,
                      std::span<float> a_out, std::span<float> v_out);

struct SFPOptimizer {
  nn::AdamState frame, proj, hist, vel;
};
SFPOptimizer make_sfp_optimizer(const SFPModel& m, float lr);

struct SFPGrads {
  nn::GradVector frame, proj, hist, vel;
};

// MSE flow-matching loss over the batch; gradients optional. The rng drives
// the per-sample lambda and noise draws.
float sfp_loss_and_grad(const SFPModel& m, std::span<const TrainSample> batch, Rng& rng,
                        SFPGrads* grads);

float sfp_train_step(SFPModel& m, std::span<const TrainSample> batch, SFPOptimizer& opt,
                     Rng& rng);

// Euler-integrates the learned field from prev_chunk + sigma0*eps over
// lambda in [0,1]; returns the final chunk clamped to bounds.
std::vector<float> sfp_sample_action(const SFPModel& m, std::span<const float> features,
                                     std::span<const float> prev_chunk, Rng& rng, int n_ode);

// ---------------------------------------------------------------------------
// shared supervised-training plumbing (used by bc and sfp steps)

namespace detail {

struct FeatureWork {
  std::vector<nn::Workspace> hist_ws;
  nn::Workspace head_ws;
  fec::EncodeCache cache;
  std::vector<float> emb;
  std::vector<float> feat;
  bool has_future = false;
};

void feature_forward(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                     const PolicyDims& dims, const TrainSample& s, FeatureWork& w);
void feature_backward(const fec::EncoderParams& enc, const nn::ParamVector& hist_head,
                      const PolicyDims& dims, const FeatureWork& w,
                      std::span<const float> dfeat, nn::GradVector& g_frame,
                      nn::GradVector& g_proj, nn::GradVector& g_hist, float scale);

}  // namespace detail

// ---------------------------------------------------------------------------
// checkpoints

void save_bc_checkpoint(const std::filesystem::path& path, const BCPolicy& p);
BCPolicy load_bc_checkpoint(const std::filesystem::path& path);
void save_td3_checkpoint(const std::filesystem::path& path, const TD3Agent& agent);
TD3Agent load_td3_checkpoint(const std::filesystem::path& path);
void save_sfp_checkpoint(const std::filesystem::path& path, const SFPModel& m);
SFPModel load_sfp_checkpoint(const std::filesystem::path& path);

}  // namespace tw::policy
