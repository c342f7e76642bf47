#include "tw/future.hpp"

#include <cmath>
#include <stdexcept>

namespace tw::future {

const char* source_name(Source s) {
  switch (s) {
    case Source::GT: return "GT";
    case Source::DT_TRANSPARENT: return "DT_TRANSPARENT";
    case Source::GEN: return "GEN";
    case Source::WRONG: return "WRONG";
  }
  return "?";
}

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::NoFuture: return "nofuture";
    case Condition::GTFuture: return "gt";
    case Condition::GenFuture: return "gen";
    case Condition::WrongFuture: return "wrong";
  }
  return "?";
}

Condition condition_from_name(const std::string& s) {
  if (s == "nofuture") return Condition::NoFuture;
  if (s == "gt") return Condition::GTFuture;
  if (s == "gen") return Condition::GenFuture;
  if (s == "wrong") return Condition::WrongFuture;
  throw std::invalid_argument("future: unknown condition '" + s +
                              "' (expected nofuture|gt|gen|wrong)");
}

CallCounters& counters() {
  static CallCounters c;
  return c;
}

FutureClip extract_gt_future(const sim::EpisodeLog& episode, int t, int T) {
  const int n = static_cast<int>(episode.frames.size());
  if (n == 0) throw std::invalid_argument("future: episode has no frames");
  if (t < 0 || t >= n)
    throw std::out_of_range("future: t=" + std::to_string(t) + " beyond episode end " +
                            std::to_string(n - 1));
  counters().gt.fetch_add(1, std::memory_order_relaxed);
  FutureClip clip;
  clip.source = Source::GT;
  clip.robot_free = false;
  clip.origin_task = episode.task;
  clip.frames.reserve(T);
  for (int k = 1; k <= T; ++k) {
    const int idx = std::min(t + k, n - 1);
    clip.frames.push_back(episode.frames[idx]);
  }
  return clip;
}

namespace {

float lerp(float a, float b, float alpha) { return a + alpha * (b - a); }

// Object configuration along the DT profile at frame k of T.
sim::SceneState dt_state_at(const sim::SceneState& scene, sim::TaskId task, int k, int T,
                            const sim::EnvConfig& cfg) {
  const float alpha = T > 1 ? static_cast<float>(k) / static_cast<float>(T - 1) : 1.0f;
  const bool switched = k >= (T + 1) / 2;  // booleans flip at frame ceil(T/2)
  sim::SceneState s = scene;
  s.block_grasped = false;
  switch (task) {
    case sim::TaskId::open_drawer: s.drawer_q = lerp(scene.drawer_q, 1.0f, alpha); break;
    case sim::TaskId::close_drawer: s.drawer_q = lerp(scene.drawer_q, 0.0f, alpha); break;
    case sim::TaskId::turn_on_lightbulb:
      s.lightbulb_on = switched ? true : scene.lightbulb_on;
      break;
    case sim::TaskId::turn_off_lightbulb:
      s.lightbulb_on = switched ? false : scene.lightbulb_on;
      break;
    case sim::TaskId::turn_on_led: s.led_on = switched ? true : scene.led_on; break;
    case sim::TaskId::turn_off_led: s.led_on = switched ? false : scene.led_on; break;
    case sim::TaskId::push_into_drawer: {
      const sim::Vec2 target = drawer_cavity_center(cfg.layout, scene.drawer_q);
      s.block_pos = {lerp(scene.block_pos.x, target.x, alpha),
                     lerp(scene.block_pos.y, target.y, alpha)};
      break;
    }
    case sim::TaskId::move_slider_left: s.slider_q = lerp(scene.slider_q, 0.0f, alpha); break;
  }
  return s;
}

// Where the robot should be to manipulate the spec's part at frame k.
sim::Vec2 part_pos_at(const sim::SceneState& frame_state, sim::TaskId task,
                      const sim::EnvConfig& cfg) {
  switch (task) {
    case sim::TaskId::open_drawer:
    case sim::TaskId::close_drawer:
      return drawer_handle_pos(cfg.layout, frame_state.drawer_q);
    case sim::TaskId::turn_on_lightbulb:
    case sim::TaskId::turn_off_lightbulb: return cfg.layout.bulb_button;
    case sim::TaskId::turn_on_led:
    case sim::TaskId::turn_off_led: return cfg.layout.led_button;
    case sim::TaskId::push_into_drawer: return frame_state.block_pos;
    case sim::TaskId::move_slider_left:
      return slider_handle_pos(cfg.layout, frame_state.slider_q);
  }
  return {0.5f, 0.5f};
}

}  // namespace

FutureClip dt_rollout(const sim::SceneState& scene, const ground::TaskSpec& spec, int T,
                      const sim::EnvConfig& cfg) {
  if (T < 1) throw std::invalid_argument("future: clip length must be >= 1");
  const sim::TaskId task = ground::task_of_spec(spec);  // invalid-spec on unknown object
  counters().dt.fetch_add(1, std::memory_order_relaxed);
  FutureClip clip;
  clip.source = Source::DT_TRANSPARENT;
  clip.robot_free = true;
  clip.origin_task = task;
  clip.frames.reserve(T);
  for (int k = 0; k < T; ++k)
    clip.frames.push_back(sim::render(dt_state_at(scene, task, k, T, cfg), cfg, true));
  return clip;
}

std::vector<sim::Vec2> plan_ee_path(const sim::SceneState& scene, const ground::TaskSpec& spec,
                                    int T, const sim::EnvConfig& cfg) {
  const sim::TaskId task = ground::task_of_spec(spec);
  const int arrive = (T + 1) / 2;  // reach the part when the state change lands
  std::vector<sim::Vec2> path(T);
  for (int k = 0; k < T; ++k) {
    const sim::SceneState fs = dt_state_at(scene, task, k, T, cfg);
    const sim::Vec2 target = part_pos_at(fs, task, cfg);
    if (k >= arrive) {
      path[k] = target;
    } else {
      const float alpha = arrive > 0 ? static_cast<float>(k) / static_cast<float>(arrive) : 1.0f;
      path[k] = {lerp(scene.ee_pos.x, target.x, alpha), lerp(scene.ee_pos.y, target.y, alpha)};
    }
  }
  return path;
}

std::vector<float> plan_ee_grip(const sim::SceneState& scene, const ground::TaskSpec& spec,
                                int T, const sim::EnvConfig& cfg) {
  (void)cfg;
  (void)spec;
  const int arrive = (T + 1) / 2;
  std::vector<float> grip(T);
  for (int k = 0; k < T; ++k) grip[k] = k == 0 ? scene.gripper : (k >= arrive ? 1.0f : 0.0f);
  return grip;
}

FutureClip inpaint_robot(const FutureClip& transparent, const sim::Frame& initial,
                         const sim::SceneState& scene, const ground::TaskSpec& spec,
                         const GenNoiseConfig& noise, Rng& rng, const sim::EnvConfig& cfg) {
  if (transparent.source != Source::DT_TRANSPARENT)
    throw std::invalid_argument("future: inpaint_robot needs a DT_TRANSPARENT clip");
  if (transparent.frames.empty()) throw std::invalid_argument("future: empty clip");
  if (initial.w != transparent.frames[0].w || initial.h != transparent.frames[0].h)
    throw std::invalid_argument("future: initial frame size mismatch");
  counters().gen.fetch_add(1, std::memory_order_relaxed);

  const int T = transparent.length();
  std::vector<sim::Vec2> path = plan_ee_path(scene, spec, T, cfg);
  const std::vector<float> grip = plan_ee_grip(scene, spec, T, cfg);

  // corrupt waypoints; the first frame stays anchored at the live ee pose
  std::vector<bool> dropped(T, false);
  for (int k = 1; k < T; ++k) {
    const float jx = rng.normal() * noise.waypoint_jitter_sigma;
    const float jy = rng.normal() * noise.waypoint_jitter_sigma;
    path[k] = {std::clamp(path[k].x + jx, 0.0f, 1.0f), std::clamp(path[k].y + jy, 0.0f, 1.0f)};
    dropped[k] = rng.uniform() < noise.dropout_prob;
  }

  FutureClip out;
  out.source = Source::GEN;
  out.robot_free = false;
  out.origin_task = transparent.origin_task;
  out.frames = transparent.frames;
  for (int k = 0; k < T; ++k) {
    if (dropped[k]) continue;
    const int src = std::max(0, k - noise.temporal_lag);
    const sim::Vec2 pos = k == 0 ? scene.ee_pos : path[src];
    const float g = k == 0 ? scene.gripper : grip[src];
    sim::draw_ee_glyph(out.frames[k], pos, g);
  }
  return out;
}

FutureClip wrong_future(const sim::SceneState& scene, const ground::TaskSpec& spec, Rng& rng,
                        int T, const GenNoiseConfig& noise, const sim::EnvConfig& cfg) {
  const sim::TaskId commanded = ground::task_of_spec(spec);
  counters().wrong.fetch_add(1, std::memory_order_relaxed);

  std::vector<sim::TaskId> others;
  for (sim::TaskId t : sim::kAllTasks)
    if (t != commanded) others.push_back(t);
  const sim::TaskId wrong = others[static_cast<size_t>(rng.uniform_int(0, 6))];

  const ground::Ontology ont = ground::init_ontology(scene, cfg);
  const ground::TaskSpec wrong_spec = ground::canonical_spec(wrong, ont);
  const FutureClip transparent = dt_rollout(scene, wrong_spec, T, cfg);
  const sim::Frame initial = sim::render(scene, cfg, false);
  FutureClip clip = inpaint_robot(transparent, initial, scene, wrong_spec, noise, rng, cfg);
  clip.source = Source::WRONG;
  clip.origin_task = wrong;
  return clip;
}

std::optional<FutureClip> make_future(Condition condition, const FutureContext& ctx) {
  switch (condition) {
    case Condition::NoFuture: return std::nullopt;
    case Condition::GTFuture: {
      if (ctx.demo == nullptr)
        throw std::runtime_error("future: GTFuture requested without a demonstration");
      return extract_gt_future(*ctx.demo, ctx.t, ctx.T);
    }
    case Condition::GenFuture: {
      if (ctx.rng == nullptr) throw std::invalid_argument("future: GenFuture needs an rng");
      const FutureClip transparent = dt_rollout(ctx.scene, ctx.spec, ctx.T, ctx.env);
      const sim::Frame initial = sim::render(ctx.scene, ctx.env, false);
      return inpaint_robot(transparent, initial, ctx.scene, ctx.spec, ctx.noise, *ctx.rng,
                           ctx.env);
    }
    case Condition::WrongFuture: {
      if (ctx.rng == nullptr) throw std::invalid_argument("future: WrongFuture needs an rng");
      return wrong_future(ctx.scene, ctx.spec, *ctx.rng, ctx.T, ctx.noise, ctx.env);
    }
  }
  return std::nullopt;
}

}  // namespace tw::future
