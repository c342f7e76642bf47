#include "tw/twinworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tw/blob.hpp"

namespace tw::sim {

const TaskId kAllTasks[kNumTasks] = {
    TaskId::open_drawer,        TaskId::close_drawer,     TaskId::turn_on_lightbulb,
    TaskId::turn_off_lightbulb, TaskId::turn_on_led,      TaskId::turn_off_led,
    TaskId::push_into_drawer,   TaskId::move_slider_left,
};

const char* task_name(TaskId task) {
  switch (task) {
    case TaskId::open_drawer: return "open_drawer";
    case TaskId::close_drawer: return "close_drawer";
    case TaskId::turn_on_lightbulb: return "turn_on_lightbulb";
    case TaskId::turn_off_lightbulb: return "turn_off_lightbulb";
    case TaskId::turn_on_led: return "turn_on_led";
    case TaskId::turn_off_led: return "turn_off_led";
    case TaskId::push_into_drawer: return "push_into_drawer";
    case TaskId::move_slider_left: return "move_slider_left";
  }
  return "?";
}

TaskId task_from_name(const std::string& name) {
  for (TaskId t : kAllTasks)
    if (name == task_name(t)) return t;
  throw std::invalid_argument("twinworld: unknown task '" + name + "'");
}

bool operator==(const SceneState& a, const SceneState& b) {
  return a.ee_pos.x == b.ee_pos.x && a.ee_pos.y == b.ee_pos.y && a.gripper == b.gripper &&
         a.drawer_q == b.drawer_q && a.slider_q == b.slider_q &&
         a.lightbulb_on == b.lightbulb_on && a.led_on == b.led_on &&
         a.block_pos.x == b.block_pos.x && a.block_pos.y == b.block_pos.y &&
         a.block_grasped == b.block_grasped && a.step_count == b.step_count;
}

bool operator==(const Frame& a, const Frame& b) {
  return a.w == b.w && a.h == b.h && a.px == b.px;
}

namespace {

float clampf(float v, float lo, float hi) { return std::min(std::max(v, lo), hi); }

Vec2 clamp_unit(Vec2 p) { return {clampf(p.x, 0.0f, 1.0f), clampf(p.y, 0.0f, 1.0f)}; }

float drawer_front_y(const Layout& l, float q) {
  return l.drawer_base.y1 + l.drawer_travel * q;
}

}  // namespace

Vec2 drawer_handle_pos(const Layout& l, float q) {
  const float fy = drawer_front_y(l, q);
  return {0.5f * (l.drawer_base.x0 + l.drawer_base.x1), fy + 0.5f * l.drawer_front_h};
}

Rect drawer_handle_region(const Layout& l, float q) {
  const Vec2 h = drawer_handle_pos(l, q);
  return {h.x - l.handle_half, h.y - l.handle_half, h.x + l.handle_half, h.y + l.handle_half};
}

Rect drawer_cavity(const Layout& l, float q) {
  return {l.drawer_base.x0 + 0.03f, l.drawer_base.y1 + 0.01f, l.drawer_base.x1 - 0.03f,
          drawer_front_y(l, q) - 0.01f};
}

Vec2 drawer_cavity_center(const Layout& l, float q) {
  const Rect c = drawer_cavity(l, q);
  return {0.5f * (c.x0 + c.x1), 0.5f * (c.y0 + c.y1)};
}

Vec2 slider_handle_pos(const Layout& l, float q) {
  return {l.slider_rail.x0 + l.slider_travel * q, 0.5f * (l.slider_rail.y0 + l.slider_rail.y1)};
}

Rect slider_handle_region(const Layout& l, float q) {
  const Vec2 h = slider_handle_pos(l, q);
  return {h.x - l.handle_half, h.y - l.handle_half, h.x + l.handle_half, h.y + l.handle_half};
}

Rect button_region(const Layout& l, Vec2 b) {
  return {b.x - l.button_half, b.y - l.button_half, b.x + l.button_half, b.y + l.button_half};
}

SceneState reset(TaskId task, uint64_t seed, const EnvConfig& cfg) {
  const Layout& lay = cfg.layout;
  Rng rng = Rng(seed).stream("reset", static_cast<uint64_t>(task));
  SceneState s;

  switch (task) {
    case TaskId::open_drawer: s.drawer_q = rng.uniform(0.0f, 0.08f); break;
    case TaskId::close_drawer: s.drawer_q = rng.uniform(0.92f, 1.0f); break;
    case TaskId::push_into_drawer: s.drawer_q = rng.uniform(0.85f, 1.0f); break;
    default: s.drawer_q = rng.uniform(0.0f, 0.25f); break;
  }
  s.slider_q = task == TaskId::move_slider_left ? rng.uniform(0.92f, 1.0f)
                                                : rng.uniform(0.3f, 0.7f);
  if (task == TaskId::turn_on_lightbulb || task == TaskId::turn_off_lightbulb)
    s.lightbulb_on = task == TaskId::turn_off_lightbulb;
  else
    s.lightbulb_on = rng.uniform() < 0.5;
  if (task == TaskId::turn_on_led || task == TaskId::turn_off_led)
    s.led_on = task == TaskId::turn_off_led;
  else
    s.led_on = rng.uniform() < 0.5;

  // end-effector spawns clear of every interactive region
  for (int attempt = 0; attempt < 64; ++attempt) {
    s.ee_pos = {rng.uniform(0.22f, 0.78f), rng.uniform(0.25f, 0.78f)};
    const Rect h1 = drawer_handle_region(lay, s.drawer_q);
    const Rect h2 = slider_handle_region(lay, s.slider_q);
    const Rect b1 = button_region(lay, lay.bulb_button);
    const Rect b2 = button_region(lay, lay.led_button);
    const Rect pad{s.ee_pos.x - 0.03f, s.ee_pos.y - 0.03f, s.ee_pos.x + 0.03f,
                   s.ee_pos.y + 0.03f};
    auto overlaps = [&](const Rect& r) {
      return pad.x1 >= r.x0 && pad.x0 <= r.x1 && pad.y1 >= r.y0 && pad.y0 <= r.y1;
    };
    if (!overlaps(h1) && !overlaps(h2) && !overlaps(b1) && !overlaps(b2)) break;
  }
  s.block_pos = {rng.uniform(0.15f, 0.85f), rng.uniform(0.44f, 0.62f)};
  s.block_grasped = false;
  s.gripper = 0.0f;
  s.step_count = 0;
  return s;
}

bool success(const SceneState& s, TaskId task, const EnvConfig& cfg) {
  const Layout& lay = cfg.layout;
  switch (task) {
    case TaskId::open_drawer: return s.drawer_q > 0.9f;
    case TaskId::close_drawer: return s.drawer_q < 0.1f;
    case TaskId::turn_on_lightbulb: return s.lightbulb_on;
    case TaskId::turn_off_lightbulb: return !s.lightbulb_on;
    case TaskId::turn_on_led: return s.led_on;
    case TaskId::turn_off_led: return !s.led_on;
    case TaskId::push_into_drawer:
      return drawer_cavity(lay, s.drawer_q).contains(s.block_pos) && !s.block_grasped;
    case TaskId::move_slider_left: return s.slider_q < 0.1f;
  }
  return false;
}

float potential(const SceneState& s, TaskId task, const EnvConfig& cfg) {
  const Layout& lay = cfg.layout;
  switch (task) {
    case TaskId::open_drawer:
      return -(dist(s.ee_pos, drawer_handle_pos(lay, s.drawer_q)) +
               (1.0f - s.drawer_q) * lay.drawer_travel);
    case TaskId::close_drawer:
      return -(dist(s.ee_pos, drawer_handle_pos(lay, s.drawer_q)) +
               s.drawer_q * lay.drawer_travel);
    case TaskId::turn_on_lightbulb:
    case TaskId::turn_off_lightbulb: return -dist(s.ee_pos, lay.bulb_button);
    case TaskId::turn_on_led:
    case TaskId::turn_off_led: return -dist(s.ee_pos, lay.led_button);
    case TaskId::push_into_drawer: {
      const Vec2 target = drawer_cavity_center(lay, s.drawer_q);
      if (s.block_grasped) return -dist(s.block_pos, target);
      return -(dist(s.ee_pos, s.block_pos) + dist(s.block_pos, target));
    }
    case TaskId::move_slider_left:
      return -(dist(s.ee_pos, slider_handle_pos(lay, s.slider_q)) +
               s.slider_q * lay.slider_travel);
  }
  return 0.0f;
}

StepResult step(const SceneState& state, const Action& action, TaskId task,
                const EnvConfig& cfg) {
  const Layout& lay = cfg.layout;
  const float dmax = cfg.delta_max;
  const float dx = clampf(action.dx, -dmax, dmax);
  const float dy = clampf(action.dy, -dmax, dmax);
  const float grip = clampf(action.grip, 0.0f, 1.0f);

  SceneState s = state;
  const Vec2 old_ee = state.ee_pos;
  s.ee_pos = clamp_unit({old_ee.x + dx, old_ee.y + dy});
  const float moved_x = s.ee_pos.x - old_ee.x;
  const float moved_y = s.ee_pos.y - old_ee.y;

  // prismatic joints follow the ee while it holds their handle
  if (grip > 0.5f) {
    if (drawer_handle_region(lay, state.drawer_q).contains(old_ee))
      s.drawer_q = clampf(state.drawer_q + moved_y / lay.drawer_travel, 0.0f, 1.0f);
    if (slider_handle_region(lay, state.slider_q).contains(old_ee))
      s.slider_q = clampf(state.slider_q + moved_x / lay.slider_travel, 0.0f, 1.0f);
  }

  // grasp / release / carry
  if (grip <= 0.5f) {
    s.block_grasped = false;
  } else if (!state.block_grasped &&
             dist(s.ee_pos, state.block_pos) <= lay.grasp_radius) {
    s.block_grasped = true;
  }
  if (s.block_grasped) s.block_pos = s.ee_pos;

  // lights toggle on region entry with the gripper engaged
  auto entered = [&](const Rect& r) {
    return !r.contains(old_ee) && r.contains(s.ee_pos) && grip > 0.5f;
  };
  if (entered(button_region(lay, lay.bulb_button))) s.lightbulb_on = !s.lightbulb_on;
  if (entered(button_region(lay, lay.led_button))) s.led_on = !s.led_on;

  s.gripper = grip;
  s.step_count = state.step_count + 1;

  StepResult r;
  r.success = success(s, task, cfg);
  r.done = r.success || s.step_count >= cfg.max_steps;
  r.reward = r.success ? 1.0f : 0.0f;
  if (cfg.shaping) {
    const float phi0 = potential(state, task, cfg);
    const float phi1 = r.done ? 0.0f : potential(s, task, cfg);
    r.reward += cfg.shaping_weight * (cfg.shaping_gamma * phi1 - phi0);
  }
  r.state = s;
  return r;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

struct Color {
  float r, g, b;
};

constexpr Color kBg{0.10f, 0.11f, 0.12f};
constexpr Color kDrawerBase{0.32f, 0.22f, 0.12f};
constexpr Color kDrawerCavity{0.05f, 0.05f, 0.06f};
constexpr Color kDrawerFront{0.55f, 0.36f, 0.16f};
constexpr Color kDrawerHandle{0.95f, 0.65f, 0.20f};
constexpr Color kRail{0.30f, 0.31f, 0.33f};
constexpr Color kSlider{0.20f, 0.65f, 0.90f};
constexpr Color kButton{0.45f, 0.45f, 0.48f};
constexpr Color kBulbOn{1.00f, 0.85f, 0.25f};
constexpr Color kBulbOff{0.22f, 0.22f, 0.20f};
constexpr Color kLedOn{0.25f, 1.00f, 0.35f};
constexpr Color kLedOff{0.14f, 0.26f, 0.16f};
constexpr Color kBlock{0.85f, 0.18f, 0.18f};

int to_px(float v, int n) {
  int p = static_cast<int>(std::floor(v * static_cast<float>(n)));
  return std::clamp(p, 0, n - 1);
}

void set_px(Frame& f, int x, int y, Color c) {
  if (x < 0 || x >= f.w || y < 0 || y >= f.h) return;
  float* p = f.px.data() + (static_cast<size_t>(y) * f.w + x) * 3;
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

void fill_rect(Frame& f, const Rect& r, Color c) {
  const int x0 = to_px(r.x0, f.w), x1 = to_px(r.x1, f.w);
  const int y0 = to_px(r.y0, f.h), y1 = to_px(r.y1, f.h);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set_px(f, x, y, c);
}

Rect square(Vec2 c, float half) { return {c.x - half, c.y - half, c.x + half, c.y + half}; }

}  // namespace

Rect glyph_region(const EnvConfig& cfg, Vec2 glyph) {
  const Rect r = square(glyph, cfg.layout.glyph_half);
  return {static_cast<float>(to_px(r.x0, cfg.render_w)),
          static_cast<float>(to_px(r.y0, cfg.render_h)),
          static_cast<float>(to_px(r.x1, cfg.render_w)),
          static_cast<float>(to_px(r.y1, cfg.render_h))};
}

void draw_ee_glyph(Frame& f, Vec2 pos, float grip) {
  const int cx = to_px(pos.x, f.w), cy = to_px(pos.y, f.h);
  const Color arm{1.0f, 1.0f, 1.0f};
  set_px(f, cx - 1, cy, arm);
  set_px(f, cx + 1, cy, arm);
  set_px(f, cx, cy - 1, arm);
  set_px(f, cx, cy + 1, arm);
  set_px(f, cx, cy, Color{grip, 0.2f, 1.0f - grip});
}

Frame render(const SceneState& s, const EnvConfig& cfg, bool robot_free) {
  const Layout& lay = cfg.layout;
  Frame f;
  f.w = cfg.render_w;
  f.h = cfg.render_h;
  f.px.assign(static_cast<size_t>(f.w) * f.h * 3, 0.0f);
  fill_rect(f, Rect{0, 0, 1, 1}, kBg);

  // drawer: fixed base, open cavity, sliding front panel with handle stripe
  fill_rect(f, lay.drawer_base, kDrawerBase);
  const float fy = drawer_front_y(lay, s.drawer_q);
  if (fy > lay.drawer_base.y1 + 0.015f)
    fill_rect(f,
              Rect{lay.drawer_base.x0 + 0.02f, lay.drawer_base.y1, lay.drawer_base.x1 - 0.02f, fy},
              kDrawerCavity);
  fill_rect(f, Rect{lay.drawer_base.x0, fy, lay.drawer_base.x1, fy + lay.drawer_front_h},
            kDrawerFront);
  fill_rect(f, Rect{0.46f, fy, 0.54f, fy + lay.drawer_front_h}, kDrawerHandle);

  // slider rail and block
  fill_rect(f, lay.slider_rail, kRail);
  fill_rect(f, square(slider_handle_pos(lay, s.slider_q), lay.slider_block_half), kSlider);

  // buttons and state glyphs
  fill_rect(f, square(lay.bulb_button, lay.button_half), kButton);
  fill_rect(f, square(lay.led_button, lay.button_half), kButton);
  fill_rect(f, square(lay.bulb_glyph, lay.glyph_half), s.lightbulb_on ? kBulbOn : kBulbOff);
  fill_rect(f, square(lay.led_glyph, lay.glyph_half), s.led_on ? kLedOn : kLedOff);

  fill_rect(f, square(s.block_pos, lay.block_half), kBlock);

  if (!robot_free) draw_ee_glyph(f, s.ee_pos, s.gripper);
  return f;
}

// ---------------------------------------------------------------------------
// scripted expert

namespace {

// Direction-preserving step capped to the per-component action bound.
Action step_to(Vec2 ee, Vec2 target, float dmax, float grip) {
  const float dx = target.x - ee.x, dy = target.y - ee.y;
  const float m = std::max(std::abs(dx), std::abs(dy));
  Action a;
  a.grip = grip;
  if (m < 1e-6f) return a;
  const float scale = m > dmax ? dmax / m : 1.0f;
  a.dx = dx * scale;
  a.dy = dy * scale;
  return a;
}

Action expert_toggle(const SceneState& s, Vec2 button, bool want_on, bool is_on,
                     const EnvConfig& cfg) {
  if (is_on == want_on) return {};
  const Rect region = button_region(cfg.layout, button);
  if (region.contains(s.ee_pos)) {
    // must leave before re-entering: back straight out of the region
    const float away = s.ee_pos.x < button.x ? -1.0f : 1.0f;
    Action a;
    a.dx = away * cfg.delta_max;
    a.grip = 0.0f;
    return a;
  }
  const float d = dist(s.ee_pos, button);
  return step_to(s.ee_pos, button, cfg.delta_max, d <= 3.2f * cfg.delta_max ? 1.0f : 0.0f);
}

float clampf2(float v, float lo, float hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Action scripted_expert(const SceneState& s, TaskId task, const EnvConfig& cfg) {
  const Layout& lay = cfg.layout;
  const float dmax = cfg.delta_max;
  if (success(s, task, cfg)) return {};

  switch (task) {
    case TaskId::open_drawer:
    case TaskId::close_drawer: {
      const bool opening = task == TaskId::open_drawer;
      const float q_target = opening ? 0.97f : 0.03f;
      const Vec2 handle = drawer_handle_pos(lay, s.drawer_q);
      if (dist(s.ee_pos, handle) > 0.012f) return step_to(s.ee_pos, handle, dmax, 0.0f);
      Action a;
      a.grip = 1.0f;
      a.dy = clampf2((q_target - s.drawer_q) * lay.drawer_travel, -dmax, dmax);
      return a;
    }
    case TaskId::turn_on_lightbulb:
      return expert_toggle(s, lay.bulb_button, true, s.lightbulb_on, cfg);
    case TaskId::turn_off_lightbulb:
      return expert_toggle(s, lay.bulb_button, false, s.lightbulb_on, cfg);
    case TaskId::turn_on_led: return expert_toggle(s, lay.led_button, true, s.led_on, cfg);
    case TaskId::turn_off_led: return expert_toggle(s, lay.led_button, false, s.led_on, cfg);
    case TaskId::push_into_drawer: {
      const Vec2 target = drawer_cavity_center(lay, s.drawer_q);
      if (!s.block_grasped) {
        if (dist(s.ee_pos, s.block_pos) > 0.03f) return step_to(s.ee_pos, s.block_pos, dmax, 0.0f);
        Action a;
        a.grip = 1.0f;
        return a;
      }
      if (drawer_cavity(lay, s.drawer_q).contains(s.block_pos)) return {};  // release
      // carry down a side channel, then enter the cavity laterally so the
      // gripper never crosses the drawer handle region
      const float x_side = s.ee_pos.x < 0.5f ? 0.24f : 0.76f;
      if (std::abs(s.ee_pos.y - target.y) > 0.015f) {
        if (std::abs(s.ee_pos.x - x_side) > 0.015f)
          return step_to(s.ee_pos, {x_side, s.ee_pos.y}, dmax, 1.0f);
        return step_to(s.ee_pos, {x_side, target.y}, dmax, 1.0f);
      }
      return step_to(s.ee_pos, target, dmax, 1.0f);
    }
    case TaskId::move_slider_left: {
      const Vec2 handle = slider_handle_pos(lay, s.slider_q);
      if (dist(s.ee_pos, handle) > 0.012f) return step_to(s.ee_pos, handle, dmax, 0.0f);
      Action a;
      a.grip = 1.0f;
      a.dx = clampf2((0.03f - s.slider_q) * lay.slider_travel, -dmax, dmax);
      return a;
    }
  }
  return {};
}

EpisodeLog run_expert_episode(TaskId task, const SceneState& start, const EnvConfig& cfg,
                              bool keep_frames) {
  EpisodeLog log;
  log.task = task;
  SceneState s = start;
  log.states.push_back(s);
  if (keep_frames) log.frames.push_back(render(s, cfg));
  while (true) {
    const Action a = scripted_expert(s, task, cfg);
    const StepResult r = step(s, a, task, cfg);
    log.actions.push_back(a);
    log.rewards.push_back(r.reward);
    log.dones.push_back(r.done ? 1 : 0);
    log.successes.push_back(r.success ? 1 : 0);
    s = r.state;
    log.states.push_back(s);
    if (keep_frames) log.frames.push_back(render(s, cfg));
    if (r.done) break;
  }
  return log;
}

// ---------------------------------------------------------------------------
// episode serialization

namespace {

constexpr int kStateFloats = 11;

void state_to_floats(const SceneState& s, float* out) {
  out[0] = s.ee_pos.x;
  out[1] = s.ee_pos.y;
  out[2] = s.gripper;
  out[3] = s.drawer_q;
  out[4] = s.slider_q;
  out[5] = s.lightbulb_on ? 1.0f : 0.0f;
  out[6] = s.led_on ? 1.0f : 0.0f;
  out[7] = s.block_pos.x;
  out[8] = s.block_pos.y;
  out[9] = s.block_grasped ? 1.0f : 0.0f;
  out[10] = static_cast<float>(s.step_count);
}

SceneState state_from_floats(const float* in) {
  SceneState s;
  s.ee_pos = {in[0], in[1]};
  s.gripper = in[2];
  s.drawer_q = in[3];
  s.slider_q = in[4];
  s.lightbulb_on = in[5] != 0.0f;
  s.led_on = in[6] != 0.0f;
  s.block_pos = {in[7], in[8]};
  s.block_grasped = in[9] != 0.0f;
  s.step_count = static_cast<int>(in[10]);
  return s;
}

}  // namespace

void save_episode(const std::filesystem::path& path, const EpisodeLog& ep) {
  Blob blob;
  const int n = ep.steps();
  const int w = ep.frames.empty() ? 0 : ep.frames[0].w;
  const int h = ep.frames.empty() ? 0 : ep.frames[0].h;
  blob.header["format"] = "tw-episode-1";
  blob.header["task"] = task_name(ep.task);
  blob.header["seed"] = ep.seed;
  blob.header["steps"] = n;
  blob.header["frame_w"] = w;
  blob.header["frame_h"] = h;

  std::vector<float> states(static_cast<size_t>(n + 1) * kStateFloats);
  for (int i = 0; i <= n; ++i) state_to_floats(ep.states[i], states.data() + i * kStateFloats);
  std::vector<float> actions(static_cast<size_t>(n) * 3);
  for (int i = 0; i < n; ++i) {
    actions[i * 3 + 0] = ep.actions[i].dx;
    actions[i * 3 + 1] = ep.actions[i].dy;
    actions[i * 3 + 2] = ep.actions[i].grip;
  }
  std::vector<float> dones(n), succ(n);
  for (int i = 0; i < n; ++i) dones[i] = ep.dones[i];
  for (int i = 0; i < n; ++i) succ[i] = ep.successes[i];
  std::vector<float> frames;
  frames.reserve(static_cast<size_t>(n + 1) * w * h * 3);
  for (const auto& fr : ep.frames) frames.insert(frames.end(), fr.px.begin(), fr.px.end());

  blob.arrays.emplace_back("states", std::move(states));
  blob.arrays.emplace_back("actions", std::move(actions));
  blob.arrays.emplace_back("rewards", ep.rewards);
  blob.arrays.emplace_back("dones", std::move(dones));
  blob.arrays.emplace_back("successes", std::move(succ));
  blob.arrays.emplace_back("frames", std::move(frames));
  write_blob(path, blob);
}

EpisodeLog load_episode(const std::filesystem::path& path) {
  Blob blob = read_blob(path);
  if (blob.header.value("format", "") != "tw-episode-1")
    throw std::runtime_error("twinworld: not an episode file: " + path.string());
  EpisodeLog ep;
  ep.task = task_from_name(blob.header.at("task").get<std::string>());
  ep.seed = blob.header.at("seed").get<uint64_t>();
  const int n = blob.header.at("steps").get<int>();
  const int w = blob.header.at("frame_w").get<int>();
  const int h = blob.header.at("frame_h").get<int>();

  const auto& states = blob.array("states");
  for (int i = 0; i <= n; ++i)
    ep.states.push_back(state_from_floats(states.data() + i * kStateFloats));
  const auto& actions = blob.array("actions");
  for (int i = 0; i < n; ++i)
    ep.actions.push_back({actions[i * 3 + 0], actions[i * 3 + 1], actions[i * 3 + 2]});
  ep.rewards = blob.array("rewards");
  for (float v : blob.array("dones")) ep.dones.push_back(v != 0.0f);
  for (float v : blob.array("successes")) ep.successes.push_back(v != 0.0f);
  const auto& frames = blob.array("frames");
  const size_t fsz = static_cast<size_t>(w) * h * 3;
  for (int i = 0; i <= n && fsz > 0; ++i) {
    Frame fr;
    fr.w = w;
    fr.h = h;
    fr.px.assign(frames.begin() + i * fsz, frames.begin() + (i + 1) * fsz);
    ep.frames.push_back(std::move(fr));
  }
  return ep;
}

}  // namespace tw::sim
