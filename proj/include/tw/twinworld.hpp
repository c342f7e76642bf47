#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tw/rng.hpp"

namespace tw::sim {

enum class TaskId {
  open_drawer,
  close_drawer,
  turn_on_lightbulb,
  turn_off_lightbulb,
  turn_on_led,
  turn_off_led,
  push_into_drawer,
  move_slider_left,
};
constexpr int kNumTasks = 8;
extern const TaskId kAllTasks[kNumTasks];

const char* task_name(TaskId task);
TaskId task_from_name(const std::string& name);  // throws on unknown name

struct Vec2 {
  float x = 0.0f, y = 0.0f;
};
inline float dist(Vec2 a, Vec2 b) {
  const float dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct Rect {
  float x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

// End-effector delta plus absolute gripper command.
struct Action {
  float dx = 0.0f, dy = 0.0f;  // clamped to [-delta_max, delta_max]
  float grip = 0.0f;           // clamped to [0, 1]
};
constexpr int kActionDim = 3;

struct SceneState {
  Vec2 ee_pos;
  float gripper = 0.0f;
  float drawer_q = 0.0f;  // prismatic, 0 closed .. 1 open
  float slider_q = 0.0f;  // prismatic, 0 left .. 1 right
  bool lightbulb_on = false;
  bool led_on = false;
  Vec2 block_pos;
  bool block_grasped = false;
  int step_count = 0;
};

bool operator==(const SceneState& a, const SceneState& b);

// Fixed scene geometry. Initial poses are jittered per episode; the
// furniture itself stays put.
struct Layout {
  Rect drawer_base{0.35f, 0.02f, 0.65f, 0.10f};
  float drawer_travel = 0.25f;          // front panel slides +y as q grows
  float drawer_front_h = 0.045f;
  Rect slider_rail{0.30f, 0.895f, 0.70f, 0.915f};
  float slider_travel = 0.40f;
  Vec2 bulb_button{0.12f, 0.68f};
  Vec2 bulb_glyph{0.12f, 0.84f};
  Vec2 led_button{0.88f, 0.68f};
  Vec2 led_glyph{0.88f, 0.84f};
  float button_half = 0.04f;
  float glyph_half = 0.04f;
  float handle_half = 0.04f;
  float grasp_radius = 0.045f;
  float block_half = 0.028f;
  float slider_block_half = 0.035f;
};

struct EnvConfig {
  int render_w = 32;
  int render_h = 32;
  float delta_max = 0.05f;
  int max_steps = 200;
  bool shaping = true;           // potential-based, preserves optimal policies
  float shaping_weight = 1.0f;
  float shaping_gamma = 0.99f;
  Layout layout;
};

// Geometry helpers shared by the expert, the grounding ontology and tests.
Vec2 drawer_handle_pos(const Layout& l, float drawer_q);
Rect drawer_handle_region(const Layout& l, float drawer_q);
Vec2 drawer_cavity_center(const Layout& l, float drawer_q);
Rect drawer_cavity(const Layout& l, float drawer_q);
Vec2 slider_handle_pos(const Layout& l, float slider_q);
Rect slider_handle_region(const Layout& l, float slider_q);
Rect button_region(const Layout& l, Vec2 button);
Rect glyph_region(const EnvConfig& cfg, Vec2 glyph);  // in pixel coordinates

SceneState reset(TaskId task, uint64_t seed, const EnvConfig& cfg = {});

struct StepResult {
  SceneState state;
  float reward = 0.0f;
  bool done = false;
  bool success = false;
};

StepResult step(const SceneState& state, const Action& action, TaskId task,
                const EnvConfig& cfg = {});

bool success(const SceneState& state, TaskId task, const EnvConfig& cfg = {});

// Distance-to-subgoal potential used by the shaped reward.
float potential(const SceneState& state, TaskId task, const EnvConfig& cfg = {});

struct Frame {
  int w = 0, h = 0;
  std::vector<float> px;  // row-major H x W x RGB in [0,1]

  float at(int x, int y, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
};

bool operator==(const Frame& a, const Frame& b);

Frame render(const SceneState& state, const EnvConfig& cfg = {}, bool robot_free = false);
void draw_ee_glyph(Frame& frame, Vec2 pos, float grip);

Action scripted_expert(const SceneState& state, TaskId task, const EnvConfig& cfg = {});

// One episode with everything needed to rebuild training data: states and
// rendered frames have length steps+1, the rest length steps.
struct EpisodeLog {
  TaskId task = TaskId::open_drawer;
  uint64_t seed = 0;
  std::vector<SceneState> states;
  std::vector<Frame> frames;
  std::vector<Action> actions;
  std::vector<float> rewards;
  std::vector<uint8_t> dones;
  std::vector<uint8_t> successes;

  int steps() const { return static_cast<int>(actions.size()); }
};

// Rolls the scripted expert from `start` until done.
EpisodeLog run_expert_episode(TaskId task, const SceneState& start, const EnvConfig& cfg,
                              bool keep_frames = true);

void save_episode(const std::filesystem::path& path, const EpisodeLog& episode);
EpisodeLog load_episode(const std::filesystem::path& path);

}  // namespace tw::sim
