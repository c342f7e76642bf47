#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "tw/grounding.hpp"
#include "tw/rng.hpp"
#include "tw/twinworld.hpp"

namespace tw::future {

enum class Source { GT, DT_TRANSPARENT, GEN, WRONG };
const char* source_name(Source s);

enum class Condition { NoFuture, GTFuture, GenFuture, WrongFuture };
const char* condition_name(Condition c);
Condition condition_from_name(const std::string& s);

// A short-horizon clip of exactly T frames plus provenance.
struct FutureClip {
  std::vector<sim::Frame> frames;
  Source source = Source::GT;
  bool robot_free = false;  // true iff source == DT_TRANSPARENT
  sim::TaskId origin_task = sim::TaskId::open_drawer;

  int length() const { return static_cast<int>(frames.size()); }
};

// Corruption knobs for the compositing surrogate standing in for a learned
// video inpainter.
struct GenNoiseConfig {
  float waypoint_jitter_sigma = 0.02f;  // unit-square units
  int temporal_lag = 1;                 // frames the robot trails the object
  float dropout_prob = 0.05f;           // chance a frame loses its ee glyph
};

// Frames t+1 .. t+T of a logged episode, last frame repeated past the end.
FutureClip extract_gt_future(const sim::EpisodeLog& episode, int t, int T);

// Robot-free linear articulation rollout for the spec's object: scalars
// interpolate from the current to the target value, booleans switch at
// frame ceil(T/2); every frame rendered with the robot suppressed.
FutureClip dt_rollout(const sim::SceneState& scene, const ground::TaskSpec& spec, int T,
                      const sim::EnvConfig& cfg = {});

// Deterministic ee path composited over a transparent rollout, corrupted by
// cfg-controlled jitter, lag and dropout. Frame 0 stays anchored at the
// current ee pose.
FutureClip inpaint_robot(const FutureClip& transparent, const sim::Frame& initial,
                         const sim::SceneState& scene, const ground::TaskSpec& spec,
                         const GenNoiseConfig& noise, Rng& rng,
                         const sim::EnvConfig& cfg = {});

// GenFuture for a uniformly sampled different task in the same scene.
FutureClip wrong_future(const sim::SceneState& scene, const ground::TaskSpec& spec, Rng& rng,
                        int T, const GenNoiseConfig& noise, const sim::EnvConfig& cfg = {});

// Everything make_future may need; conditions use the subset they care about.
struct FutureContext {
  int T = 16;
  const sim::EpisodeLog* demo = nullptr;  // GTFuture
  int t = 0;
  sim::SceneState scene;                  // Gen/Wrong
  ground::TaskSpec spec;
  GenNoiseConfig noise;
  Rng* rng = nullptr;
  sim::EnvConfig env;
};

std::optional<FutureClip> make_future(Condition condition, const FutureContext& ctx);

// The noiseless planned ee path (one waypoint per frame) that the composite
// surrogate follows. Exposed so tests can build the composite oracle.
std::vector<sim::Vec2> plan_ee_path(const sim::SceneState& scene, const ground::TaskSpec& spec,
                                    int T, const sim::EnvConfig& cfg = {});
std::vector<float> plan_ee_grip(const sim::SceneState& scene, const ground::TaskSpec& spec,
                                int T, const sim::EnvConfig& cfg = {});

// Instrumentation for the condition-isolation checks.
struct CallCounters {
  std::atomic<uint64_t> gt{0};
  std::atomic<uint64_t> dt{0};
  std::atomic<uint64_t> gen{0};
  std::atomic<uint64_t> wrong{0};

  void reset() { gt = dt = gen = wrong = 0; }
};
CallCounters& counters();

}  // namespace tw::future
