#include <doctest.h>

#include <cmath>

#include "tw/future.hpp"

using namespace tw;
using namespace tw::future;
using tw::sim::EnvConfig;
using tw::sim::SceneState;
using tw::sim::TaskId;

namespace {

const EnvConfig kCfg{};

ground::TaskSpec spec_for(TaskId task, const SceneState& scene) {
  return ground::canonical_spec(task, ground::init_ontology(scene, kCfg));
}

bool has_ee_arm_pixels(const sim::Frame& f) {
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x)
      if (f.at(x, y, 0) == 1.0f && f.at(x, y, 1) == 1.0f && f.at(x, y, 2) == 1.0f) return true;
  return false;
}

}  // namespace

TEST_CASE("extract_gt_future: plain window and padding rules") {
  const SceneState start = sim::reset(TaskId::push_into_drawer, 3, kCfg);
  const sim::EpisodeLog ep = sim::run_expert_episode(TaskId::push_into_drawer, start, kCfg);
  REQUIRE(ep.frames.size() >= 17);

  const FutureClip head = extract_gt_future(ep, 0, 16);
  REQUIRE(head.length() == 16);
  CHECK(head.source == Source::GT);
  CHECK(!head.robot_free);
  for (int k = 0; k < 16; ++k) CHECK(head.frames[k] == ep.frames[k + 1]);

  const int last = static_cast<int>(ep.frames.size()) - 1;
  const FutureClip tail = extract_gt_future(ep, last, 16);
  for (int k = 0; k < 16; ++k) CHECK(tail.frames[k] == ep.frames.back());

  CHECK_THROWS_AS(extract_gt_future(ep, last + 1, 16), std::out_of_range);
}

TEST_CASE("dt_rollout: linear drawer profile") {
  SceneState scene = sim::reset(TaskId::open_drawer, 7, kCfg);
  scene.drawer_q = 0.0f;
  const FutureClip clip = dt_rollout(scene, spec_for(TaskId::open_drawer, scene), 16, kCfg);
  REQUIRE(clip.length() == 16);
  CHECK(clip.source == Source::DT_TRANSPARENT);
  CHECK(clip.robot_free);
  // oracle: frame k must equal a robot-free render with q = k/(T-1)
  for (int k = 0; k < 16; ++k) {
    SceneState expect = scene;
    expect.drawer_q = static_cast<float>(k) / 15.0f;
    CHECK(clip.frames[k] == sim::render(expect, kCfg, true));
  }
}

TEST_CASE("dt_rollout: booleans switch at the midpoint frame") {
  SceneState scene = sim::reset(TaskId::turn_on_lightbulb, 9, kCfg);
  REQUIRE(!scene.lightbulb_on);
  const FutureClip clip = dt_rollout(scene, spec_for(TaskId::turn_on_lightbulb, scene), 16, kCfg);
  const sim::Rect g = glyph_region(kCfg, kCfg.layout.bulb_glyph);
  const int cx = static_cast<int>(g.x0), cy = static_cast<int>(g.y0);
  for (int k = 0; k < 16; ++k) {
    const bool on = clip.frames[k].at(cx, cy, 0) == 1.0f;  // bulb-on color
    CHECK(on == (k >= 8));
  }
}

TEST_CASE("dt_rollout: frames carry no ee glyph") {
  const SceneState scene = sim::reset(TaskId::move_slider_left, 11, kCfg);
  const FutureClip clip = dt_rollout(scene, spec_for(TaskId::move_slider_left, scene), 16, kCfg);
  for (const auto& f : clip.frames) CHECK(!has_ee_arm_pixels(f));
}

TEST_CASE("dt_rollout: unknown spec object is an invalid spec") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 2, kCfg);
  ground::TaskSpec bad = spec_for(TaskId::open_drawer, scene);
  bad.object = "sink";
  CHECK_THROWS_AS(dt_rollout(scene, bad, 16, kCfg), std::invalid_argument);
}

TEST_CASE("inpaint_robot: zero noise equals the composite oracle") {
  SceneState scene = sim::reset(TaskId::turn_on_lightbulb, 21, kCfg);
  const auto spec = spec_for(TaskId::turn_on_lightbulb, scene);
  const FutureClip transparent = dt_rollout(scene, spec, 16, kCfg);
  const sim::Frame initial = sim::render(scene, kCfg, false);
  Rng rng(5);
  const FutureClip got =
      inpaint_robot(transparent, initial, scene, spec, GenNoiseConfig{0.0f, 0, 0.0f}, rng, kCfg);
  REQUIRE(got.length() == 16);
  CHECK(got.source == Source::GEN);
  CHECK(!got.robot_free);

  // independent composite oracle: straight-line approach to the static
  // button over the first 8 frames, then hold it with the gripper closed
  const sim::Vec2 button = kCfg.layout.bulb_button;
  for (int k = 0; k < 16; ++k) {
    sim::Frame want = transparent.frames[k];
    sim::Vec2 pos;
    float grip;
    if (k == 0) {
      pos = scene.ee_pos;
      grip = scene.gripper;
    } else if (k < 8) {
      const float a = static_cast<float>(k) / 8.0f;
      pos = {scene.ee_pos.x + a * (button.x - scene.ee_pos.x),
             scene.ee_pos.y + a * (button.y - scene.ee_pos.y)};
      grip = 0.0f;
    } else {
      pos = button;
      grip = 1.0f;
    }
    sim::draw_ee_glyph(want, pos, grip);
    CHECK(want == got.frames[k]);
  }
}

TEST_CASE("inpaint_robot: frame 1 anchored at the current ee regardless of noise") {
  SceneState scene = sim::reset(TaskId::open_drawer, 31, kCfg);
  const auto spec = spec_for(TaskId::open_drawer, scene);
  const FutureClip transparent = dt_rollout(scene, spec, 16, kCfg);
  const sim::Frame initial = sim::render(scene, kCfg, false);
  Rng rng(99);
  const FutureClip clip =
      inpaint_robot(transparent, initial, scene, spec, GenNoiseConfig{0.25f, 3, 0.9f}, rng, kCfg);
  sim::Frame want = transparent.frames[0];
  sim::draw_ee_glyph(want, scene.ee_pos, scene.gripper);
  CHECK(clip.frames[0] == want);
}

TEST_CASE("inpaint_robot: deterministic per seed, size mismatch rejected") {
  SceneState scene = sim::reset(TaskId::move_slider_left, 4, kCfg);
  const auto spec = spec_for(TaskId::move_slider_left, scene);
  const FutureClip transparent = dt_rollout(scene, spec, 16, kCfg);
  const sim::Frame initial = sim::render(scene, kCfg, false);
  GenNoiseConfig noise;  // defaults (0.02, 1, 0.05)
  Rng r1(7), r2(7);
  const FutureClip a = inpaint_robot(transparent, initial, scene, spec, noise, r1, kCfg);
  const FutureClip b = inpaint_robot(transparent, initial, scene, spec, noise, r2, kCfg);
  REQUIRE(a.length() == b.length());
  for (int k = 0; k < a.length(); ++k) CHECK(a.frames[k] == b.frames[k]);

  EnvConfig small = kCfg;
  small.render_w = 16;
  small.render_h = 16;
  const sim::Frame tiny = sim::render(scene, small, false);
  Rng r3(7);
  CHECK_THROWS_AS(inpaint_robot(transparent, tiny, scene, spec, noise, r3, kCfg),
                  std::invalid_argument);
}

TEST_CASE("wrong_future: excludes the commanded task, uniform over the rest") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 6, kCfg);
  const auto spec = spec_for(TaskId::open_drawer, scene);
  Rng rng(123);
  int counts[sim::kNumTasks] = {0};
  for (int i = 0; i < 10000; ++i) {
    Rng ep_rng(rng.next_u64());
    const FutureClip clip = wrong_future(scene, spec, ep_rng, 4, GenNoiseConfig{0, 0, 0}, kCfg);
    CHECK(clip.origin_task != TaskId::open_drawer);
    CHECK(clip.source == Source::WRONG);
    ++counts[static_cast<int>(clip.origin_task)];
  }
  // each of the 7 alternatives within 3 sigma of 10000/7
  const double mean = 10000.0 / 7.0;
  const double sigma = std::sqrt(10000.0 * (1.0 / 7.0) * (6.0 / 7.0));
  for (sim::TaskId t : sim::kAllTasks) {
    if (t == TaskId::open_drawer) continue;
    CHECK(std::abs(counts[static_cast<int>(t)] - mean) <= 3.0 * sigma);
  }
}

TEST_CASE("wrong_future: deterministic per seed") {
  const SceneState scene = sim::reset(TaskId::close_drawer, 8, kCfg);
  const auto spec = spec_for(TaskId::close_drawer, scene);
  Rng r1(55), r2(55);
  const FutureClip a = wrong_future(scene, spec, r1, 16, GenNoiseConfig{}, kCfg);
  const FutureClip b = wrong_future(scene, spec, r2, 16, GenNoiseConfig{}, kCfg);
  CHECK(a.origin_task == b.origin_task);
  for (int k = 0; k < 16; ++k) CHECK(a.frames[k] == b.frames[k]);
}

TEST_CASE("make_future: per-condition dispatch and tagging") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 12, kCfg);
  FutureContext ctx;
  ctx.T = 16;
  ctx.scene = scene;
  ctx.spec = spec_for(TaskId::open_drawer, scene);
  ctx.env = kCfg;
  Rng rng(3);
  ctx.rng = &rng;

  CHECK(!make_future(Condition::NoFuture, ctx).has_value());

  const auto gen = make_future(Condition::GenFuture, ctx);
  REQUIRE(gen.has_value());
  CHECK(gen->source == Source::GEN);
  CHECK(!gen->robot_free);
  CHECK(gen->length() == 16);

  CHECK_THROWS_AS(make_future(Condition::GTFuture, ctx), std::runtime_error);

  const sim::EpisodeLog demo = sim::run_expert_episode(TaskId::open_drawer, scene, kCfg);
  ctx.demo = &demo;
  ctx.t = 0;
  const auto gt = make_future(Condition::GTFuture, ctx);
  REQUIRE(gt.has_value());
  const FutureClip direct = extract_gt_future(demo, 0, 16);
  for (int k = 0; k < 16; ++k) CHECK(gt->frames[k] == direct.frames[k]);
}

TEST_CASE("clip invariants: length T and robot_free tagging everywhere") {
  const SceneState scene = sim::reset(TaskId::push_into_drawer, 14, kCfg);
  const auto spec = spec_for(TaskId::push_into_drawer, scene);
  for (int T : {1, 5, 16}) {
    const FutureClip dt = dt_rollout(scene, spec, T, kCfg);
    CHECK(dt.length() == T);
    CHECK(dt.robot_free);
    Rng rng(1);
    const sim::Frame initial = sim::render(scene, kCfg, false);
    const FutureClip gen = inpaint_robot(dt, initial, scene, spec, GenNoiseConfig{}, rng, kCfg);
    CHECK(gen.length() == T);
    CHECK(!gen.robot_free);
  }
}
