#include <doctest.h>

#include "tw/grounding.hpp"
#include "tw/rng.hpp"
#include "tw/twinworld.hpp"

using namespace tw;
using namespace tw::ground;
using tw::sim::EnvConfig;
using tw::sim::SceneState;
using tw::sim::TaskId;

namespace {
const EnvConfig kCfg{};
}

TEST_CASE("init_ontology: exactly 5 deterministic entries") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 42, kCfg);
  const Ontology a = init_ontology(scene, kCfg);
  CHECK(a.entries.size() == 5);
  const Ontology b = init_ontology(scene, kCfg);
  CHECK(to_json(a) == to_json(b));
  const ObjectEntry* drawer = a.find("drawer");
  REQUIRE(drawer != nullptr);
  CHECK(drawer->joint_kind == JointKind::prismatic);
  REQUIRE(drawer->axis.has_value());
  CHECK(drawer->axis->y == 1.0f);
  // geometry tracks the scene
  SceneState open = scene;
  open.drawer_q = 1.0f;
  const Ontology c = init_ontology(open, kCfg);
  CHECK(c.find("drawer")->handle_region.y0 > drawer->handle_region.y0);
}

TEST_CASE("lint_ontology: idempotent on valid input") {
  const Ontology ont = init_ontology(sim::reset(TaskId::close_drawer, 1, kCfg), kCfg);
  const Ontology once = lint_ontology(ont);
  CHECK(to_json(once) == to_json(ont));
  CHECK(to_json(lint_ontology(once)) == to_json(once));
}

TEST_CASE("lint_ontology: drops duplicates, first wins") {
  Ontology ont = init_ontology(sim::reset(TaskId::open_drawer, 2, kCfg), kCfg);
  ObjectEntry dup = ont.entries[0];
  dup.interaction_part = "junk";
  ont.entries.push_back(dup);
  const Ontology out = lint_ontology(ont);
  CHECK(out.entries.size() == 5);
  CHECK(out.find("drawer")->interaction_part == "handle");
}

TEST_CASE("lint_ontology: demotes prismatic without axis, fills domains") {
  Ontology ont = init_ontology(sim::reset(TaskId::open_drawer, 2, kCfg), kCfg);
  ont.entries[1].axis.reset();          // slider loses its axis
  ont.entries[4].state_domain.clear();  // block loses its states
  const Ontology out = lint_ontology(ont);
  CHECK(out.find("slider")->joint_kind == JointKind::free);
  REQUIRE(out.find("block")->state_domain.size() == 1);
  CHECK(out.find("block")->state_domain[0] == "default");
}

TEST_CASE("lint_ontology: empty list is unrecoverable") {
  CHECK_THROWS_AS(lint_ontology(Ontology{}), std::runtime_error);
}

TEST_CASE("ground_task: canonical command maps to its template") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 42, kCfg);
  const Ontology ont = init_ontology(scene, kCfg);
  const TaskSpec spec = ground_task("open_drawer", scene, ont, kCfg);
  CHECK(spec.object == "drawer");
  CHECK(spec.part == "handle");
  CHECK(spec.transition.from_state == "closed");
  CHECK(spec.transition.to_state == "open");
}

TEST_CASE("ground_task: normalization of case and spaces") {
  const SceneState scene = sim::reset(TaskId::turn_on_lightbulb, 4, kCfg);
  const Ontology ont = init_ontology(scene, kCfg);
  const TaskSpec a = ground_task("Turn On Lightbulb", scene, ont, kCfg);
  const TaskSpec b = ground_task("turn_on_lightbulb", scene, ont, kCfg);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("ground_task: out-of-vocabulary command lists canonical ones") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 3, kCfg);
  const Ontology ont = init_ontology(scene, kCfg);
  CHECK_THROWS_WITH_AS(ground_task("make coffee", scene, ont, kCfg),
                       doctest::Contains("open_drawer"), std::invalid_argument);
}

TEST_CASE("ground_task: falls back to the linted ontology") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 5, kCfg);
  Ontology broken = init_ontology(scene, kCfg);
  ObjectEntry dup = broken.entries[0];
  dup.state_domain.clear();
  broken.entries.push_back(dup);  // duplicate drawer breaks uniqueness
  const TaskSpec spec = ground_task("open_drawer", scene, broken, kCfg);
  CHECK(spec.object == "drawer");
  CHECK(spec.transition.to_state == "open");
}

TEST_CASE("ground_task: fails when lint cannot rescue the entry") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 5, kCfg);
  Ontology broken = init_ontology(scene, kCfg);
  broken.entries[0].state_domain.clear();  // lint fills {default}: still no closed/open
  CHECK_THROWS_AS(ground_task("open_drawer", scene, broken, kCfg), std::runtime_error);
}

TEST_CASE("verify_completion: delegates to the success predicate") {
  const SceneState scene = sim::reset(TaskId::open_drawer, 42, kCfg);
  const Ontology ont = init_ontology(scene, kCfg);
  const TaskSpec spec = ground_task("open_drawer", scene, ont, kCfg);
  SceneState s = scene;
  s.drawer_q = 0.95f;
  CHECK(verify_completion(s, spec, kCfg));
  s.drawer_q = 0.5f;
  CHECK(!verify_completion(s, spec, kCfg));
}

TEST_CASE("verify_completion: unknown object is an invalid spec") {
  TaskSpec spec;
  spec.object = "sink";
  spec.part = "tap";
  spec.transition = {"off", "on"};
  CHECK_THROWS_AS(verify_completion(SceneState{}, spec, kCfg), std::invalid_argument);
}

TEST_CASE("round-trip: grounded spec agrees with env success on random states") {
  Rng rng(7);
  for (TaskId task : sim::kAllTasks) {
    const SceneState scene = sim::reset(task, 9, kCfg);
    const Ontology ont = init_ontology(scene, kCfg);
    const TaskSpec spec = ground_task(sim::task_name(task), scene, ont, kCfg);
    CHECK(task_of_spec(spec) == task);
    for (int i = 0; i < 100; ++i) {
      SceneState s = scene;
      s.ee_pos = {rng.uniform(0.0f, 1.0f), rng.uniform(0.0f, 1.0f)};
      s.drawer_q = rng.uniform(0.0f, 1.0f);
      s.slider_q = rng.uniform(0.0f, 1.0f);
      s.lightbulb_on = rng.uniform() < 0.5;
      s.led_on = rng.uniform() < 0.5;
      s.block_pos = {rng.uniform(0.0f, 1.0f), rng.uniform(0.0f, 1.0f)};
      s.block_grasped = rng.uniform() < 0.3;
      if (s.block_grasped) s.block_pos = s.ee_pos;
      CHECK(verify_completion(s, spec, kCfg) == sim::success(s, task, kCfg));
    }
  }
}

TEST_CASE("ground_task: total over all 8 commands with a linted ontology") {
  const SceneState scene = sim::reset(TaskId::push_into_drawer, 10, kCfg);
  const Ontology ont = lint_ontology(init_ontology(scene, kCfg));
  for (TaskId task : sim::kAllTasks)
    CHECK_NOTHROW(ground_task(sim::task_name(task), scene, ont, kCfg));
}

TEST_CASE("task spec json: round-trip and schema validation") {
  const SceneState scene = sim::reset(TaskId::push_into_drawer, 11, kCfg);
  const Ontology ont = init_ontology(scene, kCfg);
  const TaskSpec spec = ground_task("push_into_drawer", scene, ont, kCfg);
  const nlohmann::json j = to_json(spec);
  CHECK(validate_task_spec_json(j).empty());
  const TaskSpec back = task_spec_from_json(j);
  CHECK(to_json(back) == j);

  nlohmann::json bad = j;
  bad["transition"]["to_state"] = bad["transition"]["from_state"];
  CHECK(!validate_task_spec_json(bad).empty());
  nlohmann::json unknown = j;
  unknown["llm"] = "none";
  CHECK(!validate_task_spec_json(unknown).empty());
}

TEST_CASE("ontology json: round-trip") {
  const Ontology ont = init_ontology(sim::reset(TaskId::open_drawer, 13, kCfg), kCfg);
  CHECK(to_json(ontology_from_json(to_json(ont))) == to_json(ont));
}
