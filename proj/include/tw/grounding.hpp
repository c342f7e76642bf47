#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tw/twinworld.hpp"

#include <json.hpp>

namespace tw::ground {

enum class JointKind { prismatic, toggle, free };
const char* joint_kind_name(JointKind k);
JointKind joint_kind_from_name(const std::string& s);

struct ObjectEntry {
  std::string name;
  std::string interaction_part;
  JointKind joint_kind = JointKind::free;
  std::optional<sim::Vec2> axis;  // unit vector, prismatic only
  std::vector<std::string> state_domain;
  sim::Rect handle_region;
};

struct Ontology {
  std::vector<ObjectEntry> entries;

  const ObjectEntry* find(const std::string& name) const;
};

struct StateTransition {
  std::string from_state;
  std::string to_state;
};

struct TaskConstraints {
  int max_steps = 200;
  std::optional<std::string> approach_side;
};

struct TaskSpec {
  std::string object;
  std::string part;
  StateTransition transition;
  TaskConstraints constraints;
};

// One entry per simulator entity, geometry read from the live scene.
Ontology init_ontology(const sim::SceneState& scene, const sim::EnvConfig& cfg = {});

// Rule-based sanitizer: dedup by name (first wins), demote axis-less
// prismatic entries to free, fill empty state domains with {default}.
// Throws on an empty entry list.
Ontology lint_ontology(const Ontology& ont);

// Template grounding of the eight canonical commands. Commands are matched
// case-insensitively with spaces or underscores. If the produced spec fails
// validation against `ont`, grounding retries against lint_ontology(ont).
TaskSpec ground_task(const std::string& command, const sim::SceneState& scene,
                     const Ontology& ont, const sim::EnvConfig& cfg = {});

bool verify_completion(const sim::SceneState& scene, const TaskSpec& spec,
                       const sim::EnvConfig& cfg = {});

// Canonical spec <-> task mapping used by the harness and the DT rollout.
TaskSpec canonical_spec(sim::TaskId task, const Ontology& ont);
sim::TaskId task_of_spec(const TaskSpec& spec);  // throws invalid-spec

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Ontology& ont);
Ontology ontology_from_json(const nlohmann::json& j);

// Schema validation for external spec files; returns a list of violations,
// empty when valid.
std::vector<std::string> validate_task_spec_json(const nlohmann::json& j);

// Per-episode instrumentation (protocol checks want grounding counted).
std::atomic<uint64_t>& grounding_calls();

}  // namespace tw::ground
