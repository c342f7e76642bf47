#include "tw/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tw::ground {

const char* joint_kind_name(JointKind k) {
  switch (k) {
    case JointKind::prismatic: return "prismatic";
    case JointKind::toggle: return "toggle";
    case JointKind::free: return "free";
  }
  return "?";
}

JointKind joint_kind_from_name(const std::string& s) {
  if (s == "prismatic") return JointKind::prismatic;
  if (s == "toggle") return JointKind::toggle;
  if (s == "free") return JointKind::free;
  throw std::invalid_argument("grounding: unknown joint kind '" + s + "'");
}

const ObjectEntry* Ontology::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::atomic<uint64_t>& grounding_calls() {
  static std::atomic<uint64_t> n{0};
  return n;
}

Ontology init_ontology(const sim::SceneState& scene, const sim::EnvConfig& cfg) {
  const sim::Layout& lay = cfg.layout;
  Ontology ont;

  ObjectEntry drawer;
  drawer.name = "drawer";
  drawer.interaction_part = "handle";
  drawer.joint_kind = JointKind::prismatic;
  drawer.axis = sim::Vec2{0.0f, 1.0f};
  drawer.state_domain = {"closed", "open"};
  drawer.handle_region = drawer_handle_region(lay, scene.drawer_q);
  ont.entries.push_back(drawer);

  ObjectEntry slider;
  slider.name = "slider";
  slider.interaction_part = "handle";
  slider.joint_kind = JointKind::prismatic;
  slider.axis = sim::Vec2{1.0f, 0.0f};
  slider.state_domain = {"left", "right"};
  slider.handle_region = slider_handle_region(lay, scene.slider_q);
  ont.entries.push_back(slider);

  ObjectEntry bulb;
  bulb.name = "lightbulb";
  bulb.interaction_part = "button";
  bulb.joint_kind = JointKind::toggle;
  bulb.state_domain = {"off", "on"};
  bulb.handle_region = button_region(lay, lay.bulb_button);
  ont.entries.push_back(bulb);

  ObjectEntry led;
  led.name = "led";
  led.interaction_part = "button";
  led.joint_kind = JointKind::toggle;
  led.state_domain = {"off", "on"};
  led.handle_region = button_region(lay, lay.led_button);
  ont.entries.push_back(led);

  ObjectEntry block;
  block.name = "block";
  block.interaction_part = "body";
  block.joint_kind = JointKind::free;
  block.state_domain = {"outside_drawer", "inside_drawer"};
  block.handle_region = {scene.block_pos.x - lay.grasp_radius, scene.block_pos.y - lay.grasp_radius,
                         scene.block_pos.x + lay.grasp_radius, scene.block_pos.y + lay.grasp_radius};
  ont.entries.push_back(block);

  return ont;
}

Ontology lint_ontology(const Ontology& ont) {
  if (ont.entries.empty())
    throw std::runtime_error("grounding: unrecoverable ontology, no entries");
  Ontology out;
  for (const auto& e : ont.entries) {
    if (out.find(e.name) != nullptr) continue;  // first occurrence wins
    ObjectEntry fixed = e;
    if (fixed.joint_kind == JointKind::prismatic && !fixed.axis.has_value())
      fixed.joint_kind = JointKind::free;
    if (fixed.state_domain.empty()) fixed.state_domain = {"default"};
    out.entries.push_back(std::move(fixed));
  }
  return out;
}

namespace {

std::string normalize_command(const std::string& command) {
  std::string s;
  s.reserve(command.size());
  for (char c : command) {
    if (c == ' ') {
      s.push_back('_');
    } else {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return s;
}

struct Template {
  const char* object;
  const char* part;
  const char* from;
  const char* to;
};

Template task_template(sim::TaskId task) {
  switch (task) {
    case sim::TaskId::open_drawer: return {"drawer", "handle", "closed", "open"};
    case sim::TaskId::close_drawer: return {"drawer", "handle", "open", "closed"};
    case sim::TaskId::turn_on_lightbulb: return {"lightbulb", "button", "off", "on"};
    case sim::TaskId::turn_off_lightbulb: return {"lightbulb", "button", "on", "off"};
    case sim::TaskId::turn_on_led: return {"led", "button", "off", "on"};
    case sim::TaskId::turn_off_led: return {"led", "button", "on", "off"};
    case sim::TaskId::push_into_drawer: return {"block", "body", "outside_drawer", "inside_drawer"};
    case sim::TaskId::move_slider_left: return {"slider", "handle", "right", "left"};
  }
  throw std::invalid_argument("grounding: bad task id");
}

bool entry_valid(const Ontology& ont, const ObjectEntry& e) {
  int n = 0;
  for (const auto& other : ont.entries)
    if (other.name == e.name) ++n;
  if (n != 1) return false;
  if (e.joint_kind == JointKind::prismatic && !e.axis.has_value()) return false;
  if (e.joint_kind == JointKind::toggle && e.state_domain.size() != 2) return false;
  if (e.state_domain.empty()) return false;
  return true;
}

bool spec_valid(const TaskSpec& spec, const Ontology& ont) {
  const ObjectEntry* e = ont.find(spec.object);
  if (e == nullptr || !entry_valid(ont, *e)) return false;
  auto in_domain = [&](const std::string& s) {
    return std::find(e->state_domain.begin(), e->state_domain.end(), s) != e->state_domain.end();
  };
  if (!in_domain(spec.transition.from_state) || !in_domain(spec.transition.to_state)) return false;
  if (spec.transition.from_state == spec.transition.to_state) return false;
  return true;
}

}  // namespace

TaskSpec canonical_spec(sim::TaskId task, const Ontology& ont) {
  const Template t = task_template(task);
  TaskSpec spec;
  spec.object = t.object;
  const ObjectEntry* e = ont.find(t.object);
  spec.part = e != nullptr ? e->interaction_part : t.part;
  spec.transition = {t.from, t.to};
  spec.constraints.max_steps = 200;
  if (task == sim::TaskId::push_into_drawer) spec.constraints.approach_side = "lateral";
  return spec;
}

TaskSpec ground_task(const std::string& command, const sim::SceneState& scene,
                     const Ontology& ont, const sim::EnvConfig& cfg) {
  (void)scene;
  (void)cfg;
  grounding_calls().fetch_add(1, std::memory_order_relaxed);
  const std::string norm = normalize_command(command);
  sim::TaskId task;
  try {
    task = sim::task_from_name(norm);
  } catch (const std::invalid_argument&) {
    std::string msg = "grounding: unknown task '" + command + "'; canonical commands:";
    for (sim::TaskId t : sim::kAllTasks) msg += std::string(" ") + sim::task_name(t);
    throw std::invalid_argument(msg);
  }

  TaskSpec spec = canonical_spec(task, ont);
  if (spec_valid(spec, ont)) return spec;

  // fall back to the sanitized ontology
  const Ontology linted = lint_ontology(ont);
  spec = canonical_spec(task, linted);
  if (spec_valid(spec, linted)) return spec;
  throw std::runtime_error("grounding: failed to ground '" + norm +
                           "' even against the linted ontology");
}

sim::TaskId task_of_spec(const TaskSpec& spec) {
  for (sim::TaskId task : sim::kAllTasks) {
    const Template t = task_template(task);
    if (spec.object == t.object && spec.transition.to_state == t.to) return task;
  }
  throw std::invalid_argument("grounding: invalid spec, object '" + spec.object +
                              "' with target state '" + spec.transition.to_state +
                              "' matches no task");
}

bool verify_completion(const sim::SceneState& scene, const TaskSpec& spec,
                       const sim::EnvConfig& cfg) {
  return sim::success(scene, task_of_spec(spec), cfg);
}

// ---------------------------------------------------------------------------
// JSON forms

namespace {

nlohmann::json rect_to_json(const sim::Rect& r) {
  return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}};
}

sim::Rect rect_from_json(const nlohmann::json& j) {
  return {j.at("x0").get<float>(), j.at("y0").get<float>(), j.at("x1").get<float>(),
          j.at("y1").get<float>()};
}

}  // namespace

nlohmann::json to_json(const TaskSpec& spec) {
  nlohmann::json j;
  j["object"] = spec.object;
  j["part"] = spec.part;
  j["transition"] = {{"from_state", spec.transition.from_state},
                     {"to_state", spec.transition.to_state}};
  j["constraints"]["max_steps"] = spec.constraints.max_steps;
  j["constraints"]["approach_side"] =
      spec.constraints.approach_side.has_value() ? nlohmann::json(*spec.constraints.approach_side)
                                                 : nlohmann::json(nullptr);
  return j;
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  TaskSpec spec;
  spec.object = j.at("object").get<std::string>();
  spec.part = j.at("part").get<std::string>();
  spec.transition.from_state = j.at("transition").at("from_state").get<std::string>();
  spec.transition.to_state = j.at("transition").at("to_state").get<std::string>();
  spec.constraints.max_steps = j.at("constraints").at("max_steps").get<int>();
  const auto& side = j.at("constraints").at("approach_side");
  if (!side.is_null()) spec.constraints.approach_side = side.get<std::string>();
  return spec;
}

nlohmann::json to_json(const Ontology& ont) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ont.entries) {
    nlohmann::json ej;
    ej["name"] = e.name;
    ej["interaction_part"] = e.interaction_part;
    ej["joint_kind"] = joint_kind_name(e.joint_kind);
    ej["axis"] = e.axis.has_value() ? nlohmann::json({e.axis->x, e.axis->y})
                                    : nlohmann::json(nullptr);
    ej["state_domain"] = e.state_domain;
    ej["handle_region"] = rect_to_json(e.handle_region);
    entries.push_back(ej);
  }
  return {{"entries", entries}};
}

Ontology ontology_from_json(const nlohmann::json& j) {
  Ontology ont;
  for (const auto& ej : j.at("entries")) {
    ObjectEntry e;
    e.name = ej.at("name").get<std::string>();
    e.interaction_part = ej.at("interaction_part").get<std::string>();
    e.joint_kind = joint_kind_from_name(ej.at("joint_kind").get<std::string>());
    if (!ej.at("axis").is_null())
      e.axis = sim::Vec2{ej.at("axis").at(0).get<float>(), ej.at("axis").at(1).get<float>()};
    e.state_domain = ej.at("state_domain").get<std::vector<std::string>>();
    e.handle_region = rect_from_json(ej.at("handle_region"));
    ont.entries.push_back(std::move(e));
  }
  return ont;
}

std::vector<std::string> validate_task_spec_json(const nlohmann::json& j) {
  std::vector<std::string> errs;
  auto need_string = [&](const nlohmann::json& node, const char* key, const char* where) {
    if (!node.contains(key) || !node.at(key).is_string())
      errs.push_back(std::string(where) + ": missing string field '" + key + "'");
  };
  if (!j.is_object()) {
    errs.push_back("spec: not a JSON object");
    return errs;
  }
  need_string(j, "object", "spec");
  need_string(j, "part", "spec");
  if (!j.contains("transition") || !j.at("transition").is_object()) {
    errs.push_back("spec: missing object field 'transition'");
  } else {
    need_string(j.at("transition"), "from_state", "transition");
    need_string(j.at("transition"), "to_state", "transition");
    if (errs.empty() &&
        j.at("transition").at("from_state") == j.at("transition").at("to_state"))
      errs.push_back("transition: from_state equals to_state");
  }
  if (!j.contains("constraints") || !j.at("constraints").is_object()) {
    errs.push_back("spec: missing object field 'constraints'");
  } else {
    const auto& c = j.at("constraints");
    if (!c.contains("max_steps") || !c.at("max_steps").is_number_integer() ||
        c.at("max_steps").get<int>() <= 0)
      errs.push_back("constraints: max_steps must be a positive integer");
    if (c.contains("approach_side") && !c.at("approach_side").is_null() &&
        !c.at("approach_side").is_string())
      errs.push_back("constraints: approach_side must be a string or null");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string k = it.key();
    if (k != "object" && k != "part" && k != "transition" && k != "constraints")
      errs.push_back("spec: unknown field '" + k + "'");
  }
  return errs;
}

}  // namespace tw::ground
