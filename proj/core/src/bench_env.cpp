#include "bimanual/bench_env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bimanual/errors.hpp"
#include "bimanual/random.hpp"

namespace bimanual {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
/// Interpolation step of the dense expert episodes, voxels.
constexpr double kDenseStep = 2.0;

struct Waypoint {
  Vec3 right;
  Vec3 left;
  int right_grip = 1;
  int left_grip = 1;
};

std::size_t arm_index(Arm a) { return a == Arm::kRight ? 0 : 1; }

std::size_t required_objects(TaskPredicate p) {
  return p == TaskPredicate::kLiftSym || p == TaskPredicate::kHandover ? 1 : 2;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const ordered_json& node, const std::string& what) {
  if (!node.is_array() || node.size() != 3) throw ConfigError(what + " must be a 3-array");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!node[i].is_number()) throw ConfigError(what + " must hold numbers");
    out[i] = node[i].get<double>();
  }
  return out;
}

// Grasp point of `obj` closest to the given side (+1 right/+x, -1 left/-x).
Vec3 grasp_point(const ObjectState& obj, int side) {
  const Vec3* best = &obj.grasp_offsets.front();
  for (const auto& g : obj.grasp_offsets) {
    if (side * g.x() > side * best->x()) best = &g;
  }
  return obj.position + *best;
}

Vec3 up(double dz) { return {0.0, 0.0, dz}; }

std::vector<Waypoint> lift_sym_plan(const World& w) {
  const auto& tray = w.objects[0];
  const Vec3 r = grasp_point(tray, +1);
  const Vec3 l = grasp_point(tray, -1);
  return {
      {r + up(10), l + up(10), 1, 1},
      {r, l, 1, 1},
      {r, l, 0, 0},
      {r + up(20), l + up(20), 0, 0},
  };
}

std::vector<Waypoint> handover_plan(const World& w) {
  const Vec3 c = w.objects[0].position;
  const Vec3 home_l = home_pose(Arm::kLeft).position;
  const Vec3 h = c + Vec3(-12, 0, 25);
  return {
      {c + up(10), home_l, 1, 1},
      {c, home_l, 1, 1},
      {c, home_l, 0, 1},
      {h, home_l, 0, 1},
      {h, h + Vec3(-10, 0, 0), 0, 1},
      {h, h, 0, 1},
      {h, h, 0, 0},
      {h, h, 1, 0},
      {h + Vec3(12, 0, 8), h, 1, 0},
      {h + Vec3(12, 0, 8), h + Vec3(-20, 0, 0), 1, 0},
  };
}

std::vector<Waypoint> dual_targets_plan(const World& w) {
  const Vec3 r = w.objects[0].position;
  const Vec3 l = w.objects[1].position;
  return {
      {r + up(10), l + up(10), 1, 1},
      {r + up(10), l + up(10), 0, 0},
      {r, l, 0, 0},
      {r + up(10), l + up(10), 0, 0},
  };
}

std::vector<Waypoint> drawer_item_plan(const World& w) {
  const auto& drawer = w.objects[0];
  const Vec3 handle = grasp_point(drawer, -1);
  const Vec3 item = w.objects[1].position;
  const Vec3 pull(0, -12, 0);
  const Vec3 pulled = handle + pull;
  const Vec3 retreat = pulled + Vec3(-12, 0, 12);
  const Vec3 interior = drawer.position + pull;
  const Vec3 lifted = item + up(15);
  return {
      {item + up(10), handle + up(8), 1, 1},
      {item, handle, 1, 1},
      {item, handle, 0, 0},
      {lifted, pulled, 0, 0},
      {lifted, pulled, 0, 1},
      {lifted, retreat, 0, 1},
      {interior + up(15), retreat, 0, 1},
      {interior + up(4), retreat, 0, 1},
      {interior + up(4), retreat, 1, 1},
      {interior + up(15), retreat, 1, 1},
  };
}

std::vector<Waypoint> expert_waypoints(const World& w) {
  switch (w.task.predicate) {
    case TaskPredicate::kLiftSym: return lift_sym_plan(w);
    case TaskPredicate::kHandover: return handover_plan(w);
    case TaskPredicate::kDualTargets: return dual_targets_plan(w);
    case TaskPredicate::kDrawerItem: return drawer_item_plan(w);
  }
  return {};
}

ContinuousPose make_pose(const Vec3& u, Arm arm, int grip, const WorkspaceBounds& bounds) {
  ContinuousPose p;
  p.position = to_meters(u, bounds);
  p.orientation = quaternion_from_euler_xyz(home_pose(arm).euler_deg * (kPi / 180.0));
  p.gripper = grip ? 1.0 : 0.0;
  return p;
}

// Kinematic replay of a keyframe plan.
class Sim {
 public:
  explicit Sim(const World& w) : w_(w), objects_(w.objects) {
    pos_ = {home_pose(Arm::kRight).position, home_pose(Arm::kLeft).position};
    const std::size_t n = objects_.size();
    ever_.assign(n, {false, false});
    ever_both_.assign(n, false);
    pressed_.assign(n, false);
  }

  void step(const BimanualAction& a) {
    std::array<Vec3, 2> next;
    std::array<int, 2> grip_next;
    for (Arm arm : {Arm::kRight, Arm::kLeft}) {
      const auto i = arm_index(arm);
      next[i] = to_voxel_units(devoxelize(a.arm(arm).voxel, w_.bounds), w_.bounds);
      grip_next[i] = a.arm(arm).gripper;
    }
    carry(next);
    pos_ = next;

    for (std::size_t i = 0; i < 2; ++i) {
      if (attach_[i] && grip_next[i] == 1) {
        const std::size_t o = *attach_[i];
        attach_[i].reset();
        if (holders(o) == 0) release(o);
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      if (grip_[i] == 1 && grip_next[i] == 0 && !attach_[i]) attach_[i] = nearest_graspable(pos_[i]);
    }
    for (std::size_t o = 0; o < objects_.size(); ++o) {
      if (attach_[0] == o) ever_[o][0] = true;
      if (attach_[1] == o) ever_[o][1] = true;
      if (attach_[0] == o && attach_[1] == o) ever_both_[o] = true;
    }
    if (w_.task.predicate == TaskPredicate::kDrawerItem && (attach_[0] == 1u || attach_[1] == 1u)) {
      in_drawer_ = false;
    }
    if (w_.task.predicate == TaskPredicate::kDualTargets) {
      for (std::size_t i = 0; i < 2; ++i) {
        if (grip_next[i] != 0) continue;
        for (std::size_t o = 0; o < objects_.size(); ++o) {
          if (near(objects_[o], pos_[i])) pressed_[o] = true;
        }
      }
    }
    grip_ = grip_next;
  }

  EpisodeResult finish(const BimanualTrajectory& plan) const {
    EpisodeResult r;
    r.plan = plan;
    r.final_objects = objects_;
    r.failure_reason = verdict();
    r.success = r.failure_reason.empty();
    return r;
  }

 private:
  bool touched(std::size_t o) const { return ever_[o][0] || ever_[o][1]; }

  int holders(std::size_t o) const {
    return (attach_[0] == o ? 1 : 0) + (attach_[1] == o ? 1 : 0);
  }

  bool near(const ObjectState& obj, const Vec3& p) const {
    for (const auto& g : obj.grasp_offsets) {
      if ((obj.position + g - p).norm() <= kGraspRadius) return true;
    }
    return false;
  }

  bool movable(std::size_t o) const { return w_.task.predicate != TaskPredicate::kDualTargets || o > 1; }

  std::optional<std::size_t> nearest_graspable(const Vec3& p) const {
    std::optional<std::size_t> best;
    double best_d = kGraspRadius;
    for (std::size_t o = 0; o < objects_.size(); ++o) {
      if (!movable(o)) continue;
      for (const auto& g : objects_[o].grasp_offsets) {
        const double d = (objects_[o].position + g - p).norm();
        if (d <= best_d && (!best || d < best_d)) {
          best = o;
          best_d = d;
        }
      }
    }
    return best;
  }

  bool is_drawer(std::size_t o) const {
    return w_.task.predicate == TaskPredicate::kDrawerItem && o == 0;
  }

  void carry(const std::array<Vec3, 2>& next) {
    for (std::size_t o = 0; o < objects_.size(); ++o) {
      Vec3 sum = Vec3::Zero();
      int n = 0;
      for (std::size_t i = 0; i < 2; ++i) {
        if (attach_[i] == o) {
          sum += next[i] - pos_[i];
          ++n;
        }
      }
      if (n == 0) continue;
      // A symmetric load only moves when held from both sides.
      if (w_.task.predicate == TaskPredicate::kLiftSym && n < 2) continue;
      const Vec3 d = sum / n;
      if (is_drawer(o)) {
        auto& drawer = objects_[o];
        const double y = std::clamp(drawer.position.y() + d.y(), drawer.rest.y() - kDrawerMaxTravel,
                                    drawer.rest.y());
        const double dy = y - drawer.position.y();
        drawer.position.y() = y;
        if (in_drawer_) objects_[1].position.y() += dy;
      } else {
        objects_[o].position += d;
      }
    }
  }

  void release(std::size_t o) {
    auto& obj = objects_[o];
    if (is_drawer(o)) return;
    if (w_.task.predicate == TaskPredicate::kDrawerItem && o == 1) {
      const auto& drawer = objects_[0];
      const double travel = drawer.rest.y() - drawer.position.y();
      const bool inside = std::abs(obj.position.x() - drawer.position.x()) <= kDrawerInteriorHalf &&
                          std::abs(obj.position.y() - drawer.position.y()) <= kDrawerInteriorHalf;
      if (inside && travel >= kDrawerOpenTravel) {
        in_drawer_ = true;
        obj.position.z() = drawer.position.z();
        return;
      }
    }
    obj.position.z() = obj.rest.z();  // unsupported objects drop back to the table
  }

  std::string verdict() const {
    switch (w_.task.predicate) {
      case TaskPredicate::kLiftSym: {
        if (!touched(0)) return "no_contact";
        if (!ever_both_[0]) return "single_grasp";
        if (objects_[0].position.z() - objects_[0].rest.z() < kLiftHeight) return "not_lifted";
        return {};
      }
      case TaskPredicate::kHandover: {
        if (!touched(0)) return "no_contact";
        if (!ever_both_[0]) return "no_handover";
        if (attach_[0] == 0u) return "not_released";
        if (attach_[1] != 0u) return "dropped";
        if (objects_[0].position.z() - objects_[0].rest.z() < kLiftHeight) return "not_lifted";
        return {};
      }
      case TaskPredicate::kDualTargets: {
        const int n = (pressed_[0] ? 1 : 0) + (pressed_[1] ? 1 : 0);
        if (n == 0) return "no_contact";
        if (n == 1) return "missed_target";
        return {};
      }
      case TaskPredicate::kDrawerItem: {
        if (!touched(0) && !touched(1)) return "no_contact";
        const auto& drawer = objects_[0];
        if (drawer.rest.y() - drawer.position.y() < kDrawerOpenTravel) return "drawer_closed";
        if (attach_[0] == 1u || attach_[1] == 1u) return "holding";
        if (!in_drawer_) return "not_placed";
        return {};
      }
    }
    return "unknown_task";
  }

  const World& w_;
  std::vector<ObjectState> objects_;
  std::array<Vec3, 2> pos_;
  std::array<int, 2> grip_{1, 1};
  std::array<std::optional<std::size_t>, 2> attach_;
  std::vector<std::array<bool, 2>> ever_;
  std::vector<bool> ever_both_;
  std::vector<bool> pressed_;
  bool in_drawer_ = false;
};

}  // namespace

std::string to_string(Coupling c) {
  switch (c) {
    case Coupling::kSymmetric: return "symmetric";
    case Coupling::kAsymmetric: return "asymmetric";
    case Coupling::kLoose: return "loose";
  }
  return "loose";
}

Coupling coupling_from_string(const std::string& name) {
  if (name == "symmetric") return Coupling::kSymmetric;
  if (name == "asymmetric") return Coupling::kAsymmetric;
  if (name == "loose") return Coupling::kLoose;
  throw ConfigError("unknown coupling class '" + name + "'");
}

std::string to_string(TaskPredicate p) {
  switch (p) {
    case TaskPredicate::kLiftSym: return "lift_sym";
    case TaskPredicate::kHandover: return "handover";
    case TaskPredicate::kDualTargets: return "dual_targets";
    case TaskPredicate::kDrawerItem: return "drawer_item";
  }
  return "lift_sym";
}

TaskPredicate task_predicate_from_string(const std::string& name) {
  if (name == "lift_sym") return TaskPredicate::kLiftSym;
  if (name == "handover") return TaskPredicate::kHandover;
  if (name == "dual_targets") return TaskPredicate::kDualTargets;
  if (name == "drawer_item") return TaskPredicate::kDrawerItem;
  throw ConfigError("unknown task predicate '" + name + "'");
}

void TaskSpec::validate() const {
  if (name.empty()) throw ConfigError("task needs a name");
  if (objects.size() != required_objects(predicate)) {
    throw ConfigError("task '" + name + "': predicate " + to_string(predicate) + " needs " +
                      std::to_string(required_objects(predicate)) + " objects");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (o.name.empty()) throw ConfigError("task '" + name + "': object without a name");
    for (std::size_t j = 0; j < i; ++j) {
      if (objects[j].name == o.name) throw ConfigError("task '" + name + "': duplicate object " + o.name);
    }
    for (int a = 0; a < 3; ++a) {
      if (!(o.region_min[a] >= 0.0 && o.region_max[a] <= kMaxVoxel && o.region_min[a] <= o.region_max[a])) {
        throw ConfigError("task '" + name + "': spawn region of " + o.name + " must lie in [0, 99]");
      }
      if (!(o.size[a] > 0.0)) throw ConfigError("task '" + name + "': size of " + o.name + " must be > 0");
    }
    if (o.grasp_offsets.empty()) throw ConfigError("task '" + name + "': " + o.name + " has no grasp point");
  }
}

TaskSpec task_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("task spec is not valid JSON: ") + e.what());
  }
  TaskSpec t;
  try {
    t.name = doc.at("name").get<std::string>();
    t.predicate = task_predicate_from_string(doc.at("predicate").get<std::string>());
    t.coupling = coupling_from_string(doc.at("coupling").get<std::string>());
    for (const auto& o : doc.at("objects")) {
      ObjectSpec spec;
      spec.name = o.at("name").get<std::string>();
      spec.region_min = vec_from_json(o.at("region_min"), spec.name + ".region_min");
      spec.region_max = vec_from_json(o.at("region_max"), spec.name + ".region_max");
      if (o.contains("size")) spec.size = vec_from_json(o["size"], spec.name + ".size");
      if (o.contains("grasp_offsets")) {
        spec.grasp_offsets.clear();
        for (const auto& g : o["grasp_offsets"]) {
          spec.grasp_offsets.push_back(vec_from_json(g, spec.name + ".grasp_offsets"));
        }
      }
      t.objects.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("task spec: ") + e.what());
  }
  t.validate();
  return t;
}

std::string task_to_json(const TaskSpec& task) {
  ordered_json doc;
  doc["name"] = task.name;
  doc["predicate"] = to_string(task.predicate);
  doc["coupling"] = to_string(task.coupling);
  doc["objects"] = ordered_json::array();
  for (const auto& o : task.objects) {
    ordered_json node;
    node["name"] = o.name;
    node["region_min"] = vec_json(o.region_min);
    node["region_max"] = vec_json(o.region_max);
    node["size"] = vec_json(o.size);
    node["grasp_offsets"] = ordered_json::array();
    for (const auto& g : o.grasp_offsets) node["grasp_offsets"].push_back(vec_json(g));
    doc["objects"].push_back(std::move(node));
  }
  return doc.dump(2) + "\n";
}

TaskSpec load_task(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open task file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return task_from_json(ss.str());
}

const std::vector<TaskSpec>& builtin_tasks() {
  static const std::vector<TaskSpec> tasks = [] {
    std::vector<TaskSpec> out;
    out.push_back({"lift-sym", TaskPredicate::kLiftSym, Coupling::kSymmetric,
                   {{"tray", {42, 38, 20}, {58, 62, 20}, {0.18, 0.08, 0.03},
                     {{8, 0, 0}, {-8, 0, 0}}}}});
    out.push_back({"handover", TaskPredicate::kHandover, Coupling::kAsymmetric,
                   {{"cube", {62, 38, 20}, {76, 62, 20}, {0.05, 0.05, 0.05}, {Vec3::Zero()}}}});
    out.push_back({"dual-targets", TaskPredicate::kDualTargets, Coupling::kLoose,
                   {{"right_button", {64, 48, 20}, {68, 52, 20}, {0.04, 0.04, 0.02}, {Vec3::Zero()}},
                    {"left_button", {32, 48, 20}, {36, 52, 20}, {0.04, 0.04, 0.02}, {Vec3::Zero()}}}});
    out.push_back({"drawer-item", TaskPredicate::kDrawerItem, Coupling::kLoose,
                   {{"drawer", {38, 54, 20}, {42, 58, 20}, {0.12, 0.10, 0.06}, {{0, -6, 0}}},
                    {"item", {66, 40, 20}, {70, 44, 20}, {0.04, 0.04, 0.04}, {Vec3::Zero()}}}});
    return out;
  }();
  return tasks;
}

TaskSpec resolve_task(const std::string& name_or_path) {
  for (const auto& t : builtin_tasks()) {
    if (t.name == name_or_path) return t;
  }
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec)) return load_task(name_or_path);
  throw ConfigError("unknown task '" + name_or_path + "'");
}

ArmPose home_pose(Arm arm) {
  // Grippers point down and face each other.
  if (arm == Arm::kRight) return {{80, 50, 75}, {182.5, 2.5, 2.5}};
  return {{20, 50, 75}, {182.5, 2.5, 182.5}};
}

Vec3 to_meters(const Vec3& u, const WorkspaceBounds& bounds) {
  return bounds.min + (u / static_cast<double>(kMaxVoxel)).cwiseProduct(bounds.span());
}

Vec3 to_voxel_units(const Vec3& p, const WorkspaceBounds& bounds) {
  return (p - bounds.min).cwiseQuotient(bounds.span()) * static_cast<double>(kMaxVoxel);
}

World spawn(const TaskSpec& task, std::uint64_t seed, const BenchOptions& options) {
  task.validate();
  World w;
  w.task = task;
  w.seed = seed;
  w.bounds = options.bounds;
  std::mt19937_64 rng(mix_seed(seed, fnv1a(task.name)));
  for (const auto& spec : task.objects) {
    ObjectState s;
    s.name = spec.name;
    for (int a = 0; a < 3; ++a) s.position[a] = uniform_real(rng, spec.region_min[a], spec.region_max[a]);
    s.rest = s.position;
    s.size = spec.size;
    s.grasp_offsets = spec.grasp_offsets;
    w.objects.push_back(std::move(s));
  }
  std::mt19937_64 camera_rng(mix_seed(seed, fnv1a("cameras")));
  ObjectClouds clouds;
  for (const auto& o : w.objects) {
    clouds.emplace_back(o.name, synthetic_box_clouds(o.name, to_meters(o.position, w.bounds), o.size,
                                                     camera_rng, options.rig));
  }
  w.observation = build_observation(clouds, options.perception, w.bounds);
  return w;
}

std::vector<EpisodeStep> expert_steps(const World& world) {
  const auto waypoints = expert_waypoints(world);
  const auto& b = world.bounds;
  Waypoint cur{home_pose(Arm::kRight).position, home_pose(Arm::kLeft).position, 1, 1};

  std::vector<EpisodeStep> steps;
  auto push = [&](const Vec3& r, const Vec3& l, int rg, int lg, double rs, double ls) {
    steps.push_back({make_pose(r, Arm::kRight, rg, b), make_pose(l, Arm::kLeft, lg, b), rs, ls, false});
  };
  push(cur.right, cur.left, 1, 1, 0.0, 0.0);

  for (const auto& wp : waypoints) {
    const double dr = (wp.right - cur.right).norm();
    const double dl = (wp.left - cur.left).norm();
    if (std::max(dr, dl) > 1e-9) {
      const int n = std::max(1, static_cast<int>(std::ceil(std::max(dr, dl) / kDenseStep)));
      for (int s = 1; s <= n; ++s) {
        const double t = static_cast<double>(s) / n;
        // Joint speed stand-in: Cartesian distance per step.
        push(cur.right + t * (wp.right - cur.right), cur.left + t * (wp.left - cur.left),
             cur.right_grip, cur.left_grip, dr / n, dl / n);
      }
      push(wp.right, wp.left, cur.right_grip, cur.left_grip, 0.0, 0.0);
    }
    if (wp.right_grip != cur.right_grip || wp.left_grip != cur.left_grip) {
      push(wp.right, wp.left, wp.right_grip, wp.left_grip, 0.0, 0.0);
    }
    cur = wp;
  }
  steps.back().is_terminal = true;
  return steps;
}

Demonstration scripted_expert(const World& world) {
  return {world.observation, extract_keyframes(expert_steps(world), world.bounds)};
}

EpisodeResult execute(const World& world, const BimanualTrajectory& plan) {
  Sim sim(world);
  for (const auto& a : plan) sim.step(a);
  return sim.finish(plan);
}

std::vector<Demonstration> generate_dataset(const TaskSpec& task, std::size_t count,
                                            std::uint64_t seed, const BenchOptions& options) {
  std::vector<Demonstration> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(scripted_expert(spawn(task, mix_seed(seed, i), options)));
  }
  return out;
}

}  // namespace bimanual
