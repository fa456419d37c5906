#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bimanual/action_codec.hpp"
#include "bimanual/demo_store.hpp"
#include "bimanual/observation.hpp"
#include "bimanual/perception.hpp"

namespace bimanual {

// Positions in this module are continuous voxel coordinates: u = (p - min) /
// (max - min) * 99, so 1.0 is one voxel edge and the grid spans [0, 99].

enum class Coupling { kSymmetric, kAsymmetric, kLoose };
std::string to_string(Coupling c);
Coupling coupling_from_string(const std::string& name);

/// Success predicate, which also fixes the meaning of each object slot:
///   lift_sym      [tray]              both arms grasp the handles and lift
///   handover      [object]            right picks, hands over, left carries
///   dual_targets  [right_target, left_target]  each arm presses its target
///   drawer_item   [drawer, item]      left opens the drawer, right stows the item
enum class TaskPredicate { kLiftSym, kHandover, kDualTargets, kDrawerItem };
std::string to_string(TaskPredicate p);
TaskPredicate task_predicate_from_string(const std::string& name);

struct ObjectSpec {
  std::string name;
  /// Spawn box of the object center, voxel coordinates.
  Vec3 region_min = Vec3::Zero();
  Vec3 region_max = Vec3::Zero();
  /// Box extent in meters, used to synthesize point clouds.
  Vec3 size{0.05, 0.05, 0.05};
  /// Grasp points relative to the center, voxel units.
  std::vector<Vec3> grasp_offsets{Vec3::Zero()};
};

struct TaskSpec {
  std::string name;
  TaskPredicate predicate = TaskPredicate::kLiftSym;
  Coupling coupling = Coupling::kSymmetric;
  std::vector<ObjectSpec> objects;

  /// Throws ConfigError on a bad region, a wrong object count for the
  /// predicate, or duplicate names.
  void validate() const;
};

TaskSpec task_from_json(const std::string& text);
std::string task_to_json(const TaskSpec& task);
TaskSpec load_task(const std::filesystem::path& file);

/// lift-sym, handover, dual-targets, drawer-item.
const std::vector<TaskSpec>& builtin_tasks();
/// Built-in task by name, or a task file when `name_or_path` is a path to an
/// existing file. Throws ConfigError.
TaskSpec resolve_task(const std::string& name_or_path);

inline constexpr double kGraspRadius = 2.0;
/// Height gain that counts as lifted.
inline constexpr double kLiftHeight = 10.0;
/// Drawer travel that counts as open.
inline constexpr double kDrawerOpenTravel = 8.0;
inline constexpr double kDrawerMaxTravel = 18.0;
/// Half-width of the drawer interior footprint.
inline constexpr double kDrawerInteriorHalf = 4.0;

struct ObjectState {
  std::string name;
  Vec3 position = Vec3::Zero();
  Vec3 rest = Vec3::Zero();
  Vec3 size = Vec3::Zero();
  std::vector<Vec3> grasp_offsets;
};

struct ArmPose {
  Vec3 position = Vec3::Zero();
  Vec3 euler_deg = Vec3::Zero();
};

/// Fixed start pose of each arm; grippers start open.
ArmPose home_pose(Arm arm);

struct BenchOptions {
  WorkspaceBounds bounds;
  ExtractionStrategy perception = ExtractionStrategy::kPrune;
  BoxCameraRig rig;
};

struct World {
  TaskSpec task;
  std::vector<ObjectState> objects;
  Observation observation;
  std::uint64_t seed = 0;
  WorkspaceBounds bounds;
};

/// Places every object uniformly in its spawn box and observes the scene
/// through synthetic multi-camera clouds. Deterministic in (task, seed).
World spawn(const TaskSpec& task, std::uint64_t seed, const BenchOptions& options = {});

/// Dense, waypoint-interpolated expert episode.
std::vector<EpisodeStep> expert_steps(const World& world);

/// Keyframed expert demonstration of `world`.
Demonstration scripted_expert(const World& world);

struct EpisodeResult {
  bool success = false;
  BimanualTrajectory plan;
  std::vector<ObjectState> final_objects;
  /// Empty iff success.
  std::string failure_reason;
};

/// Teleports both grippers through the plan's keyframes and evaluates the
/// task predicate on the final state.
EpisodeResult execute(const World& world, const BimanualTrajectory& plan);

/// `count` expert demonstrations from spawn seeds mix_seed(seed, i).
std::vector<Demonstration> generate_dataset(const TaskSpec& task, std::size_t count,
                                            std::uint64_t seed, const BenchOptions& options = {});

/// Continuous voxel coordinates <-> meters.
Vec3 to_meters(const Vec3& u, const WorkspaceBounds& bounds);
Vec3 to_voxel_units(const Vec3& p, const WorkspaceBounds& bounds);

}  // namespace bimanual
