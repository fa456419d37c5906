#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bimanual {

/// Number of voxels per workspace axis; indices run over [0, kVoxelsPerAxis).
inline constexpr int kVoxelsPerAxis = 100;
inline constexpr int kMaxVoxel = kVoxelsPerAxis - 1;
/// Rotation bin width in degrees and number of bins per Euler angle.
inline constexpr double kRotationBinDegrees = 5.0;
inline constexpr int kRotationBins = 72;
inline constexpr int kMaxRotationBin = kRotationBins - 1;

inline constexpr int kArmArity = 7;
inline constexpr int kBimanualArity = 14;

using Vec3 = Eigen::Vector3d;
using VoxelIndex = std::array<int, 3>;
using RotationBins = std::array<int, 3>;

/// Axis-aligned workspace box in meters.
struct WorkspaceBounds {
  Vec3 min{-0.3, -0.5, 0.6};
  Vec3 max{0.7, 0.5, 1.6};

  /// Throws RangeError unless min < max on every axis.
  void validate() const;
  Vec3 span() const { return max - min; }
  /// Edge length of one voxel per axis. The 99 multiplier of the binning rule
  /// makes cells (max - min) / 99 wide.
  Vec3 voxel_edge() const { return span() / static_cast<double>(kMaxVoxel); }
  bool contains(const Vec3& p) const;
};

/// A continuous end-effector state before discretization.
struct ContinuousPose {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  /// Normalized aperture, 0 = fully closed, 1 = fully open.
  double gripper = 1.0;
};

/// One arm's keyframe command: (vx, vy, vz, rx, ry, rz, g).
struct DiscreteAction {
  VoxelIndex voxel{0, 0, 0};
  RotationBins rot{0, 0, 0};
  int gripper = 1;

  auto operator<=>(const DiscreteAction&) const = default;

  bool valid() const;
  std::array<int, kArmArity> to_array() const;
  /// Throws RangeError when any component is outside the codec ranges.
  static DiscreteAction from_span(std::span<const int> values);
};

enum class Arm { kRight, kLeft };

inline Arm other(Arm arm) { return arm == Arm::kRight ? Arm::kLeft : Arm::kRight; }
std::string to_string(Arm arm);
/// Accepts "right" or "left"; throws RangeError otherwise.
Arm arm_from_string(const std::string& name);

/// Z^14 joint command; right arm occupies indices 0..6, left arm 7..13.
struct BimanualAction {
  DiscreteAction right;
  DiscreteAction left;

  auto operator<=>(const BimanualAction&) const = default;

  bool valid() const { return right.valid() && left.valid(); }
  const DiscreteAction& arm(Arm a) const { return a == Arm::kRight ? right : left; }
  DiscreteAction& arm(Arm a) { return a == Arm::kRight ? right : left; }
  std::array<int, kBimanualArity> to_array() const;
  static BimanualAction from_span(std::span<const int> values);
};

using ArmTrajectory = std::vector<DiscreteAction>;
using BimanualTrajectory = std::vector<BimanualAction>;

/// Extracts one arm's 7-tuples from a bimanual trajectory.
ArmTrajectory arm_trajectory(const BimanualTrajectory& traj, Arm arm);

/// floor((p - min) / (max - min) * 99) per axis. Throws OutOfWorkspace when
/// any coordinate lies outside the bounds; positions are never clamped.
VoxelIndex voxelize(const Vec3& position, const WorkspaceBounds& bounds = {});

/// Representative point of a voxel cell. Cells 0..98 map to the center of
/// their [v, v+1) / 99 interval; cell 99 only contains the upper bound, so it
/// maps to max. Guarantees voxelize(devoxelize(v)) == v.
Vec3 devoxelize(const VoxelIndex& voxel, const WorkspaceBounds& bounds = {});

/// Intrinsic x-y-z Euler angles (radians) of a rotation, i.e. the (a, b, c)
/// with R = Rx(a) * Ry(b) * Rz(c), a, c in (-pi, pi], b in [-pi/2, pi/2].
Vec3 euler_xyz(const Eigen::Quaterniond& q);
Eigen::Quaterniond quaternion_from_euler_xyz(const Vec3& angles_rad);

struct RotationBinning {
  RotationBins bins{0, 0, 0};
  /// Set when |pitch| is within 1e-3 rad of pi/2; the roll/yaw split is then
  /// numerically arbitrary.
  bool gimbal_warning = false;
};

/// Bins a unit quaternion into 5-degree Euler bins after normalizing each
/// angle into [0, 360). Throws RangeError for non-unit input.
RotationBinning bin_rotation(const Eigen::Quaterniond& q);

/// Inverse of bin_rotation using bin centers (r + 0.5) * 5 degrees.
Eigen::Quaterniond unbin_rotation(const RotationBins& rot);

/// Bin-center angles in degrees, before composing into a quaternion.
Vec3 bin_center_degrees(const RotationBins& rot);

/// voxelize + bin_rotation + gripper threshold (open iff aperture >= 0.5).
DiscreteAction discretize_pose(const ContinuousPose& pose, const WorkspaceBounds& bounds = {});

/// Pose at the representative point of a discrete action.
ContinuousPose continuous_pose(const DiscreteAction& action, const WorkspaceBounds& bounds = {});

}  // namespace bimanual
