#include "bimanual/action_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bimanual/errors.hpp"

namespace bimanual {
namespace {

constexpr double kUnitNormTolerance = 1e-6;
constexpr double kGimbalBandRad = 1e-3;
// Euler extraction lands a few ulps off exact bin edges (5 degrees comes back
// as 4.999999999999999); snap within this many bins before flooring.
constexpr double kBinSnap = 1e-9;

double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

std::string describe(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return os.str();
}

void check_range(int value, int hi, const char* what) {
  if (value < 0 || value > hi) {
    throw RangeError(std::string(what) + " " + std::to_string(value) + " outside [0, " +
                     std::to_string(hi) + "]");
  }
}

int bin_angle(double radians) {
  double deg = std::fmod(rad_to_deg(radians), 360.0);
  if (deg < 0.0) deg += 360.0;
  int bin = static_cast<int>(std::floor(deg / kRotationBinDegrees + kBinSnap));
  return bin % kRotationBins;
}

}  // namespace

void WorkspaceBounds::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(min[i] < max[i])) {
      throw RangeError("workspace bounds must satisfy min < max on every axis");
    }
  }
}

bool WorkspaceBounds::contains(const Vec3& p) const {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(p[i]) || p[i] < min[i] || p[i] > max[i]) return false;
  }
  return true;
}

bool DiscreteAction::valid() const {
  for (int v : voxel) {
    if (v < 0 || v > kMaxVoxel) return false;
  }
  for (int r : rot) {
    if (r < 0 || r > kMaxRotationBin) return false;
  }
  return gripper == 0 || gripper == 1;
}

std::array<int, kArmArity> DiscreteAction::to_array() const {
  return {voxel[0], voxel[1], voxel[2], rot[0], rot[1], rot[2], gripper};
}

DiscreteAction DiscreteAction::from_span(std::span<const int> values) {
  if (values.size() != kArmArity) {
    throw RangeError("arm action needs 7 values, got " + std::to_string(values.size()));
  }
  DiscreteAction a;
  for (int i = 0; i < 3; ++i) {
    check_range(values[i], kMaxVoxel, "voxel index");
    check_range(values[3 + i], kMaxRotationBin, "rotation bin");
    a.voxel[i] = values[i];
    a.rot[i] = values[3 + i];
  }
  check_range(values[6], 1, "gripper bit");
  a.gripper = values[6];
  return a;
}

std::string to_string(Arm arm) { return arm == Arm::kRight ? "right" : "left"; }

Arm arm_from_string(const std::string& name) {
  if (name == "right") return Arm::kRight;
  if (name == "left") return Arm::kLeft;
  throw RangeError("unknown arm '" + name + "'");
}

std::array<int, kBimanualArity> BimanualAction::to_array() const {
  std::array<int, kBimanualArity> out{};
  auto r = right.to_array();
  auto l = left.to_array();
  std::copy(r.begin(), r.end(), out.begin());
  std::copy(l.begin(), l.end(), out.begin() + kArmArity);
  return out;
}

BimanualAction BimanualAction::from_span(std::span<const int> values) {
  if (values.size() != kBimanualArity) {
    throw RangeError("bimanual action needs 14 values, got " + std::to_string(values.size()));
  }
  return {DiscreteAction::from_span(values.first(kArmArity)),
          DiscreteAction::from_span(values.subspan(kArmArity))};
}

ArmTrajectory arm_trajectory(const BimanualTrajectory& traj, Arm arm) {
  ArmTrajectory out;
  out.reserve(traj.size());
  for (const auto& a : traj) out.push_back(a.arm(arm));
  return out;
}

VoxelIndex voxelize(const Vec3& position, const WorkspaceBounds& bounds) {
  if (!bounds.contains(position)) {
    throw OutOfWorkspace("position " + describe(position) + " outside workspace " +
                         describe(bounds.min) + " - " + describe(bounds.max));
  }
  VoxelIndex v{};
  for (int i = 0; i < 3; ++i) {
    double t = (position[i] - bounds.min[i]) / (bounds.max[i] - bounds.min[i]);
    v[i] = static_cast<int>(std::floor(t * kMaxVoxel));
  }
  return v;
}

Vec3 devoxelize(const VoxelIndex& voxel, const WorkspaceBounds& bounds) {
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    check_range(voxel[i], kMaxVoxel, "voxel index");
    if (voxel[i] == kMaxVoxel) {
      p[i] = bounds.max[i];
    } else {
      p[i] = bounds.min[i] + (voxel[i] + 0.5) / kMaxVoxel * (bounds.max[i] - bounds.min[i]);
    }
  }
  return p;
}

Vec3 euler_xyz(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  const double cb = std::cos(b);
  if (cb < 1e-12) {
    // Gimbal lock: only a + c (or a - c) is observable; put it all in a.
    return {std::atan2(r(2, 1), r(1, 1)), b, 0.0};
  }
  return {std::atan2(-r(1, 2), r(2, 2)), b, std::atan2(-r(0, 1), r(0, 0))};
}

Eigen::Quaterniond quaternion_from_euler_xyz(const Vec3& a) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(a.x(), Vec3::UnitX()) *
                            Eigen::AngleAxisd(a.y(), Vec3::UnitY()) *
                            Eigen::AngleAxisd(a.z(), Vec3::UnitZ()));
}

RotationBinning bin_rotation(const Eigen::Quaterniond& q) {
  if (std::abs(q.norm() - 1.0) > kUnitNormTolerance) {
    throw RangeError("orientation quaternion is not unit norm");
  }
  const Vec3 e = euler_xyz(q);
  RotationBinning out;
  out.bins = {bin_angle(e.x()), bin_angle(e.y()), bin_angle(e.z())};
  out.gimbal_warning = std::abs(std::abs(e.y()) - std::numbers::pi / 2) < kGimbalBandRad;
  return out;
}

Vec3 bin_center_degrees(const RotationBins& rot) {
  Vec3 deg;
  for (int i = 0; i < 3; ++i) {
    check_range(rot[i], kMaxRotationBin, "rotation bin");
    deg[i] = (rot[i] + 0.5) * kRotationBinDegrees;
  }
  return deg;
}

Eigen::Quaterniond unbin_rotation(const RotationBins& rot) {
  const Vec3 deg = bin_center_degrees(rot);
  return quaternion_from_euler_xyz({deg_to_rad(deg.x()), deg_to_rad(deg.y()), deg_to_rad(deg.z())});
}

DiscreteAction discretize_pose(const ContinuousPose& pose, const WorkspaceBounds& bounds) {
  DiscreteAction a;
  a.voxel = voxelize(pose.position, bounds);
  a.rot = bin_rotation(pose.orientation).bins;
  a.gripper = pose.gripper >= 0.5 ? 1 : 0;
  return a;
}

ContinuousPose continuous_pose(const DiscreteAction& action, const WorkspaceBounds& bounds) {
  ContinuousPose p;
  p.position = devoxelize(action.voxel, bounds);
  p.orientation = unbin_rotation(action.rot);
  p.gripper = action.gripper;
  return p;
}

}  // namespace bimanual
