#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "bimanual/action_codec.hpp"
#include "bimanual/errors.hpp"

namespace bimanual {
namespace {

constexpr double kDeg = M_PI / 180.0;

Eigen::Quaterniond euler_oracle(double a_deg, double b_deg, double c_deg) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(a_deg * kDeg, Eigen::Vector3d::UnitX()) *
                            Eigen::AngleAxisd(b_deg * kDeg, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(c_deg * kDeg, Eigen::Vector3d::UnitZ()));
}

bool same_rotation(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return std::abs(std::abs(a.dot(b)) - 1.0) < 1e-9;
}

TEST(Voxelize, BoundExamples) {
  EXPECT_EQ(voxelize({-0.3, -0.5, 0.6}), (VoxelIndex{0, 0, 0}));
  EXPECT_EQ(voxelize({0.7, 0.5, 1.6}), (VoxelIndex{99, 99, 99}));
  EXPECT_EQ(voxelize({0.2, 0.0, 1.1}), (VoxelIndex{49, 49, 49}));
}

TEST(Voxelize, RejectsOutOfWorkspace) {
  EXPECT_THROW(voxelize({0.71, 0.0, 1.0}), OutOfWorkspace);
  EXPECT_THROW(voxelize({0.0, -0.51, 1.0}), OutOfWorkspace);
  EXPECT_THROW(voxelize({0.0, 0.0, 0.59}), OutOfWorkspace);
}

TEST(Voxelize, MatchesFloorFormulaAndIsMonotone) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WorkspaceBounds b;
  for (int i = 0; i < 20000; ++i) {
    Vec3 p(-0.3 + u(rng), -0.5 + u(rng), 0.6 + u(rng));
    const auto v = voxelize(p, b);
    for (int k = 0; k < 3; ++k) {
      const int oracle = static_cast<int>(std::floor((p[k] - b.min[k]) / (b.max[k] - b.min[k]) * 99));
      EXPECT_EQ(v[k], oracle);
      ASSERT_GE(v[k], 0);
      ASSERT_LE(v[k], 99);
    }
    Vec3 q = p;
    q[0] = std::min(0.7, p[0] + u(rng) * 0.05);
    EXPECT_LE(v[0], voxelize(q, b)[0]);
  }
}

TEST(Devoxelize, RoundTripExhaustiveOnSubgrid) {
  for (int x = 0; x < 100; x += 11)
    for (int y = 0; y < 100; y += 11)
      for (int z = 0; z < 100; z += 11) {
        const VoxelIndex v{x, y, z};
        EXPECT_EQ(voxelize(devoxelize(v)), v);
      }
  for (int i = 0; i < 100; ++i) {
    const VoxelIndex v{i, 99 - i, i};
    EXPECT_EQ(voxelize(devoxelize(v)), v);
  }
}

TEST(Devoxelize, CellRepresentatives) {
  const Vec3 lo = devoxelize({0, 0, 0});
  EXPECT_NEAR(lo.x(), -0.3 + 0.5 / 99.0, 1e-12);
  EXPECT_NEAR(lo.z(), 0.6 + 0.5 / 99.0, 1e-12);
  const Vec3 hi = devoxelize({99, 99, 99});
  EXPECT_DOUBLE_EQ(hi.x(), 0.7);
  EXPECT_DOUBLE_EQ(hi.y(), 0.5);
  EXPECT_THROW(devoxelize({100, 0, 0}), RangeError);
  EXPECT_THROW(devoxelize({0, -1, 0}), RangeError);
}

TEST(Devoxelize, HalfCellErrorBound) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double half = 0.5 / 99.0;
  for (int i = 0; i < 10000; ++i) {
    Vec3 p(-0.3 + u(rng), -0.5 + u(rng), 0.6 + u(rng));
    const Vec3 back = devoxelize(voxelize(p));
    EXPECT_LE((back - p).cwiseAbs().maxCoeff(), half + 1e-12);
  }
}

TEST(BinRotation, Examples) {
  EXPECT_EQ(bin_rotation(Eigen::Quaterniond::Identity()).bins, (RotationBins{0, 0, 0}));
  EXPECT_EQ(bin_rotation(euler_oracle(5.0, 0, 0)).bins[0], 1);
  EXPECT_EQ(bin_rotation(euler_oracle(0, 0, -2.5)).bins[2], 71);
  EXPECT_THROW(bin_rotation(Eigen::Quaterniond(2, 0, 0, 0)), RangeError);
}

TEST(BinRotation, GimbalWarning) {
  EXPECT_TRUE(bin_rotation(euler_oracle(10, 90, 0)).gimbal_warning);
  EXPECT_FALSE(bin_rotation(euler_oracle(10, 80, 0)).gimbal_warning);
}

TEST(UnbinRotation, BinCenters) {
  EXPECT_TRUE(same_rotation(unbin_rotation({0, 0, 0}), euler_oracle(2.5, 2.5, 2.5)));
  EXPECT_TRUE(same_rotation(unbin_rotation({71, 71, 71}), euler_oracle(357.5, 357.5, 357.5)));
  const Vec3 c = bin_center_degrees({71, 71, 71});
  EXPECT_DOUBLE_EQ(c.x(), 357.5);
  EXPECT_THROW(unbin_rotation({72, 0, 0}), RangeError);
}

// Bins whose pitch center lies in the canonical branch [-90, 90] and outside
// the 5-degree gimbal band.
bool canonical_pitch_bin(int ry) { return ry <= 16 || ry >= 55; }

TEST(UnbinRotation, RoundTripProperty) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> bin(0, 71);
  int checked = 0;
  while (checked < 10000) {
    RotationBins r{bin(rng), bin(rng), bin(rng)};
    if (!canonical_pitch_bin(r[1])) continue;
    ASSERT_EQ(bin_rotation(unbin_rotation(r)).bins, r) << r[0] << "," << r[1] << "," << r[2];
    ++checked;
  }
}

TEST(DiscretizePose, Examples) {
  ContinuousPose p;
  p.position = {-0.3, -0.5, 0.6};
  p.gripper = 1.0;
  EXPECT_EQ(discretize_pose(p), (DiscreteAction{{0, 0, 0}, {0, 0, 0}, 1}));
  p.gripper = 0.49;
  EXPECT_EQ(discretize_pose(p).gripper, 0);
  p.gripper = 0.5;
  EXPECT_EQ(discretize_pose(p).gripper, 1);

  ContinuousPose mid;
  mid.position = {0.2, 0.0, 1.1};
  mid.orientation = euler_oracle(0, 0, 5.0);
  mid.gripper = 0.0;
  EXPECT_EQ(discretize_pose(mid), (DiscreteAction{{49, 49, 49}, {0, 0, 1}, 0}));

  p.position = {0.8, 0, 1};
  EXPECT_THROW(discretize_pose(p), OutOfWorkspace);
}

TEST(DiscretizePose, DeterministicAcrossThreads) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ContinuousPose> poses(500);
  for (auto& p : poses) {
    p.position = {-0.3 + u(rng), -0.5 + u(rng), 0.6 + u(rng)};
    p.orientation = Eigen::Quaterniond::UnitRandom();
    p.gripper = u(rng);
  }
  std::vector<DiscreteAction> a(poses.size()), b(poses.size());
  std::thread t1([&] {
    for (std::size_t i = 0; i < poses.size(); ++i) a[i] = discretize_pose(poses[i]);
  });
  std::thread t2([&] {
    for (std::size_t i = 0; i < poses.size(); ++i) b[i] = discretize_pose(poses[i]);
  });
  t1.join();
  t2.join();
  EXPECT_EQ(a, b);
}

TEST(DiscreteAction, SpanConversions) {
  const int vals[14] = {1, 2, 3, 4, 5, 6, 1, 7, 8, 9, 10, 11, 12, 0};
  const auto b = BimanualAction::from_span(vals);
  EXPECT_EQ(b.right.voxel, (VoxelIndex{1, 2, 3}));
  EXPECT_EQ(b.left.rot, (RotationBins{10, 11, 12}));
  EXPECT_EQ(b.left.gripper, 0);
  const auto arr = b.to_array();
  EXPECT_TRUE(std::equal(arr.begin(), arr.end(), vals));
  const int bad[7] = {1, 2, 3, 72, 0, 0, 1};
  EXPECT_THROW(DiscreteAction::from_span(bad), RangeError);
}

TEST(Arm, Names) {
  EXPECT_EQ(to_string(Arm::kRight), "right");
  EXPECT_EQ(arm_from_string("left"), Arm::kLeft);
  EXPECT_THROW(arm_from_string("middle"), RangeError);
}

}  // namespace
}  // namespace bimanual
