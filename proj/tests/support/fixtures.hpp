#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bimanual/demo_store.hpp"
#include "bimanual/prompt_codec.hpp"

namespace bimanual::testing {

inline DiscreteAction act(int x, int y, int z, int r1, int r2, int r3, int g) {
  return DiscreteAction{{x, y, z}, {r1, r2, r3}, g};
}

inline BimanualAction bi(const DiscreteAction& right, const DiscreteAction& left) {
  return BimanualAction{right, left};
}

inline Observation scene(int bx, int by, int bz, int cx, int cy, int cz) {
  Observation o;
  o.add("ball", {bx, by, bz});
  o.add("box", {cx, cy, cz});
  return o;
}

/// The two-demo fixture pinned by the golden prompt files.
inline std::vector<Demonstration> golden_demos() {
  Demonstration a{scene(50, 49, 31, 20, 70, 10),
                  {bi(act(50, 49, 40, 36, 0, 0, 1), act(20, 70, 30, 36, 0, 36, 1)),
                   bi(act(50, 49, 31, 36, 0, 0, 0), act(20, 70, 10, 36, 0, 36, 0))}};
  Demonstration b{scene(60, 40, 30, 25, 65, 12),
                  {bi(act(60, 40, 39, 36, 0, 0, 1), act(25, 65, 32, 36, 0, 36, 1)),
                   bi(act(60, 40, 30, 36, 0, 0, 0), act(25, 65, 12, 36, 0, 36, 0))}};
  return {a, b};
}

inline Observation golden_test_obs() { return scene(55, 45, 30, 22, 68, 11); }

inline ArmTrajectory golden_leader_pred() {
  return {act(55, 45, 39, 36, 0, 0, 1), act(55, 45, 30, 36, 0, 0, 0)};
}
inline ArmTrajectory golden_follower_pred() {
  return {act(22, 68, 31, 36, 0, 36, 1), act(22, 68, 11, 36, 0, 36, 0)};
}
inline ArmTrajectory golden_leader_round2() {
  return {act(55, 45, 38, 36, 0, 0, 1), act(55, 45, 30, 36, 0, 0, 0)};
}

/// Layout of a golden prompt file.
inline std::string golden_text(const PromptBundle& b) {
  return "=== system ===\n" + b.system_text + "\n=== user ===\n" + b.user_text + "\n";
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DiscreteAction random_action(std::mt19937& rng) {
  std::uniform_int_distribution<int> pos(0, kMaxVoxel), rot(0, kMaxRotationBin), grip(0, 1);
  return act(pos(rng), pos(rng), pos(rng), rot(rng), rot(rng), rot(rng), grip(rng));
}

inline Observation random_scene(std::mt19937& rng, int objects) {
  std::uniform_int_distribution<int> pos(0, kMaxVoxel);
  Observation o;
  for (int i = 0; i < objects; ++i) o.add("obj" + std::to_string(i), {pos(rng), pos(rng), pos(rng)});
  return o;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace bimanual::testing
