#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bimanual/action_codec.hpp"
#include "bimanual/observation.hpp"

namespace bimanual {

/// One dense timestep of a bimanual episode.
struct EpisodeStep {
  ContinuousPose right;
  ContinuousPose left;
  double right_joint_speed = 0.0;
  double left_joint_speed = 0.0;
  bool is_terminal = false;
};

/// Initial scene observation paired with its keyframed bimanual actions.
struct Demonstration {
  Observation observation;
  BimanualTrajectory actions;

  bool operator==(const Demonstration&) const = default;
};

inline constexpr double kDefaultSpeedEps = 1e-3;

/// Indices of keyframe steps, before duplicate collapsing. A step is a
/// keyframe iff either arm's gripper bit changed from the previous step, both
/// joint speeds just dropped below `speed_eps` (rising edge only), or it ends
/// the episode. A step is emitted at most once. When no step carries
/// is_terminal the last step ends the episode; steps after the first
/// terminal step are ignored. Throws EmptyEpisode.
std::vector<std::size_t> keyframe_indices(const std::vector<EpisodeStep>& steps,
                                          double speed_eps = kDefaultSpeedEps);

/// Discretized keyframes with consecutive duplicates collapsed.
BimanualTrajectory extract_keyframes(const std::vector<EpisodeStep>& steps,
                                     const WorkspaceBounds& bounds = {},
                                     double speed_eps = kDefaultSpeedEps);

/// Drops actions equal to their predecessor.
BimanualTrajectory collapse_duplicates(const BimanualTrajectory& actions);

/// n distinct demonstrations, uniformly without replacement, in draw order.
/// Same (store, n, seed) gives the same batch. Throws InsufficientDemos.
std::vector<Demonstration> sample_batch(const std::vector<Demonstration>& store, std::size_t n,
                                        std::uint64_t seed);

/// {"observation": {name: [x, y, z], ...}, "actions": [[14 ints], ...]}
std::string demo_to_json(const Demonstration& demo);
/// Throws DatasetError on malformed documents or out-of-range values.
Demonstration demo_from_json(const std::string& text);

Demonstration load_demo(const std::filesystem::path& file);
void save_demo(const std::filesystem::path& file, const Demonstration& demo);

/// Every *.json file of a directory, in lexicographic file-name order.
std::vector<Demonstration> load_dataset(const std::filesystem::path& dir);
/// Writes demo_000.json, demo_001.json, ... into `dir` (created if needed).
void save_dataset(const std::filesystem::path& dir, const std::vector<Demonstration>& demos);

}  // namespace bimanual
