#include "bimanual/demo_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bimanual/errors.hpp"
#include "bimanual/random.hpp"

namespace bimanual {
namespace {

using ordered_json = nlohmann::ordered_json;

bool gripper_open(const ContinuousPose& p) { return p.gripper >= 0.5; }

void check_speed(double s, std::size_t i) {
  if (!std::isfinite(s) || s < 0.0) {
    throw RangeError("episode step " + std::to_string(i) + ": joint speed must be finite and >= 0");
  }
}

template <std::size_t N>
std::string int_list(const std::array<int, N>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  return out + "]";
}

std::vector<int> read_ints(const ordered_json& node, const std::string& what) {
  if (!node.is_array()) throw DatasetError(what + " must be an array");
  std::vector<int> out;
  for (const auto& v : node) {
    if (!v.is_number_integer()) throw DatasetError(what + " must hold integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

std::vector<std::size_t> keyframe_indices(const std::vector<EpisodeStep>& steps,
                                          double speed_eps) {
  if (steps.empty()) throw EmptyEpisode("episode has no steps");
  std::size_t end = steps.size() - 1;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].is_terminal) {
      end = i;
      break;
    }
  }
  auto still = [&](std::size_t i) {
    return steps[i].right_joint_speed < speed_eps && steps[i].left_joint_speed < speed_eps;
  };

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= end; ++i) {
    check_speed(steps[i].right_joint_speed, i);
    check_speed(steps[i].left_joint_speed, i);
    bool key = i == end;
    if (i > 0) {
      const auto& prev = steps[i - 1];
      const auto& cur = steps[i];
      key = key || gripper_open(prev.right) != gripper_open(cur.right) ||
            gripper_open(prev.left) != gripper_open(cur.left);
      key = key || (still(i) && !still(i - 1));
    }
    if (key) out.push_back(i);
  }
  return out;
}

BimanualTrajectory extract_keyframes(const std::vector<EpisodeStep>& steps,
                                     const WorkspaceBounds& bounds, double speed_eps) {
  BimanualTrajectory actions;
  for (std::size_t i : keyframe_indices(steps, speed_eps)) {
    actions.push_back({discretize_pose(steps[i].right, bounds), discretize_pose(steps[i].left, bounds)});
  }
  return collapse_duplicates(actions);
}

BimanualTrajectory collapse_duplicates(const BimanualTrajectory& actions) {
  BimanualTrajectory out;
  for (const auto& a : actions) {
    if (out.empty() || out.back() != a) out.push_back(a);
  }
  return out;
}

std::vector<Demonstration> sample_batch(const std::vector<Demonstration>& store, std::size_t n,
                                        std::uint64_t seed) {
  if (store.size() < n) {
    throw InsufficientDemos("need " + std::to_string(n) + " demonstrations, store has " +
                            std::to_string(store.size()));
  }
  std::vector<std::size_t> idx(store.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::vector<Demonstration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(store[idx[i]]);
  }
  return out;
}

std::string demo_to_json(const Demonstration& demo) {
  std::string out = "{\n  \"observation\": {";
  bool first = true;
  for (const auto& [name, voxel] : demo.observation.entries()) {
    if (!first) out += ", ";
    first = false;
    out += ordered_json(name).dump() + ": " + int_list(voxel);
  }
  out += "},\n  \"actions\": [";
  for (std::size_t i = 0; i < demo.actions.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += int_list(demo.actions[i].to_array());
  }
  out += demo.actions.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

Demonstration demo_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("demonstration is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("observation") || !doc.contains("actions")) {
    throw DatasetError("demonstration needs 'observation' and 'actions'");
  }
  if (!doc["observation"].is_object()) throw DatasetError("'observation' must be an object");

  Demonstration demo;
  try {
    for (const auto& [name, value] : doc["observation"].items()) {
      auto v = read_ints(value, "observation entry '" + name + "'");
      if (v.size() != 3) throw DatasetError("observation entry '" + name + "' needs 3 integers");
      demo.observation.add(name, {v[0], v[1], v[2]});
    }
    if (!doc["actions"].is_array()) throw DatasetError("'actions' must be an array");
    for (const auto& row : doc["actions"]) {
      auto v = read_ints(row, "action");
      demo.actions.push_back(BimanualAction::from_span(v));
    }
  } catch (const RangeError& e) {
    throw DatasetError(e.what());
  }
  if (demo.actions.empty()) throw DatasetError("demonstration has no actions");
  return demo;
}

Demonstration load_demo(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return demo_from_json(ss.str());
  } catch (const DatasetError& e) {
    throw DatasetError(file.string() + ": " + e.what());
  }
}

void save_demo(const std::filesystem::path& file, const Demonstration& demo) {
  std::ofstream out(file);
  if (!out) throw DatasetError("cannot write " + file.string());
  out << demo_to_json(demo);
}

std::vector<Demonstration> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DatasetError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Demonstration> demos;
  demos.reserve(files.size());
  for (const auto& f : files) demos.push_back(load_demo(f));
  return demos;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<Demonstration>& demos) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < demos.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%03zu.json", i);
    save_demo(dir / name, demos[i]);
  }
}

}  // namespace bimanual
