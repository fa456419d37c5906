#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "bimanual/errors.hpp"
#include "fixtures.hpp"

namespace bimanual {
namespace {

using testing::TempDir;

EpisodeStep step_at(double x, double gr, double gl, double speed, bool terminal = false) {
  EpisodeStep s;
  s.right.position = {x, 0.0, 1.0};
  s.left.position = {-x, 0.0, 1.0};
  s.right.gripper = gr;
  s.left.gripper = gl;
  s.right_joint_speed = speed;
  s.left_joint_speed = speed;
  s.is_terminal = terminal;
  return s;
}

// Straightforward restatement of the keyframe rules, used as the oracle.
std::vector<std::size_t> keyframe_oracle(const std::vector<EpisodeStep>& steps, double eps) {
  std::size_t end = steps.size() - 1;
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i].is_terminal) {
      end = i;
      break;
    }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= end; ++i) {
    bool toggle = false, edge = false;
    if (i > 0) {
      toggle = (steps[i].right.gripper >= 0.5) != (steps[i - 1].right.gripper >= 0.5) ||
               (steps[i].left.gripper >= 0.5) != (steps[i - 1].left.gripper >= 0.5);
      const bool now = steps[i].right_joint_speed < eps && steps[i].left_joint_speed < eps;
      const bool before = steps[i - 1].right_joint_speed < eps && steps[i - 1].left_joint_speed < eps;
      edge = now && !before;
    }
    if (toggle || edge || i == end) out.push_back(i);
  }
  return out;
}

std::vector<EpisodeStep> random_episode(std::mt19937& rng) {
  std::uniform_int_distribution<int> len(1, 30), coin(0, 3);
  std::uniform_real_distribution<double> x(-0.25, 0.65), g(0.0, 1.0);
  std::vector<EpisodeStep> steps(len(rng));
  for (auto& s : steps) {
    s = step_at(x(rng) * 0.5, g(rng), g(rng), coin(rng) == 0 ? 0.0 : 0.2);
    s.left.position.x() = std::clamp(-s.right.position.x(), -0.3, 0.7);
  }
  if (coin(rng) != 0) steps.back().is_terminal = true;
  return steps;
}

TEST(ExtractKeyframes, SingleTerminalStep) {
  EXPECT_EQ(extract_keyframes({step_at(0.1, 1, 1, 0.2, true)}).size(), 1u);
}

TEST(ExtractKeyframes, ToggleAndTerminal) {
  std::vector<EpisodeStep> steps;
  for (int i = 0; i < 10; ++i) steps.push_back(step_at(0.01 * i, i >= 4 ? 0.0 : 1.0, 1.0, 0.3, i == 9));
  EXPECT_EQ(keyframe_indices(steps), (std::vector<std::size_t>{4, 9}));
  EXPECT_EQ(extract_keyframes(steps).size(), 2u);
}

TEST(ExtractKeyframes, ConstantMotionGivesOneKeyframe) {
  std::vector<EpisodeStep> steps;
  for (int i = 0; i < 12; ++i) steps.push_back(step_at(0.02 * i, 1.0, 1.0, 0.5, i == 11));
  EXPECT_EQ(keyframe_indices(steps), (std::vector<std::size_t>{11}));
}

TEST(ExtractKeyframes, ZeroSpeedRisingEdgeOnly) {
  std::vector<EpisodeStep> steps;
  const double speeds[] = {0.3, 0.3, 0.0, 0.0, 0.0, 0.3, 0.0, 0.3};
  for (int i = 0; i < 8; ++i) steps.push_back(step_at(0.05 * i, 1.0, 1.0, speeds[i], i == 7));
  EXPECT_EQ(keyframe_indices(steps), (std::vector<std::size_t>{2, 6, 7}));
}

TEST(ExtractKeyframes, StepsAfterTerminalIgnored) {
  std::vector<EpisodeStep> steps{step_at(0.0, 1, 1, 0.2), step_at(0.1, 1, 1, 0.2, true),
                                 step_at(0.2, 0, 0, 0.2)};
  EXPECT_EQ(keyframe_indices(steps), (std::vector<std::size_t>{1}));
}

TEST(ExtractKeyframes, Errors) {
  EXPECT_THROW(extract_keyframes({}), EmptyEpisode);
}

TEST(ExtractKeyframes, PropertiesOnRandomEpisodes) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto steps = random_episode(rng);
    const auto idx = keyframe_indices(steps);
    ASSERT_EQ(idx, keyframe_oracle(steps, kDefaultSpeedEps));
    const auto kf = extract_keyframes(steps);
    EXPECT_LE(kf.size(), steps.size());
    ASSERT_FALSE(kf.empty());
    const std::size_t end = idx.back();
    EXPECT_EQ(kf.back(), (BimanualAction{discretize_pose(steps[end].right), discretize_pose(steps[end].left)}));
    EXPECT_EQ(collapse_duplicates(kf), kf);

    auto padded = steps;
    padded.insert(padded.begin(), 3, steps.front());
    if (steps.front().is_terminal) continue;  // prepended copies would end the episode at once
    EXPECT_EQ(extract_keyframes(padded), kf);
  }
}

TEST(CollapseDuplicates, Idempotent) {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> pick(0, 2);
  const BimanualAction pool[3] = {
      testing::bi(testing::act(1, 1, 1, 0, 0, 0, 1), testing::act(2, 2, 2, 0, 0, 0, 1)),
      testing::bi(testing::act(1, 1, 2, 0, 0, 0, 1), testing::act(2, 2, 2, 0, 0, 0, 1)),
      testing::bi(testing::act(1, 1, 2, 0, 0, 0, 0), testing::act(2, 2, 2, 0, 0, 0, 1))};
  for (int trial = 0; trial < 200; ++trial) {
    BimanualTrajectory t;
    for (int i = 0; i < 12; ++i) t.push_back(pool[pick(rng)]);
    const auto once = collapse_duplicates(t);
    EXPECT_EQ(collapse_duplicates(once), once);
    for (std::size_t i = 1; i < once.size(); ++i) EXPECT_NE(once[i], once[i - 1]);
  }
}

std::vector<Demonstration> numbered_store(int n) {
  std::vector<Demonstration> store;
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.add("id", {i % 100, i / 100, 0});
    store.push_back({o, {testing::bi(testing::act(i % 100, 0, 0, 0, 0, 0, 1), testing::act(0, 0, 0, 0, 0, 0, 1))}});
  }
  return store;
}

TEST(SampleBatch, Examples) {
  const auto store = numbered_store(100);
  const auto a = sample_batch(store, 10, 0);
  EXPECT_EQ(a, sample_batch(store, 10, 0));
  EXPECT_NE(a, sample_batch(store, 10, 1));
  std::set<int> ids;
  for (const auto& d : a) ids.insert(d.observation.entries()[0].second[0]);
  EXPECT_EQ(ids.size(), 10u);

  const auto small = numbered_store(7);
  auto perm = sample_batch(small, 7, 3);
  auto by_id = [](const Demonstration& x, const Demonstration& y) {
    return x.observation.entries()[0].second < y.observation.entries()[0].second;
  };
  std::sort(perm.begin(), perm.end(), by_id);
  EXPECT_EQ(perm, small);
  EXPECT_THROW(sample_batch(small, 8, 0), InsufficientDemos);
}

TEST(SampleBatch, RoughlyUniform) {
  const auto store = numbered_store(20);
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (const auto& d : sample_batch(store, 5, seed)) ++hits[d.observation.entries()[0].second[0]];
  // expected 1000 each; 5 sigma is about 130
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(DemoJson, RoundTripPreservesKeyOrder) {
  const auto demos = testing::golden_demos();
  Demonstration d = demos[0];
  Observation o;
  o.add("zeta", {1, 2, 3});
  o.add("alpha", {4, 5, 6});
  d.observation = o;
  const auto text = demo_to_json(d);
  EXPECT_EQ(demo_from_json(text), d);
  EXPECT_LT(text.find("zeta"), text.find("alpha"));
}

TEST(DemoJson, RejectsMalformed) {
  EXPECT_THROW(demo_from_json("not json"), DatasetError);
  EXPECT_THROW(demo_from_json(R"({"observation": {}, "actions": []})"), DatasetError);
  EXPECT_THROW(demo_from_json(R"({"observation": {"a": [1,2]}, "actions": [[0,0,0,0,0,0,1,0,0,0,0,0,0,1]]})"),
               DatasetError);
  EXPECT_THROW(demo_from_json(R"({"observation": {"a": [1,2,3]}, "actions": [[0,0,0,0,0,0,2,0,0,0,0,0,0,1]]})"),
               DatasetError);
}

TEST(Dataset, SaveLoadDirectory) {
  TempDir dir("bimanual-ds");
  const auto demos = testing::golden_demos();
  save_dataset(dir.path() / "task", demos);
  EXPECT_EQ(load_dataset(dir.path() / "task"), demos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "task" / "demo_000.json"));
  EXPECT_THROW(load_dataset(dir.path() / "missing"), DatasetError);
}

}  // namespace
}  // namespace bimanual
