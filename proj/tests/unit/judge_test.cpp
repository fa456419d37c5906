#include <gtest/gtest.h>

#include <random>

#include "bimanual/errors.hpp"
#include "bimanual/judge.hpp"
#include "bimanual/oracle_backend.hpp"
#include "fixtures.hpp"

namespace bimanual {
namespace {

using testing::act;
using testing::bi;

// Reference demo: both arms descend, close, lift.
Demonstration reference_demo() {
  return {testing::scene(60, 50, 20, 20, 50, 20),
          {bi(act(60, 50, 40, 36, 0, 0, 1), act(20, 50, 40, 36, 0, 36, 1)),
           bi(act(60, 50, 20, 36, 0, 0, 0), act(20, 50, 20, 36, 0, 36, 0)),
           bi(act(60, 50, 30, 36, 0, 0, 0), act(20, 50, 30, 36, 0, 36, 0))}};
}

std::vector<Demonstration> reference_batch() {
  Demonstration far = reference_demo();
  far.observation = testing::scene(90, 90, 90, 5, 5, 5);
  for (auto& a : far.actions) a.right.voxel[1] = 80;
  return {reference_demo(), far};
}

// Plan realizing the requested check outcomes against reference_batch().
BimanualTrajectory plan_with(int c1, int c2, int c3, int c4) {
  BimanualTrajectory p = reference_demo().actions;
  if (c2 < 0) p[0].right.voxel[1] += 6;
  if (c3 < 0) p[2].right.gripper = 1;
  if (c4 < 0) {
    BimanualAction off = p.back();
    off.left.voxel[0] = 75;
    p.insert(p.end(), 4, off);
  }
  if (c1 < 0) {
    BimanualAction close = p.back();
    close.right.voxel = {45, 50, 30};
    close.left.voxel = {40, 50, 30};
    p.push_back(close);
  }
  return p;
}

// Hand-computed clamp(3 + c1 + c2 + c3 + c4, 1, 5), indexed by
// (c1 < 0) * 8 + (c2 < 0) * 4 + (c3 < 0) * 2 + (c4 < 0).
constexpr int kHandScores[16] = {5, 4, 4, 3, 3, 2, 2, 1, 3, 2, 2, 1, 1, 1, 1, 1};

TEST(ClampScore, AllSixteenCombinations) {
  for (int mask = 0; mask < 16; ++mask) {
    const int c1 = mask & 8 ? -1 : 1, c2 = mask & 4 ? -1 : 1, c3 = mask & 2 ? -1 : 0, c4 = mask & 1 ? -1 : 0;
    EXPECT_EQ(clamp_score(c1, c2, c3, c4), kHandScores[mask]) << mask;
  }
}

TEST(RubricVerdict, AllSixteenCombinationsFromPlans) {
  const auto demos = reference_batch();
  const auto obs = demos[0].observation;
  for (int mask = 0; mask < 16; ++mask) {
    const int c1 = mask & 8 ? -1 : 1, c2 = mask & 4 ? -1 : 1, c3 = mask & 2 ? -1 : 0, c4 = mask & 1 ? -1 : 0;
    const auto v = rubric_verdict(plan_with(c1, c2, c3, c4), demos, obs);
    EXPECT_EQ(v.check1, c1) << mask << " " << v.reasons[0];
    EXPECT_EQ(v.check2, c2) << mask << " " << v.reasons[1];
    EXPECT_EQ(v.check3, c3) << mask << " " << v.reasons[2];
    EXPECT_EQ(v.check4, c4) << mask << " " << v.reasons[3];
    EXPECT_EQ(v.score, kHandScores[mask]) << mask;
  }
}

TEST(RubricVerdict, WorkedExamples) {
  const auto demos = reference_batch();
  const auto obs = demos[0].observation;
  EXPECT_EQ(rubric_verdict(plan_with(1, 1, 0, 0), demos, obs).score, 5);
  EXPECT_EQ(rubric_verdict(plan_with(-1, -1, -1, -1), demos, obs).score, 1);
  EXPECT_EQ(rubric_verdict(plan_with(1, -1, -1, 0), demos, obs).score, 2);
}

TEST(CheckCollision, Examples) {
  BimanualTrajectory pinned(3, bi(act(10, 10, 10, 0, 0, 0, 1), act(90, 90, 90, 0, 0, 0, 1)));
  EXPECT_EQ(check_collision(pinned), 1);

  BimanualTrajectory moving{bi(act(0, 0, 0, 0, 0, 0, 1), act(30, 30, 30, 0, 0, 0, 1)),
                            bi(act(5, 5, 5, 0, 0, 0, 1), act(10, 10, 10, 0, 0, 0, 1))};
  EXPECT_EQ(check_collision(moving), -1);

  BimanualTrajectory one_still{bi(act(0, 0, 0, 0, 0, 0, 1), act(30, 30, 30, 0, 0, 0, 1)),
                               bi(act(30, 30, 25, 0, 0, 0, 1), act(30, 30, 30, 0, 0, 0, 1))};
  EXPECT_EQ(check_collision(one_still), 1);

  // step 0 counts as moving
  BimanualTrajectory start_close{bi(act(50, 50, 50, 0, 0, 0, 1), act(50, 50, 55, 0, 0, 0, 1))};
  EXPECT_EQ(check_collision(start_close), -1);

  // exactly 10 apart is safe
  BimanualTrajectory ten{bi(act(50, 50, 50, 0, 0, 0, 1), act(60, 50, 50, 0, 0, 0, 1))};
  EXPECT_EQ(check_collision(ten), 1);
}

TEST(CheckDemoMatch, Examples) {
  const auto demos = reference_batch();
  const auto obs = demos[0].observation;
  EXPECT_EQ(check_demo_match(demos[0].actions, demos, obs), 1);

  auto shifted = demos[0].actions;
  shifted[0].right.voxel[0] += 6;
  EXPECT_EQ(check_demo_match(shifted, demos, obs), -1);
  shifted[0].right.voxel[0] -= 1;
  EXPECT_EQ(check_demo_match(shifted, demos, obs), 1);

  auto monotone = demos[0].actions;
  monotone[2].right.voxel[2] = 10;
  EXPECT_EQ(check_demo_match(monotone, demos, obs), -1);

  // repeated z values do not change the shape
  auto padded = demos[0].actions;
  padded.insert(padded.begin() + 1, padded[0]);
  EXPECT_EQ(check_demo_match(padded, demos, obs), 1);
}

TEST(CheckGripper, Examples) {
  const auto demos = reference_batch();
  const auto obs = demos[0].observation;
  EXPECT_EQ(check_gripper(demos[0].actions, demos, obs), 0);

  // demo closes then opens; plan opens then closes
  Demonstration co = demos[0];
  co.actions[2].right.gripper = 1;
  auto oc = co.actions;
  for (auto& a : oc) a.right.gripper = 1 - a.right.gripper;
  EXPECT_EQ(check_gripper(oc, {co}, co.observation), -1);

  auto never = demos[0].actions;
  for (auto& a : never) a.left.gripper = 1;
  EXPECT_EQ(check_gripper(never, demos, obs), -1);
}

TEST(CheckWorkspace, Examples) {
  BimanualTrajectory fine(6, bi(act(50, 50, 50, 0, 0, 0, 1), act(20, 50, 50, 0, 0, 0, 1)));
  EXPECT_EQ(check_workspace(fine), 0);
  auto four = fine;
  for (int i = 0; i < 4; ++i) four[i].right.voxel[0] = 20;
  EXPECT_EQ(check_workspace(four), -1);
  auto three = fine;
  for (int i = 0; i < 3; ++i) three[i].right.voxel[0] = 20;
  EXPECT_EQ(check_workspace(three), 0);
  auto left = fine;
  for (int i = 0; i < 4; ++i) left[i].left.voxel[0] = 70;
  EXPECT_EQ(check_workspace(left), -1);
}

TEST(NearestDemo, LowestIndexOnTies) {
  auto demos = reference_batch();
  demos.push_back(demos[0]);
  EXPECT_EQ(nearest_demo(demos, demos[0].observation), 0u);
  EXPECT_EQ(nearest_demo(demos, demos[1].observation), 1u);
  EXPECT_THROW(nearest_demo({}, Observation{}), InsufficientDemos);
}

TEST(RubricVerdict, ScoreAlwaysInRangeAndConsistent) {
  std::mt19937 rng(8);
  const auto demos = reference_batch();
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 2000; ++trial) {
    BimanualTrajectory plan;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) plan.push_back(bi(testing::random_action(rng), testing::random_action(rng)));
    const auto v = rubric_verdict(plan, demos, demos[0].observation);
    ASSERT_GE(v.score, 1);
    ASSERT_LE(v.score, 5);
    ASSERT_EQ(v.score, clamp_score(v.check1, v.check2, v.check3, v.check4));
    EXPECT_EQ(v, rubric_verdict(plan, demos, demos[0].observation));
  }
}

TEST(ParseVerdict, JsonSchema) {
  const auto v = parse_verdict(
      R"(Here: {"check1": "+1: far apart", "check2": "-1: wrong start", "check3": "0: fine", "check4": "-1: offside", "score": 2})");
  EXPECT_EQ(v.check1, 1);
  EXPECT_EQ(v.check2, -1);
  EXPECT_EQ(v.check3, 0);
  EXPECT_EQ(v.check4, -1);
  EXPECT_EQ(v.score, 2);
  EXPECT_FALSE(v.corrected);
  EXPECT_EQ(v.reasons[0], "far apart");

  const auto fixed = parse_verdict(R"({"check1": 1, "check2": 1, "check3": 0, "check4": 0, "score": 3})");
  EXPECT_EQ(fixed.score, 5);
  EXPECT_TRUE(fixed.corrected);

  EXPECT_THROW(parse_verdict("no json"), JudgeParseError);
  EXPECT_THROW(parse_verdict(R"({"check1": "+1", "check2": "+1", "check3": "0"})"), JudgeParseError);
  EXPECT_THROW(parse_verdict(R"({"check1": "+2", "check2": "+1", "check3": "0", "check4": "0", "score": 5})"),
               JudgeParseError);
  EXPECT_THROW(parse_verdict(R"({"check1": "+1", "check2": "+1", "check3": "+1", "check4": "0", "score": 5})"),
               JudgeParseError);
}

TEST(ParseVerdict, RoundTripsRubricJson) {
  const auto demos = reference_batch();
  for (int mask = 0; mask < 16; ++mask) {
    const auto plan = plan_with(mask & 8 ? -1 : 1, mask & 4 ? -1 : 1, mask & 2 ? -1 : 0, mask & 1 ? -1 : 0);
    const auto v = rubric_verdict(plan, demos, demos[0].observation);
    EXPECT_EQ(parse_verdict(verdict_to_json(v)), v);
  }
}

TEST(LlmJudge, SendsValidatorPromptAndCorrectsScore) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->on_tag("judge", {R"({"check1": "+1: ok", "check2": "+1: ok", "check3": "-1: bad", "check4": "0: ok", "score": 5})"});
  auto gw = std::make_shared<Gateway>(backend);
  const auto demos = reference_batch();
  const auto v = score_plan(demos[0].actions, demos, demos[0].observation, JudgeMode::kLlm, gw);
  EXPECT_EQ(v.score, 4);
  EXPECT_TRUE(v.corrected);
  const auto log = gw->log().snapshot();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].tag, "judge");
  const auto expected = build_judge_prompt(demos, demos[0].observation, demos[0].actions);
  EXPECT_EQ(log[0].prompt_chars,
            static_cast<std::int64_t>(expected.system_text.size() + expected.user_text.size()));
}

TEST(LlmJudge, RetriesThenJudgeParseError) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->on_tag("judge", {"I think it is fine."});
  auto gw = std::make_shared<Gateway>(backend);
  const auto demos = reference_batch();
  LlmJudge judge(gw, 2);
  EXPECT_THROW(judge.score(demos[0].actions, demos, demos[0].observation), JudgeParseError);
  EXPECT_EQ(gw->log().size(), 3u);
}

TEST(LlmJudge, OracleAgreesWithRubric) {
  auto gw = std::make_shared<Gateway>(std::make_shared<OracleBackend>());
  const auto demos = reference_batch();
  for (int mask = 0; mask < 16; ++mask) {
    const auto plan = plan_with(mask & 8 ? -1 : 1, mask & 4 ? -1 : 1, mask & 2 ? -1 : 0, mask & 1 ? -1 : 0);
    const auto rubric = score_plan(plan, demos, demos[0].observation, JudgeMode::kRubric);
    const auto llm = score_plan(plan, demos, demos[0].observation, JudgeMode::kLlm, gw);
    EXPECT_EQ(llm.score, rubric.score);
    EXPECT_EQ(llm.score, kHandScores[mask]);
  }
  EXPECT_THROW(score_plan(demos[0].actions, demos, demos[0].observation, JudgeMode::kLlm), ConfigError);
}

}  // namespace
}  // namespace bimanual
