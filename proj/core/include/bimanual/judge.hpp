#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bimanual/demo_store.hpp"
#include "bimanual/llm_gateway.hpp"

namespace bimanual {

/// Per-check deltas and the clamped 1..5 consistency score.
struct JudgeVerdict {
  int check1 = 1;  // collision, +1 or -1
  int check2 = 1;  // first action and z-shape vs nearest demo, +1 or -1
  int check3 = 0;  // gripper transitions, 0 or -1
  int check4 = 0;  // workspace side, 0 or -1
  int score = 5;
  std::array<std::string, 4> reasons;
  /// Set when an LLM verdict reported a score inconsistent with its checks.
  bool corrected = false;

  bool operator==(const JudgeVerdict&) const = default;
};

/// clamp(3 + c1 + c2 + c3 + c4, 1, 5)
int clamp_score(int check1, int check2, int check3, int check4);

inline constexpr double kCollisionDistance = 10.0;
inline constexpr int kFirstActionTolerance = 5;
inline constexpr int kRightArmMinX = 30;
inline constexpr int kLeftArmMaxX = 70;
inline constexpr int kMaxOffsideSteps = 3;

/// -1 iff some step has the arms closer than 10 voxels while both moved.
/// Step 0 counts as moving.
int check_collision(const BimanualTrajectory& plan, std::string* reason = nullptr);

/// Index of the demo with minimal object L1 distance to `obs`, lowest index
/// on ties. Throws InsufficientDemos when `demos` is empty.
std::size_t nearest_demo(const std::vector<Demonstration>& demos, const Observation& obs);

/// +1 iff each arm's first position is within L-inf 5 of the nearest demo's
/// and each arm's z-delta sign sequence (zeros dropped) equals the demo's.
int check_demo_match(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                     const Observation& obs, std::string* reason = nullptr);

/// -1 iff either arm's ordered gripper transitions differ from the nearest
/// demo's.
int check_gripper(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                  const Observation& obs, std::string* reason = nullptr);

/// -1 iff the right arm spends >3 steps at x <= 30 or the left arm >3 steps
/// at x >= 70.
int check_workspace(const BimanualTrajectory& plan, std::string* reason = nullptr);

/// Deterministic composition of the four checks.
JudgeVerdict rubric_verdict(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                            const Observation& obs);

/// JSON in the validator's output schema.
std::string verdict_to_json(const JudgeVerdict& v);

/// Reads a validator reply: the first {...} object with keys check1..check4
/// and score. Check values may be strings starting with the signed delta or
/// bare integers. The score is recomputed when it disagrees with the checks.
/// Throws JudgeParseError.
JudgeVerdict parse_verdict(const std::string& text);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeVerdict score(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                             const Observation& obs) = 0;
};

class RubricJudge : public Judge {
 public:
  JudgeVerdict score(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                     const Observation& obs) override;
};

/// Sends the validator prompt through the gateway (tag "judge").
class LlmJudge : public Judge {
 public:
  LlmJudge(std::shared_ptr<Gateway> gateway, int max_retries = 2, double temperature = 0.0);
  JudgeVerdict score(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                     const Observation& obs) override;

 private:
  std::shared_ptr<Gateway> gateway_;
  int max_retries_;
  double temperature_;
};

enum class JudgeMode { kRubric, kLlm };
std::string to_string(JudgeMode mode);
JudgeMode judge_mode_from_string(const std::string& name);

/// Rubric mode ignores `gateway`; llm mode requires it.
JudgeVerdict score_plan(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                        const Observation& obs, JudgeMode mode,
                        const std::shared_ptr<Gateway>& gateway = nullptr);

}  // namespace bimanual
