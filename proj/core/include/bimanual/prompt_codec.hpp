#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bimanual/action_codec.hpp"
#include "bimanual/demo_store.hpp"
#include "bimanual/observation.hpp"

namespace bimanual {

enum class PromptRole { kSingle, kLeader, kFollower, kJudge };
enum class ArmFilter { kRight, kLeft, kBoth };

std::string to_string(PromptRole role);
std::string to_string(ArmFilter filter);
inline ArmFilter filter_for(Arm arm) { return arm == Arm::kRight ? ArmFilter::kRight : ArmFilter::kLeft; }
inline int arity_of(ArmFilter f) { return f == ArmFilter::kBoth ? kBimanualArity : kArmArity; }

/// A fully rendered [system, user] message pair.
struct PromptBundle {
  std::string system_text;
  std::string user_text;
  PromptRole role = PromptRole::kSingle;
  ArmFilter arm = ArmFilter::kBoth;
};

/// `{'name': [x, y, z], ..., 'leader_arm': [[...], ...]}`
std::string serialize_observation(const Observation& obs);

/// `[[a, b, ...], [a, b, ...]]`
std::string render_actions(const ArmTrajectory& actions);
std::string render_actions(const BimanualTrajectory& actions);
std::string render_rows(const std::vector<std::vector<int>>& rows);

/// System prompt of an arm agent, or of the joint agent for kBoth.
std::string arm_system_prompt(ArmFilter arm);
/// Fixed system prompt of the plan validator.
const std::string& judge_system_prompt();

/// `obs_1>A_1, ..., obs_N>A_N, obs_test>` with actions filtered to one arm
/// (leader/single-arm prompt) or kept at 14 values (joint prompt).
PromptBundle build_single_prompt(const std::vector<Demonstration>& demos, const Observation& test_obs,
                                 ArmFilter arm_filter);

/// Prompt for `predicting` arm whose observations carry the partner arm's
/// trajectory under `partner_key`: demo observations get the demo's
/// ground-truth partner actions, the test observation gets `partner_pred`.
PromptBundle build_conditioned_prompt(const std::vector<Demonstration>& demos,
                                      const Observation& test_obs, const ArmTrajectory& partner_pred,
                                      Arm predicting, const std::string& partner_key,
                                      PromptRole role);

/// Follower prompt conditioned on the leader's prediction (`leader_arm`).
PromptBundle build_follower_prompt(const std::vector<Demonstration>& demos,
                                   const Observation& test_obs, const ArmTrajectory& leader_pred,
                                   bool leader_is_right);

/// Second-round leader prompt conditioned on the follower (`follower_arm`).
PromptBundle build_reversed_leader_prompt(const std::vector<Demonstration>& demos,
                                          const Observation& test_obs,
                                          const ArmTrajectory& follower_pred, bool leader_is_right);

/// Validator prompt: reference demos plus the candidate plan.
PromptBundle build_judge_prompt(const std::vector<Demonstration>& demos, const Observation& test_obs,
                                const BimanualTrajectory& candidate);

/// Integer rows extracted from a model completion.
struct ParsedCompletion {
  std::vector<std::vector<int>> actions;
  std::string raw;

  ArmTrajectory arm_actions() const;
  BimanualTrajectory bimanual_actions() const;
};

/// Extracts the first bracketed list of integer lists, tolerating prose, code
/// fences and trailing commas, then checks every row has `arity` values inside
/// the codec ranges. Throws ParseFailure, ArityMismatch or RangeViolation.
ParsedCompletion parse_completion(std::string_view text, int arity);

/// One demo of a parsed ICL prompt.
struct PromptExample {
  Observation observation;
  std::vector<std::vector<int>> actions;
};

struct ParsedPrompt {
  std::vector<PromptExample> demos;
  Observation test_observation;
};

/// Inverse of the ICL user-text grammar. Throws ParseFailure when the text is
/// not of the form `obs>actions, ..., obs>`.
ParsedPrompt parse_icl_prompt(std::string_view user_text);

struct ParsedJudgePrompt {
  std::vector<PromptExample> demos;
  Observation candidate_observation;
  std::vector<std::vector<int>> candidate;
};

/// Inverse of build_judge_prompt's user text. Throws ParseFailure.
ParsedJudgePrompt parse_judge_prompt(std::string_view user_text);

}  // namespace bimanual
