#include "bimanual/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>

#include <json.hpp>

namespace bimanual {
namespace {

void set_reason(std::string* out, std::string text) {
  if (out) *out = std::move(text);
}

std::string triple(const VoxelIndex& v) {
  return "[" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " + std::to_string(v[2]) + "]";
}

std::vector<int> z_signs(const BimanualTrajectory& traj, Arm arm) {
  std::vector<int> out;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const int dz = traj[i].arm(arm).voxel[2] - traj[i - 1].arm(arm).voxel[2];
    if (dz != 0) out.push_back(dz > 0 ? 1 : -1);
  }
  return out;
}

std::vector<std::pair<int, int>> gripper_transitions(const BimanualTrajectory& traj, Arm arm) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const int a = traj[i - 1].arm(arm).gripper;
    const int b = traj[i].arm(arm).gripper;
    if (a != b) out.emplace_back(a, b);
  }
  return out;
}

int linf(const VoxelIndex& a, const VoxelIndex& b) {
  int d = 0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Leading signed integer of a check value such as "+1: arms stay apart".
int check_value(const nlohmann::json& node, const char* key) {
  if (node.is_number_integer()) return node.get<int>();
  if (!node.is_string()) throw JudgeParseError(std::string(key) + " must be a string or integer");
  const std::string s = node.get<std::string>();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  int sign = 1;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    sign = s[i] == '-' ? -1 : 1;
    ++i;
  }
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) {
    throw JudgeParseError(std::string(key) + " does not start with a delta: '" + s + "'");
  }
  return sign * (s[i] - '0');
}

std::string check_reason(const nlohmann::json& node) {
  if (!node.is_string()) return {};
  const std::string s = node.get<std::string>();
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {};
  const auto start = s.find_first_not_of(' ', colon + 1);
  return start == std::string::npos ? std::string() : s.substr(start);
}

std::string signed_delta(int v) { return v > 0 ? "+" + std::to_string(v) : std::to_string(v); }

}  // namespace

int clamp_score(int check1, int check2, int check3, int check4) {
  return std::clamp(3 + check1 + check2 + check3 + check4, 1, 5);
}

int check_collision(const BimanualTrajectory& plan, std::string* reason) {
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& r = plan[i].right.voxel;
    const auto& l = plan[i].left.voxel;
    const double dist = std::sqrt(static_cast<double>((r[0] - l[0]) * (r[0] - l[0]) +
                                                      (r[1] - l[1]) * (r[1] - l[1]) +
                                                      (r[2] - l[2]) * (r[2] - l[2])));
    const bool both_moving =
        i == 0 || (plan[i - 1].right.voxel != r && plan[i - 1].left.voxel != l);
    if (dist < kCollisionDistance && both_moving) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "step %zu arms %.2f voxels apart while both move", i, dist);
      set_reason(reason, buf);
      return -1;
    }
  }
  set_reason(reason, "arms keep at least 10 voxels apart whenever both move");
  return 1;
}

std::size_t nearest_demo(const std::vector<Demonstration>& demos, const Observation& obs) {
  if (demos.empty()) throw InsufficientDemos("no reference demonstrations");
  std::size_t best = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const int d = l1_distance(obs, demos[i].observation);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

int check_demo_match(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                     const Observation& obs, std::string* reason) {
  const std::size_t k = nearest_demo(demos, obs);
  const auto& demo = demos[k].actions;
  if (plan.empty() || demo.empty()) {
    set_reason(reason, "empty trajectory");
    return -1;
  }
  for (Arm arm : {Arm::kRight, Arm::kLeft}) {
    const int d = linf(plan.front().arm(arm).voxel, demo.front().arm(arm).voxel);
    if (d > kFirstActionTolerance) {
      set_reason(reason, to_string(arm) + " first action " + triple(plan.front().arm(arm).voxel) +
                             " is " + std::to_string(d) + " voxels from demo " +
                             std::to_string(k) + " " + triple(demo.front().arm(arm).voxel));
      return -1;
    }
    if (z_signs(plan, arm) != z_signs(demo, arm)) {
      set_reason(reason, to_string(arm) + " z-trajectory shape differs from demo " +
                             std::to_string(k));
      return -1;
    }
  }
  set_reason(reason, "first actions and z-shape match demo " + std::to_string(k));
  return 1;
}

int check_gripper(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                  const Observation& obs, std::string* reason) {
  const std::size_t k = nearest_demo(demos, obs);
  for (Arm arm : {Arm::kRight, Arm::kLeft}) {
    if (gripper_transitions(plan, arm) != gripper_transitions(demos[k].actions, arm)) {
      set_reason(reason, to_string(arm) + " gripper sequence differs from demo " + std::to_string(k));
      return -1;
    }
  }
  set_reason(reason, "gripper transitions match demo " + std::to_string(k));
  return 0;
}

int check_workspace(const BimanualTrajectory& plan, std::string* reason) {
  int right_off = 0;
  int left_off = 0;
  for (const auto& a : plan) {
    if (a.right.voxel[0] <= kRightArmMinX) ++right_off;
    if (a.left.voxel[0] >= kLeftArmMaxX) ++left_off;
  }
  if (right_off > kMaxOffsideSteps) {
    set_reason(reason, "right arm at x <= 30 for " + std::to_string(right_off) + " steps");
    return -1;
  }
  if (left_off > kMaxOffsideSteps) {
    set_reason(reason, "left arm at x >= 70 for " + std::to_string(left_off) + " steps");
    return -1;
  }
  set_reason(reason, "both arms stay on their side");
  return 0;
}

JudgeVerdict rubric_verdict(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                            const Observation& obs) {
  JudgeVerdict v;
  v.check1 = check_collision(plan, &v.reasons[0]);
  v.check2 = check_demo_match(plan, demos, obs, &v.reasons[1]);
  v.check3 = check_gripper(plan, demos, obs, &v.reasons[2]);
  v.check4 = check_workspace(plan, &v.reasons[3]);
  v.score = clamp_score(v.check1, v.check2, v.check3, v.check4);
  return v;
}

std::string verdict_to_json(const JudgeVerdict& v) {
  nlohmann::ordered_json doc;
  const int checks[4] = {v.check1, v.check2, v.check3, v.check4};
  for (int i = 0; i < 4; ++i) {
    doc["check" + std::to_string(i + 1)] = signed_delta(checks[i]) + ": " + v.reasons[i];
  }
  doc["score"] = v.score;
  return doc.dump();
}

JudgeVerdict parse_verdict(const std::string& text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw JudgeParseError("no JSON object in judge reply");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.substr(open, close - open + 1));
  } catch (const nlohmann::json::exception& e) {
    throw JudgeParseError(std::string("judge reply is not JSON: ") + e.what());
  }
  for (const char* key : {"check1", "check2", "check3", "check4", "score"}) {
    if (!doc.contains(key)) throw JudgeParseError(std::string("judge reply lacks ") + key);
  }
  JudgeVerdict v;
  v.check1 = check_value(doc["check1"], "check1");
  v.check2 = check_value(doc["check2"], "check2");
  v.check3 = check_value(doc["check3"], "check3");
  v.check4 = check_value(doc["check4"], "check4");
  if (std::abs(v.check1) != 1 || std::abs(v.check2) != 1) {
    throw JudgeParseError("check1 and check2 must be +1 or -1");
  }
  if ((v.check3 != 0 && v.check3 != -1) || (v.check4 != 0 && v.check4 != -1)) {
    throw JudgeParseError("check3 and check4 must be 0 or -1");
  }
  for (int i = 0; i < 4; ++i) v.reasons[i] = check_reason(doc["check" + std::to_string(i + 1)]);
  if (!doc["score"].is_number_integer()) throw JudgeParseError("score must be an integer");
  const int reported = doc["score"].get<int>();
  v.score = clamp_score(v.check1, v.check2, v.check3, v.check4);
  v.corrected = reported != v.score;
  return v;
}

JudgeVerdict RubricJudge::score(const BimanualTrajectory& plan,
                                const std::vector<Demonstration>& demos, const Observation& obs) {
  return rubric_verdict(plan, demos, obs);
}

LlmJudge::LlmJudge(std::shared_ptr<Gateway> gateway, int max_retries, double temperature)
    : gateway_(std::move(gateway)), max_retries_(max_retries), temperature_(temperature) {
  if (!gateway_) throw ConfigError("llm judge needs a gateway");
}

JudgeVerdict LlmJudge::score(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                             const Observation& obs) {
  const PromptBundle prompt = build_judge_prompt(demos, obs, plan);
  JudgeVerdict verdict;
  try {
    gateway_->complete_validated({prompt.system_text, prompt.user_text, temperature_, "judge"},
                                 max_retries_, [&](const std::string& text) {
                                   try {
                                     verdict = parse_verdict(text);
                                   } catch (const JudgeParseError& e) {
                                     throw ParseFailure(e.what());
                                   }
                                 });
  } catch (const ExhaustedRetries& e) {
    throw JudgeParseError(e.what());
  }
  return verdict;
}

std::string to_string(JudgeMode mode) { return mode == JudgeMode::kRubric ? "rubric" : "llm"; }

JudgeMode judge_mode_from_string(const std::string& name) {
  if (name == "rubric") return JudgeMode::kRubric;
  if (name == "llm") return JudgeMode::kLlm;
  throw ConfigError("unknown judge mode '" + name + "'");
}

JudgeVerdict score_plan(const BimanualTrajectory& plan, const std::vector<Demonstration>& demos,
                        const Observation& obs, JudgeMode mode,
                        const std::shared_ptr<Gateway>& gateway) {
  if (mode == JudgeMode::kRubric) return rubric_verdict(plan, demos, obs);
  return LlmJudge(gateway).score(plan, demos, obs);
}

}  // namespace bimanual
