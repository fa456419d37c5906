#include "bimanual/prompt_codec.hpp"

#include <cctype>
#include <limits>
#include <optional>

#include "bimanual/errors.hpp"

namespace bimanual {
namespace {

constexpr const char* kDemoFormatLines =
    "We provide you with some demos in the format of observation>[action_1, action_2, ...].\n"
    "Then you will receive a new observation and you need to output a list of actions that "
    "matches the trend in the demos.\n"
    "Do not output anything else.";

template <typename Range>
std::string int_list(const Range& values) {
  std::string out = "[";
  bool first = true;
  for (int v : values) {
    if (!first) out += ", ";
    first = false;
    out += std::to_string(v);
  }
  return out + "]";
}

std::vector<std::vector<int>> rows_for(const BimanualTrajectory& actions, ArmFilter filter) {
  std::vector<std::vector<int>> rows;
  rows.reserve(actions.size());
  for (const auto& a : actions) {
    if (filter == ArmFilter::kBoth) {
      auto arr = a.to_array();
      rows.emplace_back(arr.begin(), arr.end());
    } else {
      auto arr = a.arm(filter == ArmFilter::kRight ? Arm::kRight : Arm::kLeft).to_array();
      rows.emplace_back(arr.begin(), arr.end());
    }
  }
  return rows;
}

std::string join_examples(const std::vector<std::string>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p;
    out += ", ";
  }
  return out;
}

// Minimal scanner shared by the completion and prompt parsers.
class Scanner {
 public:
  explicit Scanner(std::string_view text, std::size_t pos = 0) : text_(text), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  bool accept_raw(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  std::optional<int> integer() {
    skip_ws();
    std::size_t p = pos_;
    bool neg = false;
    if (p < text_.size() && (text_[p] == '-' || text_[p] == '+')) {
      neg = text_[p] == '-';
      ++p;
    }
    if (p >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[p]))) return std::nullopt;
    long long value = 0;
    while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
      if (value < 1'000'000'000) value = value * 10 + (text_[p] - '0');
      ++p;
    }
    pos_ = p;
    if (value > std::numeric_limits<int>::max()) value = std::numeric_limits<int>::max();
    return static_cast<int>(neg ? -value : value);
  }

  /// '[' int (',' int)* ','? ']'
  std::optional<std::vector<int>> int_list() {
    Scanner s = *this;
    if (!s.accept('[')) return std::nullopt;
    std::vector<int> out;
    while (true) {
      auto v = s.integer();
      if (!v) break;
      out.push_back(*v);
      if (!s.accept(',')) break;
    }
    if (out.empty() || !s.accept(']')) return std::nullopt;
    *this = s;
    return out;
  }

  /// '[' int_list (',' int_list)* ','? ']'
  std::optional<std::vector<std::vector<int>>> list_of_lists() {
    Scanner s = *this;
    if (!s.accept('[')) return std::nullopt;
    std::vector<std::vector<int>> rows;
    while (true) {
      auto row = s.int_list();
      if (!row) break;
      rows.push_back(std::move(*row));
      if (!s.accept(',')) break;
    }
    if (rows.empty() || !s.accept(']')) return std::nullopt;
    *this = s;
    return rows;
  }

  std::optional<std::string> quoted_name() {
    skip_ws();
    if (!accept_raw('\'')) return std::nullopt;
    auto end = text_.find('\'', pos_);
    if (end == std::string_view::npos) return std::nullopt;
    std::string name(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return name;
  }

 private:
  std::string_view text_;
  std::size_t pos_;
};

void validate_row(const std::vector<int>& row, int arity, std::size_t index) {
  if (static_cast<int>(row.size()) != arity) {
    throw ArityMismatch("action " + std::to_string(index) + " has " + std::to_string(row.size()) +
                        " values, expected " + std::to_string(arity));
  }
  for (int i = 0; i < arity; ++i) {
    const int slot = i % kArmArity;
    const int hi = slot < 3 ? kMaxVoxel : (slot < 6 ? kMaxRotationBin : 1);
    if (row[i] < 0 || row[i] > hi) {
      throw RangeViolation("action " + std::to_string(index) + " value " + std::to_string(i) + " = " +
                           std::to_string(row[i]) + " outside [0, " + std::to_string(hi) + "]");
    }
  }
}

Observation parse_observation(Scanner& s) {
  if (!s.accept('{')) throw ParseFailure("expected '{' at offset " + std::to_string(s.pos()));
  Observation obs;
  if (s.accept('}')) return obs;
  while (true) {
    auto name = s.quoted_name();
    if (!name) throw ParseFailure("expected quoted name at offset " + std::to_string(s.pos()));
    if (!s.accept(':')) throw ParseFailure("expected ':' after '" + *name + "'");
    if (*name == kLeaderArmKey || *name == kFollowerArmKey) {
      auto rows = s.list_of_lists();
      if (!rows) throw ParseFailure("expected action list for '" + *name + "'");
      ArmTrajectory traj;
      for (std::size_t i = 0; i < rows->size(); ++i) {
        validate_row((*rows)[i], kArmArity, i);
        traj.push_back(DiscreteAction::from_span((*rows)[i]));
      }
      obs.set_partner({*name, std::move(traj)});
    } else {
      auto v = s.int_list();
      if (!v || v->size() != 3) throw ParseFailure("expected [x, y, z] for '" + *name + "'");
      try {
        obs.add(*name, {(*v)[0], (*v)[1], (*v)[2]});
      } catch (const RangeError& e) {
        throw ParseFailure(e.what());
      }
    }
    if (s.accept('}')) return obs;
    if (!s.accept(',')) throw ParseFailure("expected ',' or '}' at offset " + std::to_string(s.pos()));
  }
}

}  // namespace

std::string to_string(PromptRole role) {
  switch (role) {
    case PromptRole::kSingle: return "single";
    case PromptRole::kLeader: return "leader";
    case PromptRole::kFollower: return "follower";
    case PromptRole::kJudge: return "judge";
  }
  return "single";
}

std::string to_string(ArmFilter filter) {
  switch (filter) {
    case ArmFilter::kRight: return "right";
    case ArmFilter::kLeft: return "left";
    case ArmFilter::kBoth: return "both";
  }
  return "both";
}

std::string serialize_observation(const Observation& obs) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, voxel] : obs.entries()) {
    if (!first) out += ", ";
    first = false;
    out += "'" + name + "': " + int_list(voxel);
  }
  if (const auto& partner = obs.partner()) {
    if (!first) out += ", ";
    out += "'" + partner->key + "': " + render_actions(partner->actions);
  }
  return out + "}";
}

std::string render_rows(const std::vector<std::vector<int>>& rows) {
  std::string out = "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ", ";
    out += int_list(rows[i]);
  }
  return out + "]";
}

std::string render_actions(const ArmTrajectory& actions) {
  std::string out = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ", ";
    out += int_list(actions[i].to_array());
  }
  return out + "]";
}

std::string render_actions(const BimanualTrajectory& actions) {
  return render_rows(rows_for(actions, ArmFilter::kBoth));
}

std::string arm_system_prompt(ArmFilter arm) {
  if (arm == ArmFilter::kBoth) {
    return std::string(
               "You control both arms of a bimanual Franka Panda robot with parallel grippers. "
               "Each action lists the right arm's 7 values followed by the left arm's 7 values.\n") +
           kDemoFormatLines;
  }
  return "You are the " + to_string(arm) + " arm of a bimanual Franka Panda robot with parallel grippers.\n" +
         kDemoFormatLines;
}

const std::string& judge_system_prompt() {
  static const std::string text =
      "You are a strict judge evaluating bimanual robot action plans.\n"
      "\n"
      "CONTEXT: Two Franka Panda arms (right=indices 0-6, left=indices 7-13) in a 100x100x100 voxel "
      "workspace. Each 14-dim action is [right_x, right_y, right_z, right_rot1, right_rot2, "
      "right_rot3, right_gripper, left_x, left_y, left_z, left_rot1, left_rot2, left_rot3, "
      "left_gripper].\n"
      "\n"
      "TASK: Score the CANDIDATE plan from 1 to 5. START AT 3 and adjust:\n"
      "\n"
      "CHECK 1 - Arm collision risk (+1 or -1):\n"
      "At each timestep, compute the Euclidean distance between right [x,y,z] and left [x,y,z]. If "
      "ANY step has distance < 10 voxels AND both arms are actively moving (not stationary), that "
      "is a collision risk: -1. If all steps have safe separation: +1.\n"
      "\n"
      "CHECK 2 - Target + trajectory match vs demos (+1 or -1):\n"
      "Does the candidate approach the SAME objects as in demos (first action within 5 voxels of "
      "demo first action)? Does the z-trajectory follow the same shape (e.g. approach high, descend "
      "to grasp, lift)? Both must be true for +1. Either failing: -1.\n"
      "\n"
      "CHECK 3 - Gripper logic (0 or -1):\n"
      "For EACH arm: does the gripper open/close at the correct step relative to when the arm "
      "reaches the object? Closing too early (before reaching), or gripper sequence inverted vs "
      "demos: -1.\n"
      "\n"
      "CHECK 4 - Workspace reachability (0 or -1):\n"
      "Right arm should mostly operate in x > 30 (its reachable zone). Left arm should mostly "
      "operate in x < 70. If an arm consistently reaches into the opposite side of the workspace "
      "(>3 steps): -1.\n"
      "\n"
      "Final score = 3 + check1 + check2 + check3 + check4, clamped to [1, 5].\n"
      "\n"
      "You MUST show your work for each check, then give the final score.\n"
      "Output ONLY valid JSON:\n"
      "{\"check1\": \"+1 or -1: <reason>\", \"check2\": \"+1 or -1: <reason>\", \"check3\": \"0 or "
      "-1: <reason>\", \"check4\": \"0 or -1: <reason>\", \"score\": <int 1-5>}";
  return text;
}

PromptBundle build_single_prompt(const std::vector<Demonstration>& demos, const Observation& test_obs,
                                 ArmFilter arm_filter) {
  std::vector<std::string> pairs;
  pairs.reserve(demos.size());
  for (const auto& d : demos) {
    pairs.push_back(serialize_observation(d.observation) + ">" +
                    render_rows(rows_for(d.actions, arm_filter)));
  }
  PromptBundle bundle;
  bundle.system_text = arm_system_prompt(arm_filter);
  bundle.user_text = join_examples(pairs) + serialize_observation(test_obs) + ">";
  bundle.role = arm_filter == ArmFilter::kBoth ? PromptRole::kSingle : PromptRole::kLeader;
  bundle.arm = arm_filter;
  return bundle;
}

PromptBundle build_conditioned_prompt(const std::vector<Demonstration>& demos,
                                      const Observation& test_obs, const ArmTrajectory& partner_pred,
                                      Arm predicting, const std::string& partner_key,
                                      PromptRole role) {
  const Arm partner = other(predicting);
  std::vector<std::string> pairs;
  pairs.reserve(demos.size());
  for (const auto& d : demos) {
    Observation augmented = d.observation.with_partner(partner_key, arm_trajectory(d.actions, partner));
    pairs.push_back(serialize_observation(augmented) + ">" +
                    render_actions(arm_trajectory(d.actions, predicting)));
  }
  PromptBundle bundle;
  bundle.arm = filter_for(predicting);
  bundle.system_text = arm_system_prompt(bundle.arm);
  bundle.user_text = join_examples(pairs) +
                     serialize_observation(test_obs.with_partner(partner_key, partner_pred)) + ">";
  bundle.role = role;
  return bundle;
}

PromptBundle build_follower_prompt(const std::vector<Demonstration>& demos,
                                   const Observation& test_obs, const ArmTrajectory& leader_pred,
                                   bool leader_is_right) {
  const Arm follower = leader_is_right ? Arm::kLeft : Arm::kRight;
  return build_conditioned_prompt(demos, test_obs, leader_pred, follower, kLeaderArmKey,
                                  PromptRole::kFollower);
}

PromptBundle build_reversed_leader_prompt(const std::vector<Demonstration>& demos,
                                          const Observation& test_obs,
                                          const ArmTrajectory& follower_pred, bool leader_is_right) {
  const Arm leader = leader_is_right ? Arm::kRight : Arm::kLeft;
  return build_conditioned_prompt(demos, test_obs, follower_pred, leader, kFollowerArmKey,
                                  PromptRole::kLeader);
}

PromptBundle build_judge_prompt(const std::vector<Demonstration>& demos, const Observation& test_obs,
                                const BimanualTrajectory& candidate) {
  std::string refs;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (i) refs += ", ";
    refs += serialize_observation(demos[i].observation.objects_only()) + ">" +
            render_actions(demos[i].actions);
  }
  PromptBundle bundle;
  bundle.system_text = judge_system_prompt();
  bundle.user_text = "Reference Demos\n" + refs + "\n\nCandidate Plan\n" +
                     serialize_observation(test_obs.objects_only()) + ">" + render_actions(candidate);
  bundle.role = PromptRole::kJudge;
  bundle.arm = ArmFilter::kBoth;
  return bundle;
}

ArmTrajectory ParsedCompletion::arm_actions() const {
  ArmTrajectory out;
  out.reserve(actions.size());
  for (const auto& row : actions) out.push_back(DiscreteAction::from_span(row));
  return out;
}

BimanualTrajectory ParsedCompletion::bimanual_actions() const {
  BimanualTrajectory out;
  out.reserve(actions.size());
  for (const auto& row : actions) out.push_back(BimanualAction::from_span(row));
  return out;
}

ParsedCompletion parse_completion(std::string_view text, int arity) {
  if (arity != kArmArity && arity != kBimanualArity) {
    throw RangeError("arity must be 7 or 14");
  }
  for (std::size_t p = text.find('['); p != std::string_view::npos; p = text.find('[', p + 1)) {
    Scanner s(text, p);
    auto rows = s.list_of_lists();
    if (!rows) continue;
    for (std::size_t i = 0; i < rows->size(); ++i) validate_row((*rows)[i], arity, i);
    return {std::move(*rows), std::string(text)};
  }
  throw ParseFailure("no list of integer lists found in completion");
}

ParsedPrompt parse_icl_prompt(std::string_view user_text) {
  Scanner s(user_text);
  ParsedPrompt out;
  Observation obs = parse_observation(s);
  if (!s.accept('>')) throw ParseFailure("expected '>' after observation");
  while (true) {
    s.skip_ws();
    if (s.done()) break;
    auto rows = s.list_of_lists();
    if (!rows) throw ParseFailure("expected action list at offset " + std::to_string(s.pos()));
    out.demos.push_back({std::move(obs), std::move(*rows)});
    if (!s.accept(',')) throw ParseFailure("expected ', ' between examples");
    obs = parse_observation(s);
    if (!s.accept('>')) throw ParseFailure("expected '>' after observation");
  }
  out.test_observation = std::move(obs);
  return out;
}

ParsedJudgePrompt parse_judge_prompt(std::string_view user_text) {
  constexpr std::string_view kHead = "Reference Demos\n";
  constexpr std::string_view kSplit = "\n\nCandidate Plan\n";
  if (user_text.substr(0, kHead.size()) != kHead) throw ParseFailure("missing 'Reference Demos'");
  const auto split = user_text.find(kSplit);
  if (split == std::string_view::npos) throw ParseFailure("missing 'Candidate Plan'");

  ParsedJudgePrompt out;
  Scanner refs(user_text.substr(0, split), kHead.size());
  while (true) {
    Observation obs = parse_observation(refs);
    if (!refs.accept('>')) throw ParseFailure("expected '>' after reference observation");
    auto rows = refs.list_of_lists();
    if (!rows) throw ParseFailure("expected reference actions");
    out.demos.push_back({std::move(obs), std::move(*rows)});
    if (!refs.accept(',')) break;
  }
  refs.skip_ws();
  if (!refs.done()) throw ParseFailure("trailing text after reference demos");

  Scanner cand(user_text, split + kSplit.size());
  out.candidate_observation = parse_observation(cand);
  if (!cand.accept('>')) throw ParseFailure("expected '>' after candidate observation");
  auto rows = cand.list_of_lists();
  if (!rows) throw ParseFailure("expected candidate actions");
  out.candidate = std::move(*rows);
  cand.skip_ws();
  if (!cand.done()) throw ParseFailure("trailing text after candidate plan");
  return out;
}

}  // namespace bimanual
