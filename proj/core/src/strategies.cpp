#include "bimanual/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <future>

#include "bimanual/prompt_codec.hpp"
#include "bimanual/random.hpp"

namespace bimanual {
namespace {

void require_demos(const std::vector<Demonstration>& demos) {
  if (demos.empty()) throw InsufficientDemos("strategy needs at least one demonstration");
}

ParsedCompletion call(const StrategyContext& ctx, const PromptBundle& prompt, double temperature,
                      const std::string& tag, int max_retries) {
  try {
    return ctx.gateway->complete_parsed({prompt.system_text, prompt.user_text, temperature, tag},
                                        arity_of(prompt.arm), max_retries);
  } catch (const ExhaustedRetries& e) {
    throw ExhaustedRetries(tag + ": " + e.what(), e.records());
  }
}

struct LeaderFollowerOutput {
  ArmTrajectory leader;
  ArmTrajectory follower;
};

LeaderFollowerOutput leader_follower_round(const std::vector<Demonstration>& demos,
                                           const Observation& obs, const StrategyConfig& cfg,
                                           const StrategyContext& ctx, double temperature) {
  const bool leader_is_right = cfg.leader_arm == Arm::kRight;
  LeaderFollowerOutput out;
  out.leader = call(ctx, build_single_prompt(demos, obs, filter_for(cfg.leader_arm)), temperature,
                    "leader", cfg.max_retries)
                   .arm_actions();
  out.follower = call(ctx, build_follower_prompt(demos, obs, out.leader, leader_is_right),
                      temperature, "follower", cfg.max_retries)
                     .arm_actions();
  return out;
}

LeaderFollowerOutput debate_rounds(const std::vector<Demonstration>& demos, const Observation& obs,
                                   const StrategyConfig& cfg, const StrategyContext& ctx,
                                   double temperature) {
  const bool leader_is_right = cfg.leader_arm == Arm::kRight;
  const LeaderFollowerOutput r1 = leader_follower_round(demos, obs, cfg, ctx, temperature);
  LeaderFollowerOutput r2;
  r2.leader = call(ctx, build_reversed_leader_prompt(demos, obs, r1.follower, leader_is_right),
                   temperature, "leader_r2", cfg.max_retries)
                  .arm_actions();
  r2.follower = call(ctx, build_follower_prompt(demos, obs, r2.leader, leader_is_right),
                     temperature, "follower_r2", cfg.max_retries)
                    .arm_actions();
  return r2;
}

using CandidateFn = BimanualTrajectory (*)(const std::vector<Demonstration>&, const Observation&,
                                           const StrategyConfig&, const StrategyContext&);

BimanualTrajectory lf_candidate(const std::vector<Demonstration>& demos, const Observation& obs,
                                const StrategyConfig& cfg, const StrategyContext& ctx) {
  auto r = leader_follower_round(demos, obs, cfg, ctx, cfg.candidate_temperature);
  return compose(r.leader, r.follower, cfg.leader_arm == Arm::kRight);
}

BimanualTrajectory debate_candidate(const std::vector<Demonstration>& demos, const Observation& obs,
                                    const StrategyConfig& cfg, const StrategyContext& ctx) {
  auto r = debate_rounds(demos, obs, cfg, ctx, cfg.candidate_temperature);
  return compose(r.leader, r.follower, cfg.leader_arm == Arm::kRight);
}

BimanualPlan select_among(const std::vector<Demonstration>& demos, const Observation& obs,
                          const StrategyConfig& cfg, const StrategyContext& ctx,
                          CandidateFn generate) {
  require_demos(demos);
  cfg.validate();
  if (!ctx.judge) throw ConfigError("selection strategies need a judge");
  if (cfg.resample_batch && !ctx.pool) throw ConfigError("resample_batch needs a demo pool");
  const auto n = static_cast<std::size_t>(cfg.n_candidates);

  std::vector<std::vector<Demonstration>> batches(n);
  for (std::size_t j = 0; j < n; ++j) {
    batches[j] = cfg.resample_batch ? sample_batch(*ctx.pool, demos.size(), mix_seed(cfg.seed, j))
                                    : demos;
  }

  std::vector<std::future<BimanualTrajectory>> gen;
  gen.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    gen.push_back(std::async(std::launch::async, generate, std::cref(batches[j]), std::cref(obs),
                             std::cref(cfg), std::cref(ctx)));
  }
  std::vector<std::optional<BimanualTrajectory>> candidates(n);
  std::string last_error;
  for (std::size_t j = 0; j < n; ++j) {
    try {
      candidates[j] = gen[j].get();
    } catch (const Error& e) {
      last_error = e.what();
    }
  }

  std::vector<std::future<int>> scoring(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!candidates[j]) continue;
    scoring[j] = std::async(std::launch::async, [&, j] {
      return ctx.judge->score(*candidates[j], batches[j], obs).score;
    });
  }
  BimanualPlan plan;
  plan.kind = cfg.kind;
  plan.candidate_scores.assign(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    if (!scoring[j].valid()) continue;
    try {
      plan.candidate_scores[j] = scoring[j].get();
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  plan.selected = select_best(plan.candidate_scores);
  if (!plan.selected) {
    throw AllCandidatesFailed("all " + std::to_string(n) + " candidates failed: " + last_error);
  }
  plan.actions = *candidates[*plan.selected];
  return plan;
}

}  // namespace

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kSingleAgent: return "single_agent";
    case StrategyKind::kDualAgent: return "dual_agent";
    case StrategyKind::kLeaderFollower: return "leader_follower";
    case StrategyKind::kArmsDebate: return "arms_debate";
    case StrategyKind::kBestOfN: return "best_of_n";
    case StrategyKind::kDebatePlusBon: return "debate_plus_bon";
  }
  return "leader_follower";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(c == '-' ? '_' : std::tolower(static_cast<unsigned char>(c)));
  if (s == "single_agent" || s == "sa") return StrategyKind::kSingleAgent;
  if (s == "dual_agent" || s == "da") return StrategyKind::kDualAgent;
  if (s == "leader_follower" || s == "lf") return StrategyKind::kLeaderFollower;
  if (s == "arms_debate" || s == "debate") return StrategyKind::kArmsDebate;
  if (s == "best_of_n" || s == "bon") return StrategyKind::kBestOfN;
  if (s == "debate_plus_bon" || s == "debate_bon") return StrategyKind::kDebatePlusBon;
  throw ConfigError("unknown strategy '" + name + "'");
}

std::string StrategyConfig::label() const {
  std::string base;
  switch (kind) {
    case StrategyKind::kSingleAgent: base = "SA"; break;
    case StrategyKind::kDualAgent: base = "DA"; break;
    case StrategyKind::kLeaderFollower: base = "LF"; break;
    case StrategyKind::kArmsDebate: base = "Debate"; break;
    case StrategyKind::kBestOfN: base = "BoN(n=" + std::to_string(n_candidates) + ")"; break;
    case StrategyKind::kDebatePlusBon:
      base = "Debate+BoN(n=" + std::to_string(n_candidates) + ")";
      break;
  }
  if (leader_arm == Arm::kLeft &&
      kind != StrategyKind::kSingleAgent && kind != StrategyKind::kDualAgent) {
    base += "[left-leader]";
  }
  return base;
}

void StrategyConfig::validate() const {
  if (n_candidates < 1) throw ConfigError("n_candidates must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (temperature < 0.0 || candidate_temperature < 0.0) {
    throw ConfigError("temperatures must be >= 0");
  }
}

BimanualTrajectory compose(const ArmTrajectory& leader, const ArmTrajectory& follower,
                           bool leader_is_right) {
  if (leader.empty() || follower.empty()) throw EmptyTrajectory("cannot compose an empty trajectory");
  const std::size_t k = std::max(leader.size(), follower.size());
  BimanualTrajectory out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const DiscreteAction& l = leader[std::min(i, leader.size() - 1)];
    const DiscreteAction& f = follower[std::min(i, follower.size() - 1)];
    out.push_back(leader_is_right ? BimanualAction{l, f} : BimanualAction{f, l});
  }
  return out;
}

BimanualPlan run_single_agent(const std::vector<Demonstration>& demos, const Observation& obs,
                              const StrategyConfig& cfg, const StrategyContext& ctx) {
  require_demos(demos);
  BimanualPlan plan;
  plan.kind = StrategyKind::kSingleAgent;
  plan.actions = call(ctx, build_single_prompt(demos, obs, ArmFilter::kBoth), cfg.temperature,
                      "single", cfg.max_retries)
                     .bimanual_actions();
  return plan;
}

BimanualPlan run_dual_agent(const std::vector<Demonstration>& demos, const Observation& obs,
                            const StrategyConfig& cfg, const StrategyContext& ctx) {
  require_demos(demos);
  auto arm_call = [&](Arm arm) {
    return call(ctx, build_single_prompt(demos, obs, filter_for(arm)), cfg.temperature,
                to_string(arm), cfg.max_retries)
        .arm_actions();
  };
  auto right = std::async(std::launch::async, arm_call, Arm::kRight);
  auto left = std::async(std::launch::async, arm_call, Arm::kLeft);
  // Collect both before rethrowing so no call outlives the episode.
  std::exception_ptr failure;
  ArmTrajectory r, l;
  try {
    r = right.get();
  } catch (...) {
    failure = std::current_exception();
  }
  try {
    l = left.get();
  } catch (...) {
    if (!failure) failure = std::current_exception();
  }
  if (failure) std::rethrow_exception(failure);
  BimanualPlan plan;
  plan.kind = StrategyKind::kDualAgent;
  plan.actions = compose(r, l, true);
  return plan;
}

BimanualPlan run_leader_follower(const std::vector<Demonstration>& demos, const Observation& obs,
                                 const StrategyConfig& cfg, const StrategyContext& ctx) {
  require_demos(demos);
  auto r = leader_follower_round(demos, obs, cfg, ctx, cfg.temperature);
  BimanualPlan plan;
  plan.kind = StrategyKind::kLeaderFollower;
  plan.actions = compose(r.leader, r.follower, cfg.leader_arm == Arm::kRight);
  return plan;
}

BimanualPlan run_arms_debate(const std::vector<Demonstration>& demos, const Observation& obs,
                             const StrategyConfig& cfg, const StrategyContext& ctx) {
  require_demos(demos);
  auto r = debate_rounds(demos, obs, cfg, ctx, cfg.temperature);
  BimanualPlan plan;
  plan.kind = StrategyKind::kArmsDebate;
  plan.actions = compose(r.leader, r.follower, cfg.leader_arm == Arm::kRight);
  return plan;
}

BimanualPlan run_best_of_n(const std::vector<Demonstration>& demos, const Observation& obs,
                           const StrategyConfig& cfg, const StrategyContext& ctx) {
  auto plan = select_among(demos, obs, cfg, ctx, &lf_candidate);
  plan.kind = StrategyKind::kBestOfN;
  return plan;
}

BimanualPlan run_debate_plus_bon(const std::vector<Demonstration>& demos, const Observation& obs,
                                 const StrategyConfig& cfg, const StrategyContext& ctx) {
  auto plan = select_among(demos, obs, cfg, ctx, &debate_candidate);
  plan.kind = StrategyKind::kDebatePlusBon;
  return plan;
}

BimanualPlan run_strategy(const std::vector<Demonstration>& demos, const Observation& obs,
                          const StrategyConfig& cfg, const StrategyContext& ctx) {
  if (!ctx.gateway) throw ConfigError("strategy needs a gateway");
  switch (cfg.kind) {
    case StrategyKind::kSingleAgent: return run_single_agent(demos, obs, cfg, ctx);
    case StrategyKind::kDualAgent: return run_dual_agent(demos, obs, cfg, ctx);
    case StrategyKind::kLeaderFollower: return run_leader_follower(demos, obs, cfg, ctx);
    case StrategyKind::kArmsDebate: return run_arms_debate(demos, obs, cfg, ctx);
    case StrategyKind::kBestOfN: return run_best_of_n(demos, obs, cfg, ctx);
    case StrategyKind::kDebatePlusBon: return run_debate_plus_bon(demos, obs, cfg, ctx);
  }
  throw ConfigError("unknown strategy");
}

int call_budget(const StrategyConfig& cfg) {
  switch (cfg.kind) {
    case StrategyKind::kSingleAgent: return 1;
    case StrategyKind::kDualAgent: return 2;
    case StrategyKind::kLeaderFollower: return 2;
    case StrategyKind::kArmsDebate: return 4;
    case StrategyKind::kBestOfN: return 3 * cfg.n_candidates;
    case StrategyKind::kDebatePlusBon: return 5 * cfg.n_candidates;
  }
  return 0;
}

std::optional<std::size_t> select_best(const std::vector<int>& scores) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] < 0) continue;
    if (!best || scores[j] > scores[*best]) best = j;
  }
  return best;
}

}  // namespace bimanual
