#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bimanual/demo_store.hpp"
#include "bimanual/judge.hpp"
#include "bimanual/llm_gateway.hpp"

namespace bimanual {

enum class StrategyKind {
  kSingleAgent,
  kDualAgent,
  kLeaderFollower,
  kArmsDebate,
  kBestOfN,
  kDebatePlusBon,
};

std::string to_string(StrategyKind kind);
/// Accepts the canonical names (single_agent, ...) and the short forms
/// sa, da, lf, debate, bon, debate_bon. Throws ConfigError.
StrategyKind strategy_kind_from_string(const std::string& name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kLeaderFollower;
  Arm leader_arm = Arm::kRight;
  int n_candidates = 5;
  int max_retries = 2;
  /// Sampling temperature of the planner calls of single-pass strategies.
  double temperature = 0.0;
  /// Sampling temperature of Best-of-N candidate generation.
  double candidate_temperature = 1.0;
  /// Best-of-N: draw a fresh batch from StrategyContext::pool per candidate
  /// instead of sharing the episode's batch.
  bool resample_batch = false;
  std::uint64_t seed = 0;

  /// Display name, e.g. "LF", "BoN(n=5)".
  std::string label() const;
  void validate() const;
};

struct StrategyContext {
  std::shared_ptr<Gateway> gateway;
  /// Scores Best-of-N candidates; required by the two selection strategies.
  std::shared_ptr<Judge> judge;
  /// Demo pool used when resample_batch is set.
  const std::vector<Demonstration>* pool = nullptr;
};

struct BimanualPlan {
  BimanualTrajectory actions;
  StrategyKind kind = StrategyKind::kLeaderFollower;
  /// Best-of-N bookkeeping: index of the chosen candidate and every score,
  /// with -1 for candidates that failed.
  std::optional<std::size_t> selected;
  std::vector<int> candidate_scores;
};

/// Zips leader and follower trajectories, padding the shorter one by
/// repeating its last action. The leader takes the right slot iff
/// leader_is_right. Throws EmptyTrajectory.
BimanualTrajectory compose(const ArmTrajectory& leader, const ArmTrajectory& follower,
                           bool leader_is_right);

BimanualPlan run_single_agent(const std::vector<Demonstration>& demos, const Observation& obs,
                              const StrategyConfig& cfg, const StrategyContext& ctx);
BimanualPlan run_dual_agent(const std::vector<Demonstration>& demos, const Observation& obs,
                            const StrategyConfig& cfg, const StrategyContext& ctx);
BimanualPlan run_leader_follower(const std::vector<Demonstration>& demos, const Observation& obs,
                                 const StrategyConfig& cfg, const StrategyContext& ctx);
BimanualPlan run_arms_debate(const std::vector<Demonstration>& demos, const Observation& obs,
                             const StrategyConfig& cfg, const StrategyContext& ctx);
BimanualPlan run_best_of_n(const std::vector<Demonstration>& demos, const Observation& obs,
                           const StrategyConfig& cfg, const StrategyContext& ctx);
BimanualPlan run_debate_plus_bon(const std::vector<Demonstration>& demos, const Observation& obs,
                                 const StrategyConfig& cfg, const StrategyContext& ctx);

/// Dispatches on cfg.kind.
BimanualPlan run_strategy(const std::vector<Demonstration>& demos, const Observation& obs,
                          const StrategyConfig& cfg, const StrategyContext& ctx);

/// Logical calls per episode with first-try-valid completions.
int call_budget(const StrategyConfig& cfg);

/// Lowest index of the maximal score; scores < 0 mark failed candidates.
/// Returns nullopt when every candidate failed.
std::optional<std::size_t> select_best(const std::vector<int>& scores);

}  // namespace bimanual
