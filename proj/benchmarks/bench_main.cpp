#include <benchmark/benchmark.h>

#include <random>

#include "bimanual/bench_env.hpp"
#include "bimanual/oracle_backend.hpp"
#include "bimanual/strategies.hpp"

namespace bimanual {
namespace {

void BM_DiscretizePose(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ContinuousPose p;
  p.position = {-0.3 + u(rng), -0.5 + u(rng), 0.6 + u(rng)};
  p.orientation = Eigen::Quaterniond::UnitRandom();
  p.gripper = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(discretize_pose(p));
}
BENCHMARK(BM_DiscretizePose);

void BM_PruneCentroid(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto clouds = synthetic_box_clouds("box", {0.1, 0.0, 0.9}, {0.08, 0.06, 0.05}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(extract_centroid(clouds, ExtractionStrategy::kPrune));
}
BENCHMARK(BM_PruneCentroid);

void BM_BuildFollowerPrompt(benchmark::State& state) {
  const auto& task = resolve_task("handover");
  const auto demos = generate_dataset(task, static_cast<std::size_t>(state.range(0)), 3);
  const auto obs = spawn(task, 99).observation;
  const auto leader = arm_trajectory(demos[0].actions, Arm::kRight);
  for (auto _ : state) benchmark::DoNotOptimize(build_follower_prompt(demos, obs, leader, true));
}
BENCHMARK(BM_BuildFollowerPrompt)->Arg(1)->Arg(10);

void BM_ParseCompletion(benchmark::State& state) {
  const auto demo = scripted_expert(spawn(resolve_task("drawer-item"), 4));
  const auto text = render_actions(demo.actions);
  for (auto _ : state) benchmark::DoNotOptimize(parse_completion(text, 14));
}
BENCHMARK(BM_ParseCompletion);

void BM_OracleEpisode(benchmark::State& state) {
  const auto& task = resolve_task("lift-sym");
  const auto demos = generate_dataset(task, 10, 5);
  const auto world = spawn(task, 42);
  StrategyConfig cfg;
  cfg.kind = static_cast<StrategyKind>(state.range(0));
  for (auto _ : state) {
    StrategyContext ctx;
    ctx.gateway = std::make_shared<Gateway>(std::make_shared<OracleBackend>());
    ctx.judge = std::make_shared<LlmJudge>(ctx.gateway);
    const auto plan = run_strategy(demos, world.observation, cfg, ctx);
    benchmark::DoNotOptimize(execute(world, plan.actions));
  }
}
BENCHMARK(BM_OracleEpisode)
    ->Arg(static_cast<int>(StrategyKind::kLeaderFollower))
    ->Arg(static_cast<int>(StrategyKind::kBestOfN));

}  // namespace
}  // namespace bimanual

BENCHMARK_MAIN();
