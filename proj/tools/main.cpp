// bimanual-icl: dataset generation, experiment runs, reports and standalone
// plan scoring.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bimanual/bench_env.hpp"
#include "bimanual/experiment.hpp"
#include "bimanual/judge.hpp"

namespace {

using namespace bimanual;

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::vector<std::string> tasks{"lift-sym"};
  std::vector<std::string> strategies{"lf"};
  std::string backend = "oracle";
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int episodes = 100;
  int n_demos = 10;
  int pool_size = 100;
  std::string leader_arm = "right";
  int n_candidates = 5;
  int max_retries = 2;
  std::string judge = "llm";
  int oracle_noise = 0;
  std::uint64_t oracle_seed = 0;
  std::string out;
  std::string config;
  std::string dataset;
  std::string url;
  std::string model = "gpt-5-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::int64_t timeout_ms = 60000;
  int jobs = 1;
};

void add_backend_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--backend", f.backend, "oracle or http")
      ->check(CLI::IsMember({"oracle", "http"}));
  cmd->add_option("--url", f.url, "chat-completions endpoint for --backend http");
  cmd->add_option("--model", f.model, "model name sent to the endpoint");
  cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key");
  cmd->add_option("--timeout-ms", f.timeout_ms, "per-request timeout");
  cmd->add_option("--oracle-noise", f.oracle_noise, "oracle jitter on the follower arm, voxels");
  cmd->add_option("--oracle-seed", f.oracle_seed, "oracle jitter seed");
  cmd->add_option("--config", f.config, "JSON config; its keys override flags");
}

RunConfig to_config(const RunFlags& f) {
  RunConfig cfg;
  cfg.tasks = f.tasks;
  cfg.strategies.clear();
  for (const auto& name : f.strategies) {
    StrategyConfig s;
    s.kind = strategy_kind_from_string(name);
    s.leader_arm = arm_from_string(f.leader_arm);
    s.n_candidates = f.n_candidates;
    s.max_retries = f.max_retries;
    cfg.strategies.push_back(s);
  }
  cfg.backend = backend_kind_from_string(f.backend);
  cfg.oracle.noise_voxels = f.oracle_noise;
  cfg.oracle.seed = f.oracle_seed;
  cfg.oracle.noise_arm = other(arm_from_string(f.leader_arm));
  cfg.http = {f.url, f.model, f.api_key_env, f.timeout_ms};
  cfg.judge = judge_mode_from_string(f.judge);
  cfg.seeds = f.seeds;
  cfg.episodes = f.episodes;
  cfg.n_demos = f.n_demos;
  cfg.pool_size = f.pool_size;
  cfg.dataset_dir = f.dataset;
  cfg.out_dir = f.out;
  cfg.jobs = f.jobs;
  if (!f.config.empty()) cfg = run_config_from_json(read_text(f.config), cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bimanual in-context planning: datasets, experiments, reports"};
  app.require_subcommand(1);

  RunFlags flags;

  auto* gen = app.add_subcommand("gen-data", "Generate expert demonstration datasets");
  std::vector<std::string> gen_tasks{"lift-sym", "handover", "dual-targets", "drawer-item"};
  std::size_t gen_count = 100;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data";
  gen->add_option("--task", gen_tasks, "task names or spec files");
  gen->add_option("--count", gen_count, "demonstrations per task");
  gen->add_option("--seed", gen_seed, "spawn seed");
  gen->add_option("--out", gen_out, "output directory; one subdirectory per task");

  auto* run = app.add_subcommand("run", "Run strategies over seeds x episodes");
  run->add_option("--task", flags.tasks, "task names or spec files");
  run->add_option("--strategy", flags.strategies, "sa, da, lf, debate, bon, debate_bon");
  run->add_option("--seeds", flags.seeds, "seed list");
  run->add_option("--episodes", flags.episodes, "episodes per seed");
  run->add_option("--n-demos", flags.n_demos, "demonstrations per prompt");
  run->add_option("--pool-size", flags.pool_size, "generated demonstrations per task and seed");
  run->add_option("--dataset", flags.dataset, "load demo pools from <dir>/<task>/");
  run->add_option("--leader-arm", flags.leader_arm, "right or left")
      ->check(CLI::IsMember({"right", "left"}));
  run->add_option("--n-candidates", flags.n_candidates, "Best-of-N candidates");
  run->add_option("--max-retries", flags.max_retries, "retries per call on unparseable output");
  run->add_option("--judge", flags.judge, "rubric or llm")->check(CLI::IsMember({"rubric", "llm"}));
  run->add_option("--out", flags.out, "output directory");
  run->add_option("--jobs", flags.jobs, "episodes in flight");
  add_backend_flags(run, flags);

  auto* report = app.add_subcommand("report", "Re-render tables from a run directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "directory written by run")->required();

  auto* judge = app.add_subcommand("judge", "Score a plan file against reference demos");
  std::string plan_file, demos_dir, judge_mode = "rubric";
  judge->add_option("--plan", plan_file, "plan in demonstration format")->required();
  judge->add_option("--demos", demos_dir, "directory of reference demonstrations")->required();
  judge->add_option("--mode", judge_mode, "rubric or llm")->check(CLI::IsMember({"rubric", "llm"}));
  add_backend_flags(judge, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      for (const auto& name : gen_tasks) {
        const TaskSpec task = resolve_task(name);
        const auto demos = generate_dataset(task, gen_count, gen_seed);
        save_dataset(std::filesystem::path(gen_out) / task.name, demos);
        std::cout << task.name << ": " << demos.size() << " demonstrations\n";
      }
    } else if (*run) {
      const RunConfig cfg = to_config(flags);
      std::cout << report_tables(run_experiment(cfg));
    } else if (*report) {
      const std::filesystem::path dir = report_dir;
      const RunConfig cfg = run_config_from_json(read_text(dir / "run_config.json"));
      std::vector<std::string> tasks, labels;
      for (const auto& t : cfg.tasks) tasks.push_back(resolve_task(t).name);
      for (const auto& s : cfg.strategies) labels.push_back(s.label());
      const auto records = read_episode_log(dir / "episodes.jsonl");
      std::cout << report_tables(aggregate(records, tasks, labels, cfg.seeds));
    } else if (*judge) {
      const Demonstration plan = load_demo(plan_file);
      const auto demos = load_dataset(demos_dir);
      std::shared_ptr<Gateway> gateway;
      const JudgeMode mode = judge_mode_from_string(judge_mode);
      if (mode == JudgeMode::kLlm) gateway = std::make_shared<Gateway>(make_backend(to_config(flags)));
      std::cout << verdict_to_json(score_plan(plan.actions, demos, plan.observation, mode, gateway))
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
