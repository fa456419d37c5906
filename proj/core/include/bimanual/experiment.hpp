#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bimanual/bench_env.hpp"
#include "bimanual/http_backend.hpp"
#include "bimanual/judge.hpp"
#include "bimanual/oracle_backend.hpp"
#include "bimanual/strategies.hpp"

namespace bimanual {

enum class BackendKind { kOracle, kHttp };
std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

struct RunConfig {
  /// Built-in task names or task spec paths.
  std::vector<std::string> tasks{"lift-sym"};
  std::vector<StrategyConfig> strategies{StrategyConfig{}};
  BackendKind backend = BackendKind::kOracle;
  OracleOptions oracle;
  HttpBackendOptions http;
  JudgeMode judge = JudgeMode::kLlm;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int episodes = 100;
  int n_demos = 10;
  /// Demonstrations generated per (task, seed) when no dataset is given.
  int pool_size = 100;
  /// Optional: load pools from <dataset_dir>/<task name>/ instead.
  std::filesystem::path dataset_dir;
  /// Empty: nothing is written.
  std::filesystem::path out_dir;
  int jobs = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Applies every key present in `text` on top of `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
std::string run_config_to_json(const RunConfig& cfg);

struct EpisodeRecord {
  std::string task;
  std::string strategy;
  std::uint64_t seed = 0;
  int episode = 0;
  bool success = false;
  std::string failure_reason;
  int calls = 0;
  int retries = 0;
  std::int64_t prompt_chars = 0;
  std::int64_t completion_chars = 0;
  std::int64_t wall_ms = 0;
  int plan_length = 0;
  std::optional<std::size_t> selected;

  bool operator==(const EpisodeRecord&) const = default;
};

std::string episode_to_json(const EpisodeRecord& r);
EpisodeRecord episode_from_json(const std::string& line);
std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& file);

struct ReportRow {
  std::string task;
  std::string strategy;
  int episodes = 0;
  /// Success percentage of each seed, in seed order.
  std::vector<double> per_seed_success;
  double success_mean = 0.0;
  /// Population standard deviation over seeds.
  double success_sd = 0.0;
  double calls_mean = 0.0;
  double calls_sd = 0.0;
  double prompt_chars_mean = 0.0;
  double completion_chars_mean = 0.0;
  // Wall time per episode; kept out of the machine summary.
  double wall_median_ms = 0.0;
  double wall_q1_ms = 0.0;
  double wall_q3_ms = 0.0;

  bool operator==(const ReportRow&) const = default;
};

struct AggregateReport {
  std::vector<std::string> tasks;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds;
  /// Task-major, in config order.
  std::vector<ReportRow> rows;

  const ReportRow* find(const std::string& task, const std::string& strategy) const;
  /// Copy with every wall-time field zeroed.
  AggregateReport without_timing() const;
  bool operator==(const AggregateReport&) const = default;
};

double mean_of(const std::vector<double>& v);
/// Population standard deviation (divides by n).
double population_sd(const std::vector<double>& v);
/// Linear-interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> v, double q);

/// Groups records by (task, strategy) in the given orders; pairs without
/// records get no row.
AggregateReport aggregate(const std::vector<EpisodeRecord>& records,
                          const std::vector<std::string>& tasks,
                          const std::vector<std::string>& strategies,
                          const std::vector<std::uint64_t>& seeds);

/// Runs every (task, strategy, seed, episode). Strategy errors become failed
/// episodes. When out_dir is set writes episodes.jsonl, summary.json,
/// timing.json, tables.txt and run_config.json.
AggregateReport run_experiment(const RunConfig& cfg);

/// Runs one episode of one strategy on a spawned world.
EpisodeRecord run_episode(const World& world, const std::vector<Demonstration>& batch,
                          const std::vector<Demonstration>& pool, const StrategyConfig& strategy,
                          const std::shared_ptr<Backend>& backend, JudgeMode judge_mode);

/// Success table (tasks as columns plus average) and cost table.
std::string report_tables(const AggregateReport& report);

/// Machine summary without wall times; byte-stable across reruns.
std::string summary_to_json(const AggregateReport& report);
AggregateReport summary_from_json(const std::string& text);
std::string timing_to_json(const AggregateReport& report);

std::shared_ptr<Backend> make_backend(const RunConfig& cfg);

}  // namespace bimanual
