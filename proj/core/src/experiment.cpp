#include "bimanual/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bimanual/random.hpp"

namespace bimanual {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json strategy_json(const StrategyConfig& s) {
  ordered_json j;
  j["kind"] = to_string(s.kind);
  j["leader_arm"] = to_string(s.leader_arm);
  j["n_candidates"] = s.n_candidates;
  j["max_retries"] = s.max_retries;
  j["temperature"] = s.temperature;
  j["candidate_temperature"] = s.candidate_temperature;
  j["resample_batch"] = s.resample_batch;
  return j;
}

StrategyConfig strategy_from_json(const ordered_json& j) {
  StrategyConfig s;
  if (j.is_string()) {
    s.kind = strategy_kind_from_string(j.get<std::string>());
    return s;
  }
  if (!j.is_object()) throw ConfigError("strategy entries must be strings or objects");
  s.kind = strategy_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("leader_arm")) {
    try {
      s.leader_arm = arm_from_string(j["leader_arm"].get<std::string>());
    } catch (const RangeError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("n_candidates")) s.n_candidates = j["n_candidates"].get<int>();
  if (j.contains("max_retries")) s.max_retries = j["max_retries"].get<int>();
  if (j.contains("temperature")) s.temperature = j["temperature"].get<double>();
  if (j.contains("candidate_temperature")) {
    s.candidate_temperature = j["candidate_temperature"].get<double>();
  }
  if (j.contains("resample_batch")) s.resample_batch = j["resample_batch"].get<bool>();
  return s;
}

std::string failure_tag(const std::exception& e) {
  if (dynamic_cast<const ExhaustedRetries*>(&e)) return "exhausted_retries";
  if (dynamic_cast<const AllCandidatesFailed*>(&e)) return "all_candidates_failed";
  if (dynamic_cast<const TimeoutError*>(&e)) return "timeout";
  if (dynamic_cast<const TransportError*>(&e)) return "transport_error";
  if (dynamic_cast<const OracleParseError*>(&e)) return "oracle_parse_error";
  if (dynamic_cast<const JudgeParseError*>(&e)) return "judge_parse_error";
  return "strategy_error";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

struct TaskPools {
  TaskSpec spec;
  /// Indexed like cfg.seeds.
  std::vector<std::vector<Demonstration>> pools;
};

}  // namespace

std::string to_string(BackendKind kind) { return kind == BackendKind::kOracle ? "oracle" : "http"; }

BackendKind backend_kind_from_string(const std::string& name) {
  if (name == "oracle") return BackendKind::kOracle;
  if (name == "http") return BackendKind::kHttp;
  throw ConfigError("unknown backend '" + name + "'");
}

void RunConfig::validate() const {
  if (tasks.empty()) throw ConfigError("no tasks configured");
  if (strategies.empty()) throw ConfigError("no strategies configured");
  if (seeds.empty()) throw ConfigError("no seeds configured");
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (n_demos < 1) throw ConfigError("n_demos must be >= 1");
  if (dataset_dir.empty() && pool_size < n_demos) throw ConfigError("pool_size must be >= n_demos");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (oracle.noise_voxels < 0) throw ConfigError("oracle noise must be >= 0");
  if (backend == BackendKind::kHttp && http.url.empty()) throw ConfigError("http backend needs a url");
  std::vector<std::string> labels;
  for (const auto& s : strategies) {
    s.validate();
    if (std::find(labels.begin(), labels.end(), s.label()) != labels.end()) {
      throw ConfigError("strategy " + s.label() + " listed twice");
    }
    labels.push_back(s.label());
  }
}

RunConfig run_config_from_json(const std::string& text, RunConfig cfg) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    if (doc.contains("tasks")) cfg.tasks = doc["tasks"].get<std::vector<std::string>>();
    if (doc.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : doc["strategies"]) cfg.strategies.push_back(strategy_from_json(s));
    }
    if (doc.contains("backend")) cfg.backend = backend_kind_from_string(doc["backend"].get<std::string>());
    if (doc.contains("oracle")) {
      const auto& o = doc["oracle"];
      if (o.contains("seed")) cfg.oracle.seed = o["seed"].get<std::uint64_t>();
      if (o.contains("noise_voxels")) cfg.oracle.noise_voxels = o["noise_voxels"].get<int>();
      if (o.contains("noise_arm")) cfg.oracle.noise_arm = arm_from_string(o["noise_arm"].get<std::string>());
    }
    if (doc.contains("http")) {
      const auto& h = doc["http"];
      if (h.contains("url")) cfg.http.url = h["url"].get<std::string>();
      if (h.contains("model")) cfg.http.model = h["model"].get<std::string>();
      if (h.contains("api_key_env")) cfg.http.api_key_env = h["api_key_env"].get<std::string>();
      if (h.contains("timeout_ms")) cfg.http.timeout_ms = h["timeout_ms"].get<std::int64_t>();
    }
    if (doc.contains("judge")) cfg.judge = judge_mode_from_string(doc["judge"].get<std::string>());
    if (doc.contains("seeds")) cfg.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("episodes")) cfg.episodes = doc["episodes"].get<int>();
    if (doc.contains("n_demos")) cfg.n_demos = doc["n_demos"].get<int>();
    if (doc.contains("pool_size")) cfg.pool_size = doc["pool_size"].get<int>();
    if (doc.contains("dataset_dir")) cfg.dataset_dir = doc["dataset_dir"].get<std::string>();
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const RangeError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json doc;
  doc["tasks"] = cfg.tasks;
  doc["strategies"] = ordered_json::array();
  for (const auto& s : cfg.strategies) doc["strategies"].push_back(strategy_json(s));
  doc["backend"] = to_string(cfg.backend);
  doc["oracle"] = {{"seed", cfg.oracle.seed},
                   {"noise_voxels", cfg.oracle.noise_voxels},
                   {"noise_arm", to_string(cfg.oracle.noise_arm)}};
  doc["http"] = {{"url", cfg.http.url},
                 {"model", cfg.http.model},
                 {"api_key_env", cfg.http.api_key_env},
                 {"timeout_ms", cfg.http.timeout_ms}};
  doc["judge"] = to_string(cfg.judge);
  doc["seeds"] = cfg.seeds;
  doc["episodes"] = cfg.episodes;
  doc["n_demos"] = cfg.n_demos;
  doc["pool_size"] = cfg.pool_size;
  doc["dataset_dir"] = cfg.dataset_dir.string();
  doc["out_dir"] = cfg.out_dir.string();
  doc["jobs"] = cfg.jobs;
  return doc.dump(2) + "\n";
}

std::string episode_to_json(const EpisodeRecord& r) {
  ordered_json j;
  j["task"] = r.task;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["episode"] = r.episode;
  j["success"] = r.success;
  j["failure_reason"] = r.failure_reason;
  j["calls"] = r.calls;
  j["retries"] = r.retries;
  j["prompt_chars"] = r.prompt_chars;
  j["completion_chars"] = r.completion_chars;
  j["wall_ms"] = r.wall_ms;
  j["plan_length"] = r.plan_length;
  j["selected"] = r.selected ? ordered_json(*r.selected) : ordered_json(nullptr);
  return j.dump();
}

EpisodeRecord episode_from_json(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    EpisodeRecord r;
    r.task = j.at("task").get<std::string>();
    r.strategy = j.at("strategy").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episode = j.at("episode").get<int>();
    r.success = j.at("success").get<bool>();
    r.failure_reason = j.at("failure_reason").get<std::string>();
    r.calls = j.at("calls").get<int>();
    r.retries = j.at("retries").get<int>();
    r.prompt_chars = j.at("prompt_chars").get<std::int64_t>();
    r.completion_chars = j.at("completion_chars").get<std::int64_t>();
    r.wall_ms = j.at("wall_ms").get<std::int64_t>();
    r.plan_length = j.at("plan_length").get<int>();
    if (j.contains("selected") && !j["selected"].is_null()) r.selected = j["selected"].get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad episode record: ") + e.what());
  }
}

std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  std::vector<EpisodeRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(episode_from_json(line));
  }
  return out;
}

const ReportRow* AggregateReport::find(const std::string& task, const std::string& strategy) const {
  for (const auto& r : rows) {
    if (r.task == task && r.strategy == strategy) return &r;
  }
  return nullptr;
}

AggregateReport AggregateReport::without_timing() const {
  AggregateReport out = *this;
  for (auto& r : out.rows) r.wall_median_ms = r.wall_q1_ms = r.wall_q3_ms = 0.0;
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AggregateReport aggregate(const std::vector<EpisodeRecord>& records,
                          const std::vector<std::string>& tasks,
                          const std::vector<std::string>& strategies,
                          const std::vector<std::uint64_t>& seeds) {
  AggregateReport report{tasks, strategies, seeds, {}};
  for (const auto& task : tasks) {
    for (const auto& strategy : strategies) {
      ReportRow row;
      row.task = task;
      row.strategy = strategy;
      std::vector<double> calls, prompt, completion, wall;
      for (std::uint64_t seed : seeds) {
        int n = 0, ok = 0;
        for (const auto& r : records) {
          if (r.task != task || r.strategy != strategy || r.seed != seed) continue;
          ++n;
          ok += r.success ? 1 : 0;
          calls.push_back(r.calls);
          prompt.push_back(static_cast<double>(r.prompt_chars));
          completion.push_back(static_cast<double>(r.completion_chars));
          wall.push_back(static_cast<double>(r.wall_ms));
        }
        row.episodes += n;
        row.per_seed_success.push_back(n ? 100.0 * ok / n : 0.0);
      }
      if (row.episodes == 0) continue;
      row.success_mean = mean_of(row.per_seed_success);
      row.success_sd = population_sd(row.per_seed_success);
      row.calls_mean = mean_of(calls);
      row.calls_sd = population_sd(calls);
      row.prompt_chars_mean = mean_of(prompt);
      row.completion_chars_mean = mean_of(completion);
      row.wall_median_ms = quantile(wall, 0.5);
      row.wall_q1_ms = quantile(wall, 0.25);
      row.wall_q3_ms = quantile(wall, 0.75);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::shared_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend == BackendKind::kHttp) return std::make_shared<HttpBackend>(cfg.http);
  return std::make_shared<OracleBackend>(cfg.oracle);
}

EpisodeRecord run_episode(const World& world, const std::vector<Demonstration>& batch,
                          const std::vector<Demonstration>& pool, const StrategyConfig& strategy,
                          const std::shared_ptr<Backend>& backend, JudgeMode judge_mode) {
  EpisodeRecord rec;
  rec.task = world.task.name;
  rec.strategy = strategy.label();

  auto gateway = std::make_shared<Gateway>(backend);
  StrategyContext ctx;
  ctx.gateway = gateway;
  ctx.pool = &pool;
  if (judge_mode == JudgeMode::kRubric) {
    ctx.judge = std::make_shared<RubricJudge>();
  } else {
    ctx.judge = std::make_shared<LlmJudge>(gateway, strategy.max_retries);
  }
  StrategyConfig cfg = strategy;
  cfg.seed = world.seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    const BimanualPlan plan = run_strategy(batch, world.observation, cfg, ctx);
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    const EpisodeResult result = execute(world, plan.actions);
    rec.success = result.success;
    rec.failure_reason = result.failure_reason;
    rec.plan_length = static_cast<int>(plan.actions.size());
    rec.selected = plan.selected;
  } catch (const Error& e) {
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    rec.success = false;
    rec.failure_reason = failure_tag(e);
  }
  for (const auto& c : gateway->log().snapshot()) {
    ++rec.calls;
    if (c.outcome == CallOutcome::kParseFail) ++rec.retries;
    rec.prompt_chars += c.prompt_chars;
    rec.completion_chars += c.completion_chars;
  }
  return rec;
}

AggregateReport run_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::vector<TaskPools> tasks;
  for (const auto& name : cfg.tasks) {
    TaskPools tp{resolve_task(name), {}};
    for (std::uint64_t seed : cfg.seeds) {
      if (!cfg.dataset_dir.empty()) {
        tp.pools.push_back(load_dataset(cfg.dataset_dir / tp.spec.name));
      } else {
        tp.pools.push_back(generate_dataset(tp.spec, static_cast<std::size_t>(cfg.pool_size),
                                            mix_seed(seed, fnv1a("pool:" + tp.spec.name))));
      }
      if (tp.pools.back().size() < static_cast<std::size_t>(cfg.n_demos)) {
        throw ConfigError("task " + tp.spec.name + " has fewer than n_demos demonstrations");
      }
    }
    tasks.push_back(std::move(tp));
  }

  std::vector<std::string> task_names, labels;
  for (const auto& t : tasks) task_names.push_back(t.spec.name);
  for (const auto& s : cfg.strategies) labels.push_back(s.label());

  const auto backend = make_backend(cfg);
  const std::size_t per_task = cfg.seeds.size() * static_cast<std::size_t>(cfg.episodes);
  const std::size_t n_units = tasks.size() * per_task;
  std::vector<std::vector<EpisodeRecord>> results(n_units);

  std::ofstream log;
  std::mutex log_mu;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    log.open(cfg.out_dir / "episodes.jsonl", std::ios::binary | std::ios::trunc);
    if (!log) throw ConfigError("cannot write " + (cfg.out_dir / "episodes.jsonl").string());
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    for (std::size_t u = next++; u < n_units; u = next++) {
      try {
        const auto& tp = tasks[u / per_task];
        const std::size_t si = (u % per_task) / static_cast<std::size_t>(cfg.episodes);
        const int e = static_cast<int>(u % static_cast<std::size_t>(cfg.episodes));
        const std::uint64_t seed = cfg.seeds[si];
        const std::uint64_t world_seed =
            mix_seed(mix_seed(seed, fnv1a("episode:" + tp.spec.name)), static_cast<std::uint64_t>(e));
        const World world = spawn(tp.spec, world_seed);
        const auto batch = sample_batch(tp.pools[si], static_cast<std::size_t>(cfg.n_demos),
                                        mix_seed(world_seed, 1));
        for (const auto& strategy : cfg.strategies) {
          EpisodeRecord rec = run_episode(world, batch, tp.pools[si], strategy, backend, cfg.judge);
          rec.seed = seed;
          rec.episode = e;
          if (log.is_open()) {
            std::lock_guard lock(log_mu);
            log << episode_to_json(rec) << '\n';
          }
          results[u].push_back(std::move(rec));
        }
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int width = std::min<int>(cfg.jobs, static_cast<int>(n_units));
  for (int i = 1; i < width; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  std::vector<EpisodeRecord> records;
  for (auto& r : results) records.insert(records.end(), r.begin(), r.end());
  AggregateReport report = aggregate(records, task_names, labels, cfg.seeds);

  if (!cfg.out_dir.empty()) {
    log.close();
    write_file(cfg.out_dir / "summary.json", summary_to_json(report));
    write_file(cfg.out_dir / "timing.json", timing_to_json(report));
    write_file(cfg.out_dir / "tables.txt", report_tables(report));
    write_file(cfg.out_dir / "run_config.json", run_config_to_json(cfg));
  }
  return report;
}

std::string report_tables(const AggregateReport& report) {
  std::ostringstream out;
  constexpr std::size_t kName = 26;
  constexpr std::size_t kCell = 16;

  out << "Success rate (%), mean +/- sd over " << report.seeds.size() << " seeds\n";
  out << pad("strategy", kName);
  for (const auto& t : report.tasks) out << pad(t, kCell);
  out << "average\n";
  for (const auto& s : report.strategies) {
    out << pad(s, kName);
    std::vector<double> means;
    for (const auto& t : report.tasks) {
      const ReportRow* r = report.find(t, s);
      if (!r) {
        out << pad("-", kCell);
        continue;
      }
      means.push_back(r->success_mean);
      out << pad(fixed(r->success_mean, 1) + " +/- " + fixed(r->success_sd, 1), kCell);
    }
    out << fixed(mean_of(means), 1) << "\n";
  }

  out << "\nCost per episode\n";
  out << pad("task", 16) << pad("strategy", kName) << pad("calls", 16) << pad("prompt chars", 14)
      << pad("output chars", 14) << "wall ms median [IQR]\n";
  for (const auto& r : report.rows) {
    out << pad(r.task, 16) << pad(r.strategy, kName)
        << pad(fixed(r.calls_mean, 1) + " +/- " + fixed(r.calls_sd, 1), 16)
        << pad(fixed(r.prompt_chars_mean, 0), 14) << pad(fixed(r.completion_chars_mean, 0), 14)
        << fixed(r.wall_median_ms, 0) << " [" << fixed(r.wall_q1_ms, 0) << ", "
        << fixed(r.wall_q3_ms, 0) << "]\n";
  }
  return out.str();
}

std::string summary_to_json(const AggregateReport& report) {
  ordered_json doc;
  doc["tasks"] = report.tasks;
  doc["strategies"] = report.strategies;
  doc["seeds"] = report.seeds;
  doc["rows"] = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json row;
    row["task"] = r.task;
    row["strategy"] = r.strategy;
    row["episodes"] = r.episodes;
    row["per_seed_success"] = r.per_seed_success;
    row["success_mean"] = r.success_mean;
    row["success_sd"] = r.success_sd;
    row["calls_mean"] = r.calls_mean;
    row["calls_sd"] = r.calls_sd;
    row["prompt_chars_mean"] = r.prompt_chars_mean;
    row["completion_chars_mean"] = r.completion_chars_mean;
    doc["rows"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

AggregateReport summary_from_json(const std::string& text) {
  try {
    const auto doc = ordered_json::parse(text);
    AggregateReport report;
    report.tasks = doc.at("tasks").get<std::vector<std::string>>();
    report.strategies = doc.at("strategies").get<std::vector<std::string>>();
    report.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& j : doc.at("rows")) {
      ReportRow r;
      r.task = j.at("task").get<std::string>();
      r.strategy = j.at("strategy").get<std::string>();
      r.episodes = j.at("episodes").get<int>();
      r.per_seed_success = j.at("per_seed_success").get<std::vector<double>>();
      r.success_mean = j.at("success_mean").get<double>();
      r.success_sd = j.at("success_sd").get<double>();
      r.calls_mean = j.at("calls_mean").get<double>();
      r.calls_sd = j.at("calls_sd").get<double>();
      r.prompt_chars_mean = j.at("prompt_chars_mean").get<double>();
      r.completion_chars_mean = j.at("completion_chars_mean").get<double>();
      report.rows.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad summary: ") + e.what());
  }
}

std::string timing_to_json(const AggregateReport& report) {
  ordered_json doc = ordered_json::array();
  for (const auto& r : report.rows) {
    doc.push_back({{"task", r.task},
                   {"strategy", r.strategy},
                   {"wall_median_ms", r.wall_median_ms},
                   {"wall_q1_ms", r.wall_q1_ms},
                   {"wall_q3_ms", r.wall_q3_ms}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace bimanual
