#include "bimanual/oracle_backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "bimanual/judge.hpp"
#include "bimanual/random.hpp"

namespace bimanual {
namespace {

std::optional<std::size_t> noisy_block(const std::string& system, int width, Arm noise_arm) {
  if (width == kBimanualArity) return noise_arm == Arm::kRight ? 0 : 1;
  const std::string label = "You are the " + to_string(noise_arm) + " arm";
  if (system.rfind(label, 0) == 0) return 0;
  return std::nullopt;
}

std::uint64_t noise_key(std::uint64_t seed, const std::string& system, const ParsedPrompt& prompt) {
  std::uint64_t h = fnv1a(system);
  for (const auto& d : prompt.demos) {
    h = fnv1a(serialize_observation(d.observation.objects_only()), h);
    h = fnv1a(render_rows(d.actions), h);
  }
  h = fnv1a(serialize_observation(prompt.test_observation.objects_only()), h);
  return mix_seed(seed, h);
}

std::string answer_judge(const std::string& user) {
  ParsedJudgePrompt parsed;
  try {
    parsed = parse_judge_prompt(user);
  } catch (const CompletionError& e) {
    throw OracleParseError(std::string("unrecognized validator prompt: ") + e.what());
  }
  std::vector<Demonstration> demos;
  BimanualTrajectory plan;
  try {
    for (const auto& ex : parsed.demos) {
      Demonstration d{ex.observation, {}};
      for (const auto& row : ex.actions) d.actions.push_back(BimanualAction::from_span(row));
      demos.push_back(std::move(d));
    }
    for (const auto& row : parsed.candidate) plan.push_back(BimanualAction::from_span(row));
  } catch (const RangeError& e) {
    throw OracleParseError(std::string("validator prompt holds invalid actions: ") + e.what());
  }
  return verdict_to_json(rubric_verdict(plan, demos, parsed.candidate_observation));
}

}  // namespace

VoxelIndex mean_object_offset(const Observation& test, const Observation& demo) {
  long sum[3] = {0, 0, 0};
  long n = 0;
  for (const auto& [name, v] : test.entries()) {
    const VoxelIndex* d = demo.find(name);
    if (!d) continue;
    for (int i = 0; i < 3; ++i) sum[i] += v[i] - (*d)[i];
    ++n;
  }
  VoxelIndex out{0, 0, 0};
  if (n == 0) return out;
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<int>(std::lround(static_cast<double>(sum[i]) / static_cast<double>(n)));
  }
  return out;
}

std::vector<std::vector<int>> oracle_nearest_demo(const ParsedPrompt& prompt) {
  if (prompt.demos.empty()) throw OracleParseError("prompt has no demonstrations");
  std::size_t best = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < prompt.demos.size(); ++i) {
    const int d = l1_distance(prompt.test_observation, prompt.demos[i].observation);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  const auto& demo = prompt.demos[best];
  const VoxelIndex offset = mean_object_offset(prompt.test_observation, demo.observation);
  std::vector<std::vector<int>> rows = demo.actions;
  for (auto& row : rows) {
    for (std::size_t base = 0; base + 3 <= row.size(); base += kArmArity) {
      for (int i = 0; i < 3; ++i) row[base + i] = std::clamp(row[base + i] + offset[i], 0, kMaxVoxel);
    }
  }
  return rows;
}

std::string OracleBackend::complete(const ChatRequest& req) {
  if (req.system == judge_system_prompt()) return answer_judge(req.user);

  ParsedPrompt prompt;
  try {
    prompt = parse_icl_prompt(req.user);
  } catch (const Error& e) {
    throw OracleParseError(std::string("unrecognized prompt: ") + e.what());
  }
  auto rows = oracle_nearest_demo(prompt);

  if (options_.noise_voxels > 0 && !rows.empty()) {
    const int width = static_cast<int>(rows.front().size());
    if (auto block = noisy_block(req.system, width, options_.noise_arm)) {
      std::mt19937_64 rng(noise_key(options_.seed, req.system, prompt));
      const auto span = static_cast<std::uint64_t>(2 * options_.noise_voxels + 1);
      for (auto& row : rows) {
        const std::size_t base = *block * kArmArity;
        if (base + 3 > row.size()) continue;
        for (int i = 0; i < 3; ++i) {
          const int jitter = static_cast<int>(uniform_index(rng, span)) - options_.noise_voxels;
          row[base + i] = std::clamp(row[base + i] + jitter, 0, kMaxVoxel);
        }
      }
    }
  }
  return render_rows(rows);
}

}  // namespace bimanual
