#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bimanual/llm_gateway.hpp"

namespace bimanual {

class OracleParseError : public Error {
 public:
  using Error::Error;
};

struct OracleOptions {
  std::uint64_t seed = 0;
  /// Uniform integer jitter in [-noise_voxels, noise_voxels] added to every
  /// position coordinate of `noise_arm`'s predicted actions.
  int noise_voxels = 0;
  Arm noise_arm = Arm::kLeft;
};

/// Offline stand-in for the language model.
///
/// ICL prompts are answered by replaying the demo nearest to the test
/// observation (object L1 distance, lowest index on ties), translated by the
/// mean per-object voxel offset and clamped to the grid. Validator prompts are
/// answered with the rubric verdict as JSON. Anything else throws
/// OracleParseError.
///
/// The jitter stream is keyed on (seed, system prompt, demos and test scene
/// with partner entries removed), so a conditioned and an unconditioned
/// prompt for the same arm and scene draw identical noise.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(OracleOptions options = {}) : options_(options) {}
  std::string complete(const ChatRequest& req) override;

  const OracleOptions& options() const { return options_; }

 private:
  OracleOptions options_;
};

/// The nearest-demo policy without noise, on a parsed prompt.
std::vector<std::vector<int>> oracle_nearest_demo(const ParsedPrompt& prompt);

/// Rounded mean of (test - demo) over objects present in both, per axis.
VoxelIndex mean_object_offset(const Observation& test, const Observation& demo);

}  // namespace bimanual
