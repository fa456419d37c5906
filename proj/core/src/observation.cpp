#include "bimanual/observation.hpp"

#include <algorithm>
#include <cstdlib>

#include "bimanual/errors.hpp"

namespace bimanual {

void Observation::add(std::string name, const VoxelIndex& voxel) {
  for (int v : voxel) {
    if (v < 0 || v > kMaxVoxel) {
      throw RangeError("observation voxel for '" + name + "' out of range");
    }
  }
  if (find(name) != nullptr) {
    throw RangeError("duplicate observation entry '" + name + "'");
  }
  entries_.emplace_back(std::move(name), voxel);
}

const VoxelIndex* Observation::find(const std::string& name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& e) { return e.first == name; });
  return it == entries_.end() ? nullptr : &it->second;
}

Observation Observation::with_partner(std::string key, ArmTrajectory actions) const {
  Observation out = objects_only();
  out.partner_ = PartnerEntry{std::move(key), std::move(actions)};
  return out;
}

Observation Observation::objects_only() const {
  Observation out;
  out.entries_ = entries_;
  return out;
}

int l1_distance(const Observation& a, const Observation& b) {
  constexpr int kMissingPenalty = 3 * kMaxVoxel;
  int total = 0;
  for (const auto& [name, va] : a.entries()) {
    const VoxelIndex* vb = b.find(name);
    if (vb == nullptr) {
      total += kMissingPenalty;
      continue;
    }
    for (int i = 0; i < 3; ++i) total += std::abs(va[i] - (*vb)[i]);
  }
  return total;
}

}  // namespace bimanual
