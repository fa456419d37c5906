#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bimanual/action_codec.hpp"

namespace bimanual {

inline constexpr const char* kLeaderArmKey = "leader_arm";
inline constexpr const char* kFollowerArmKey = "follower_arm";

/// Partner-arm trajectory embedded in an observation dictionary.
struct PartnerEntry {
  std::string key;  // kLeaderArmKey or kFollowerArmKey
  ArmTrajectory actions;

  bool operator==(const PartnerEntry&) const = default;
};

/// Ordered mapping object name -> voxel triple, plus an optional partner-arm
/// entry that always serializes last.
class Observation {
 public:
  using Entry = std::pair<std::string, VoxelIndex>;

  Observation() = default;

  /// Appends an object. Throws RangeError on a duplicate name or an
  /// out-of-range voxel.
  void add(std::string name, const VoxelIndex& voxel);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty() && !partner_; }
  const VoxelIndex* find(const std::string& name) const;

  const std::optional<PartnerEntry>& partner() const { return partner_; }
  void set_partner(PartnerEntry partner) { partner_ = std::move(partner); }
  void clear_partner() { partner_.reset(); }

  /// Copy with the partner entry replaced.
  Observation with_partner(std::string key, ArmTrajectory actions) const;
  /// Copy without any partner entry.
  Observation objects_only() const;

  bool operator==(const Observation&) const = default;

 private:
  std::vector<Entry> entries_;
  std::optional<PartnerEntry> partner_;
};

/// Summed L1 voxel distance over object entries (partner entries ignored).
/// An object of `a` missing from `b` costs the maximal per-object distance.
int l1_distance(const Observation& a, const Observation& b);

}  // namespace bimanual
