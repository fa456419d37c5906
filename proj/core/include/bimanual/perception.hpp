#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bimanual/action_codec.hpp"
#include "bimanual/observation.hpp"

namespace bimanual {

/// Points of one object as seen by one camera, world frame, meters.
struct MaskedCloud {
  std::string camera_id;
  std::string object_name;
  std::vector<Vec3> points;
};

enum class ExtractionStrategy {
  kStandard,  // mean of per-camera centroids
  kConcat,    // centroid of all points pooled
  kPrune,     // pooled, voxel-grid downsampled, then centroid
};

std::string to_string(ExtractionStrategy s);
ExtractionStrategy extraction_strategy_from_string(const std::string& name);

inline constexpr double kDefaultPruneVoxelSize = 0.02;

/// Fuses the clouds of one object into a single centroid. Throws EmptyObject
/// when no cloud has a point.
Vec3 extract_centroid(const std::vector<MaskedCloud>& clouds, ExtractionStrategy strategy,
                      double voxel_size = kDefaultPruneVoxelSize);

/// One representative (cell mean) per occupied voxel of edge `voxel_size`.
/// Cells are anchored at the world origin. Output is ordered by cell key.
std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel_size);

using ObjectClouds = std::vector<std::pair<std::string, std::vector<MaskedCloud>>>;

/// Voxelized centroid per object, in input order. EmptyObject and
/// OutOfWorkspace are rethrown with the object name prefixed.
Observation build_observation(const ObjectClouds& object_clouds, ExtractionStrategy strategy,
                              const WorkspaceBounds& bounds = {},
                              double voxel_size = kDefaultPruneVoxelSize);

/// Euclidean distance in centimeters.
double centroid_error(const Vec3& estimated, const Vec3& ground_truth);

/// Reads `camera_id object_name x y z` records; '#' starts a comment. Objects
/// and cameras keep first-appearance order. Throws DatasetError on bad lines.
ObjectClouds read_cloud_fixture(std::istream& in);
void write_cloud_fixture(std::ostream& out, const ObjectClouds& clouds);

/// Synthetic multi-camera view of an axis-aligned box.
///
/// Three cameras with deliberately unbalanced coverage: a dense camera on the
/// (-x, -y, +z) faces, a sparse camera on the (+x, +y, -z) faces, and a
/// very sparse camera that only sees a small patch near the (+x, +y, +z)
/// corner. Every point gets isotropic Gaussian noise.
struct BoxCameraRig {
  int dense_points = 1200;
  int sparse_points = 240;
  int patch_points = 12;
  /// Patch edge as a fraction of the box face.
  double patch_fraction = 0.2;
  double noise_sigma = 0.005;
};

std::vector<MaskedCloud> synthetic_box_clouds(const std::string& object_name, const Vec3& center,
                                              const Vec3& size, std::mt19937_64& rng,
                                              const BoxCameraRig& rig = {});

}  // namespace bimanual
