#include "bimanual/perception.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "bimanual/errors.hpp"
#include "bimanual/random.hpp"

namespace bimanual {
namespace {

Vec3 mean_of(const std::vector<Vec3>& points) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

std::vector<Vec3> pooled(const std::vector<MaskedCloud>& clouds) {
  std::vector<Vec3> all;
  for (const auto& c : clouds) all.insert(all.end(), c.points.begin(), c.points.end());
  return all;
}

// Per-camera point sets, merging clouds that share a camera id.
std::vector<std::vector<Vec3>> by_camera(const std::vector<MaskedCloud>& clouds) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Vec3>> groups;
  for (const auto& c : clouds) {
    auto [it, inserted] = groups.try_emplace(c.camera_id);
    if (inserted) order.push_back(c.camera_id);
    it->second.insert(it->second.end(), c.points.begin(), c.points.end());
  }
  std::vector<std::vector<Vec3>> out;
  for (const auto& id : order) {
    if (!groups[id].empty()) out.push_back(std::move(groups[id]));
  }
  return out;
}

}  // namespace

std::string to_string(ExtractionStrategy s) {
  switch (s) {
    case ExtractionStrategy::kStandard: return "standard";
    case ExtractionStrategy::kConcat: return "concat";
    case ExtractionStrategy::kPrune: return "prune";
  }
  return "prune";
}

ExtractionStrategy extraction_strategy_from_string(const std::string& name) {
  if (name == "standard") return ExtractionStrategy::kStandard;
  if (name == "concat") return ExtractionStrategy::kConcat;
  if (name == "prune") return ExtractionStrategy::kPrune;
  throw ConfigError("unknown extraction strategy '" + name + "'");
}

std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel_size) {
  if (!(voxel_size > 0.0)) throw RangeError("voxel size must be positive");
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::pair<Vec3, int>> cells;
  for (const auto& p : points) {
    Key key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    auto& [sum, count] = cells.try_emplace(key, Vec3::Zero(), 0).first->second;
    sum += p;
    ++count;
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [key, cell] : cells) out.push_back(cell.first / cell.second);
  return out;
}

Vec3 extract_centroid(const std::vector<MaskedCloud>& clouds, ExtractionStrategy strategy,
                      double voxel_size) {
  std::vector<Vec3> all = pooled(clouds);
  if (all.empty()) throw EmptyObject("no points in any camera");
  for (const auto& p : all) {
    if (!p.allFinite()) throw RangeError("non-finite point in masked cloud");
  }
  switch (strategy) {
    case ExtractionStrategy::kStandard: {
      Vec3 sum = Vec3::Zero();
      auto cameras = by_camera(clouds);
      for (const auto& pts : cameras) sum += mean_of(pts);
      return sum / static_cast<double>(cameras.size());
    }
    case ExtractionStrategy::kConcat:
      return mean_of(all);
    case ExtractionStrategy::kPrune:
      return mean_of(voxel_downsample(all, voxel_size));
  }
  return mean_of(all);
}

Observation build_observation(const ObjectClouds& object_clouds, ExtractionStrategy strategy,
                              const WorkspaceBounds& bounds, double voxel_size) {
  Observation obs;
  for (const auto& [name, clouds] : object_clouds) {
    try {
      obs.add(name, voxelize(extract_centroid(clouds, strategy, voxel_size), bounds));
    } catch (const EmptyObject& e) {
      throw EmptyObject("object '" + name + "': " + e.what());
    } catch (const OutOfWorkspace& e) {
      throw OutOfWorkspace("object '" + name + "': " + e.what());
    }
  }
  return obs;
}

double centroid_error(const Vec3& estimated, const Vec3& ground_truth) {
  return (estimated - ground_truth).norm() * 100.0;
}

ObjectClouds read_cloud_fixture(std::istream& in) {
  ObjectClouds out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string camera, object;
    if (!(ls >> camera)) continue;  // blank or comment-only
    Vec3 p;
    if (!(ls >> object >> p.x() >> p.y() >> p.z())) {
      throw DatasetError("cloud fixture line " + std::to_string(line_no) +
                         ": expected 'camera_id object_name x y z'");
    }
    std::string extra;
    if (ls >> extra) {
      throw DatasetError("cloud fixture line " + std::to_string(line_no) + ": trailing data");
    }
    if (!p.allFinite()) {
      throw DatasetError("cloud fixture line " + std::to_string(line_no) + ": non-finite point");
    }
    auto obj = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == object; });
    if (obj == out.end()) {
      out.emplace_back(object, std::vector<MaskedCloud>{});
      obj = std::prev(out.end());
    }
    auto& clouds = obj->second;
    auto cam = std::find_if(clouds.begin(), clouds.end(),
                            [&](const MaskedCloud& c) { return c.camera_id == camera; });
    if (cam == clouds.end()) {
      clouds.push_back({camera, object, {}});
      cam = std::prev(clouds.end());
    }
    cam->points.push_back(p);
  }
  return out;
}

void write_cloud_fixture(std::ostream& out, const ObjectClouds& clouds) {
  out << "# camera_id object_name x y z\n" << std::setprecision(17);
  for (const auto& [name, per_camera] : clouds) {
    for (const auto& cloud : per_camera) {
      for (const auto& p : cloud.points) {
        out << cloud.camera_id << ' ' << name << ' ' << p.x() << ' ' << p.y() << ' ' << p.z()
            << '\n';
      }
    }
  }
}

std::vector<MaskedCloud> synthetic_box_clouds(const std::string& object_name, const Vec3& center,
                                              const Vec3& size, std::mt19937_64& rng,
                                              const BoxCameraRig& rig) {
  const Vec3 half = size / 2.0;

  // Face given by its normal axis and sign; `lo`/`hi` restrict the two
  // in-plane coordinates as fractions of the face in [0, 1].
  struct Face {
    int axis;
    int sign;
    double lo = 0.0;
    double hi = 1.0;
  };
  auto face_area = [&](const Face& f) {
    double area = 1.0;
    for (int i = 0; i < 3; ++i) {
      if (i != f.axis) area *= size[i] * (f.hi - f.lo);
    }
    return area;
  };
  auto sample = [&](const std::vector<Face>& faces, int n, const std::string& camera) {
    MaskedCloud cloud{camera, object_name, {}};
    double total = 0.0;
    for (const auto& f : faces) total += face_area(f);
    for (int k = 0; k < n; ++k) {
      // Area-weighted face choice, then a uniform point on that face.
      double pick = uniform01(rng) * total;
      const Face* face = &faces.back();
      for (const auto& f : faces) {
        if (pick < face_area(f)) {
          face = &f;
          break;
        }
        pick -= face_area(f);
      }
      Vec3 p;
      for (int i = 0; i < 3; ++i) {
        if (i == face->axis) {
          p[i] = center[i] + face->sign * half[i];
        } else {
          const double t = uniform_real(rng, face->lo, face->hi);
          p[i] = center[i] - half[i] + t * size[i];
        }
        p[i] += rig.noise_sigma * standard_normal(rng);
      }
      cloud.points.push_back(p);
    }
    return cloud;
  };

  std::vector<MaskedCloud> clouds;
  clouds.push_back(sample({{0, -1}, {1, -1}, {2, +1}}, rig.dense_points, "cam_dense"));
  clouds.push_back(sample({{0, +1}, {1, +1}, {2, -1}}, rig.sparse_points, "cam_sparse"));
  clouds.push_back(
      sample({{0, +1, 1.0 - rig.patch_fraction, 1.0}}, rig.patch_points, "cam_patch"));
  return clouds;
}

}  // namespace bimanual
