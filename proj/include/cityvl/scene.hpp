#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cityvl/geometry.hpp"

namespace cityvl {

using ObjectId = std::uint64_t;

// Optional per-point color, preserved for BEV rendering only.
struct PointColor {
  std::uint8_t r = 0, g = 0, b = 0;
};

// One segmented urban object. Centroid and bbox are computed once at
// construction; instances are immutable afterwards.
class ObjectInstance {
 public:
  ObjectInstance(ObjectId id, std::string category, std::vector<Point3> points,
                 std::optional<std::string> landmark = std::nullopt,
                 std::vector<PointColor> colors = {});

  ObjectId id() const { return id_; }
  const std::string& category() const { return category_; }
  const std::vector<Point3>& points() const { return points_; }
  const Point3& centroid() const { return centroid_; }
  const Bbox3& bbox() const { return bbox_; }
  const std::optional<std::string>& landmark() const { return landmark_; }
  // Empty when the source file carried no color columns.
  const std::vector<PointColor>& colors() const { return colors_; }

 private:
  ObjectId id_;
  std::string category_;
  std::vector<Point3> points_;
  std::vector<PointColor> colors_;
  Point3 centroid_;
  Bbox3 bbox_;
  std::optional<std::string> landmark_;
};

Point3 object_centroid(const ObjectInstance& obj);

// Immutable after construction; safe for concurrent reads.
class CityScene {
 public:
  CityScene(std::string scene_id, std::vector<ObjectInstance> objects);

  const std::string& scene_id() const { return scene_id_; }
  const std::vector<ObjectInstance>& objects() const { return objects_; }
  const Bbox3& extent() const { return extent_; }
  std::size_t size() const { return objects_.size(); }

  bool has_object(ObjectId id) const { return index_.count(id) != 0; }
  // Throws UnknownObject.
  const ObjectInstance& object(ObjectId id) const;

  std::vector<const ObjectInstance*> landmark_objects() const;

 private:
  std::string scene_id_;
  std::vector<ObjectInstance> objects_;
  std::unordered_map<ObjectId, std::size_t> index_;
  Bbox3 extent_;
};

// Line-oriented scene schema:
//   scene <scene_id>
//   object <id> <category>
//   landmark <name>            (optional, at most one per object)
//   p <x> <y> <z> [r g b]      (one or more per object)
// Blank lines and lines starting with '#' are ignored on load; the canonical
// writer never emits them and prints coordinates with 6 decimals.
CityScene load_scene(const std::filesystem::path& path);
CityScene parse_scene(std::istream& in, const std::string& origin);
void save_scene(const CityScene& scene, const std::filesystem::path& path);
std::string scene_to_string(const CityScene& scene);

}  // namespace cityvl
