#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cityvl/scene.hpp"

namespace cityvl {

// Eight 45-degree compass sectors, clockwise from north.
enum class Octant : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

const std::string& octant_abbrev(Octant o);  // "N", "NE", ...
const std::string& octant_word(Octant o);    // "north", "northeast", ...
Octant octant_opposite(Octant o);

// Delta p = neighbor centroid - target centroid, meters.
struct RelOffset {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

enum class DistanceMode { k3d, horizontal };

double pairwise_distance(const Point3& a, const Point3& b, DistanceMode mode);

// Bearing of `subject` as seen from `reference`: theta = atan2(dx, dy), zero
// at north, clockwise positive. A bearing on an exact sector boundary rounds
// toward the clockwise-next octant. Throws CoLocated when dx = dy = 0.
Octant compass_octant(const Point3& reference, const Point3& subject);

RelOffset relative_position(const ObjectInstance& target,
                            const ObjectInstance& neighbor);

// The k non-target objects nearest `target_id` under 3D centroid Euclidean
// distance, ascending, ties broken by ascending id. Brute-force reference
// implementation; the grid index below must agree with it exactly.
std::vector<ObjectId> knn_neighbors(const CityScene& scene, ObjectId target_id,
                                    std::size_t k);

// Uniform-grid acceleration structure over object centroids. Query results
// are defined to be identical to knn_neighbors, including the tie rule.
class GridIndex {
 public:
  explicit GridIndex(const CityScene& scene, double cell_size = 0.0);

  std::vector<ObjectId> knn(ObjectId target_id, std::size_t k) const;

 private:
  struct Cell {
    std::vector<std::uint32_t> members;  // indices into scene objects
  };

  const CityScene* scene_;
  double cell_ = 1.0;
  Point3 origin_;
  std::int64_t nx_ = 1, ny_ = 1, nz_ = 1;
  std::vector<Cell> cells_;

  std::size_t cell_index(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;
  void cell_of(const Point3& p, std::int64_t& cx, std::int64_t& cy,
               std::int64_t& cz) const;
};

// Neighborhoods of every object, OpenMP-parallel over targets. Row i holds
// knn for scene.objects()[i]; bit-identical to the serial per-object calls.
std::vector<std::vector<ObjectId>> knn_all(const CityScene& scene,
                                           std::size_t k);

}  // namespace cityvl
