#include "cityvl/spatial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cityvl/errors.hpp"

namespace cityvl {

namespace {

const std::array<std::string, 8> kAbbrev = {"N", "NE", "E",  "SE",
                                            "S", "SW", "W", "NW"};
const std::array<std::string, 8> kWord = {
    "north",      "northeast", "east",      "southeast",
    "south",      "southwest", "west",      "northwest"};

constexpr double kPi = 3.14159265358979323846;

double sq(double v) { return v * v; }

double sq_dist3(const Point3& a, const Point3& b) {
  return sq(a.x - b.x) + sq(a.y - b.y) + sq(a.z - b.z);
}

// Shared comparator for every knn route: (squared distance, id) ascending.
struct Candidate {
  double d2;
  ObjectId id;
  bool operator<(const Candidate& o) const {
    if (d2 != o.d2) return d2 < o.d2;
    return id < o.id;
  }
};

}  // namespace

const std::string& octant_abbrev(Octant o) {
  return kAbbrev[static_cast<std::size_t>(o)];
}

const std::string& octant_word(Octant o) {
  return kWord[static_cast<std::size_t>(o)];
}

Octant octant_opposite(Octant o) {
  return static_cast<Octant>((static_cast<std::size_t>(o) + 4) % 8);
}

double pairwise_distance(const Point3& a, const Point3& b, DistanceMode mode) {
  if (!a.finite() || !b.finite()) throw Error("non-finite point");
  double s = sq(a.x - b.x) + sq(a.y - b.y);
  if (mode == DistanceMode::k3d) s += sq(a.z - b.z);
  return std::sqrt(s);
}

Octant compass_octant(const Point3& reference, const Point3& subject) {
  const double dx = subject.x - reference.x;
  const double dy = subject.y - reference.y;
  if (dx == 0.0 && dy == 0.0) throw CoLocated();
  double theta = std::atan2(dx, dy) * 180.0 / kPi;  // 0 = north, cw positive
  if (theta < 0.0) theta += 360.0;
  // floor((theta + 22.5)/45) sends exact 22.5-multiples to the clockwise-next
  // sector.
  auto idx = static_cast<std::int64_t>(std::floor((theta + 22.5) / 45.0)) % 8;
  return static_cast<Octant>(idx);
}

RelOffset relative_position(const ObjectInstance& target,
                            const ObjectInstance& neighbor) {
  const Point3 d = neighbor.centroid() - target.centroid();
  return {d.x, d.y, d.z};
}

std::vector<ObjectId> knn_neighbors(const CityScene& scene, ObjectId target_id,
                                    std::size_t k) {
  const ObjectInstance& target = scene.object(target_id);
  std::vector<Candidate> cands;
  cands.reserve(scene.size());
  for (const auto& obj : scene.objects()) {
    if (obj.id() == target_id) continue;
    cands.push_back({sq_dist3(obj.centroid(), target.centroid()), obj.id()});
  }
  std::sort(cands.begin(), cands.end());
  if (k < cands.size()) cands.resize(k);
  std::vector<ObjectId> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(c.id);
  return out;
}

GridIndex::GridIndex(const CityScene& scene, double cell_size)
    : scene_(&scene) {
  const Bbox3& e = scene.extent();
  origin_ = e.min;
  double span = std::max({e.max.x - e.min.x, e.max.y - e.min.y,
                          e.max.z - e.min.z, 1e-9});
  if (cell_size <= 0.0) {
    // Aim for a handful of objects per cell at desk scale.
    double n = std::cbrt(static_cast<double>(std::max<std::size_t>(scene.size(), 1)));
    cell_size = std::max(span / std::max(n, 1.0), 1e-6);
  }
  cell_ = cell_size;
  nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor((e.max.x - e.min.x) / cell_)) + 1);
  ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor((e.max.y - e.min.y) / cell_)) + 1);
  nz_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor((e.max.z - e.min.z) / cell_)) + 1);
  cells_.resize(static_cast<std::size_t>(nx_ * ny_ * nz_));
  for (std::uint32_t i = 0; i < scene.size(); ++i) {
    std::int64_t cx, cy, cz;
    cell_of(scene.objects()[i].centroid(), cx, cy, cz);
    cells_[cell_index(cx, cy, cz)].members.push_back(i);
  }
}

std::size_t GridIndex::cell_index(std::int64_t cx, std::int64_t cy,
                                  std::int64_t cz) const {
  return static_cast<std::size_t>((cz * ny_ + cy) * nx_ + cx);
}

void GridIndex::cell_of(const Point3& p, std::int64_t& cx, std::int64_t& cy,
                        std::int64_t& cz) const {
  auto clampc = [](std::int64_t v, std::int64_t n) {
    return std::clamp<std::int64_t>(v, 0, n - 1);
  };
  cx = clampc(static_cast<std::int64_t>(std::floor((p.x - origin_.x) / cell_)), nx_);
  cy = clampc(static_cast<std::int64_t>(std::floor((p.y - origin_.y) / cell_)), ny_);
  cz = clampc(static_cast<std::int64_t>(std::floor((p.z - origin_.z) / cell_)), nz_);
}

std::vector<ObjectId> GridIndex::knn(ObjectId target_id, std::size_t k) const {
  const CityScene& scene = *scene_;
  const ObjectInstance& target = scene.object(target_id);
  const std::size_t want = std::min(k, scene.size() - 1);
  if (want == 0) {
    scene.object(target_id);  // still validate
    return {};
  }

  std::int64_t tcx, tcy, tcz;
  cell_of(target.centroid(), tcx, tcy, tcz);

  std::vector<Candidate> cands;
  cands.reserve(want * 2);

  // Expand cell rings until the k-th candidate is provably closer than any
  // centroid outside the scanned shell.
  const std::int64_t max_ring = std::max({nx_, ny_, nz_});
  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    for (std::int64_t cz = tcz - ring; cz <= tcz + ring; ++cz) {
      if (cz < 0 || cz >= nz_) continue;
      for (std::int64_t cy = tcy - ring; cy <= tcy + ring; ++cy) {
        if (cy < 0 || cy >= ny_) continue;
        for (std::int64_t cx = tcx - ring; cx <= tcx + ring; ++cx) {
          if (cx < 0 || cx >= nx_) continue;
          // Only the shell of the current ring.
          if (std::max({std::llabs(cx - tcx), std::llabs(cy - tcy),
                        std::llabs(cz - tcz)}) != ring)
            continue;
          for (std::uint32_t mi : cells_[cell_index(cx, cy, cz)].members) {
            const ObjectInstance& obj = scene.objects()[mi];
            if (obj.id() == target_id) continue;
            cands.push_back(
                {sq_dist3(obj.centroid(), target.centroid()), obj.id()});
          }
        }
      }
    }
    if (cands.size() >= want) {
      std::sort(cands.begin(), cands.end());
      // Everything beyond the scanned shell is at least `ring * cell_` away.
      // Strict comparison: an unscanned object at exactly that distance could
      // still win a tie on id.
      const double safe = static_cast<double>(ring) * cell_;
      if (cands[want - 1].d2 < safe * safe) break;
    }
  }

  std::sort(cands.begin(), cands.end());
  cands.resize(std::min(cands.size(), want));
  std::vector<ObjectId> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(c.id);
  return out;
}

std::vector<std::vector<ObjectId>> knn_all(const CityScene& scene,
                                           std::size_t k) {
  const auto n = static_cast<std::int64_t>(scene.size());
  std::vector<std::vector<ObjectId>> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        knn_neighbors(scene, scene.objects()[static_cast<std::size_t>(i)].id(), k);
  }
  return out;
}

}  // namespace cityvl
