#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cityvl/scene.hpp"
#include "cityvl/spatial.hpp"

namespace cityvl {

enum class RelationKind : std::uint8_t { adjacency, containment, orientation };

const std::string& relation_kind_name(RelationKind k);

// Adjacency edges are stored once, undirected, with source < target; the
// octant attribute is the bearing of `target` as seen from `source`, so the
// orientation relation rides on the adjacency edge. Containment edges point
// container -> contained.
struct SceneEdge {
  ObjectId source = 0;
  ObjectId target = 0;
  RelationKind kind = RelationKind::adjacency;
  std::optional<double> distance;  // horizontal centroid distance, meters
  std::optional<Octant> octant;
};

class SceneGraph {
 public:
  SceneGraph(std::vector<ObjectId> nodes, std::vector<SceneEdge> edges);

  const std::vector<ObjectId>& nodes() const { return nodes_; }
  const std::vector<SceneEdge>& edges() const { return edges_; }

  bool adjacent(ObjectId a, ObjectId b) const;
  std::vector<const SceneEdge*> edges_of_kind(RelationKind k) const;

  // Containment container->contained order; throws if the relation cycles.
  std::vector<ObjectId> containment_topological_order() const;

 private:
  std::vector<ObjectId> nodes_;
  std::vector<SceneEdge> edges_;
};

// Adjacency edge iff horizontal centroid distance <= adjacency_radius;
// containment edge iff one bbox footprint lies strictly inside another's.
// Edges come out canonically ordered by (source, target, kind).
SceneGraph build_scene_graph(const CityScene& scene, double adjacency_radius);

std::string scene_graph_to_json(const SceneGraph& graph);

}  // namespace cityvl
