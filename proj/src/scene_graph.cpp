#include "cityvl/scene_graph.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <queue>

#include <json.hpp>

#include "cityvl/errors.hpp"

namespace cityvl {

namespace {
const std::array<std::string, 3> kKindNames = {"adjacency", "containment",
                                               "orientation"};
}

const std::string& relation_kind_name(RelationKind k) {
  return kKindNames[static_cast<std::size_t>(k)];
}

SceneGraph::SceneGraph(std::vector<ObjectId> nodes,
                       std::vector<SceneEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (const auto& e : edges_) {
    if (e.source == e.target) throw Error("self-edge in scene graph");
    bool src_ok = std::find(nodes_.begin(), nodes_.end(), e.source) != nodes_.end();
    bool dst_ok = std::find(nodes_.begin(), nodes_.end(), e.target) != nodes_.end();
    if (!src_ok || !dst_ok) throw Error("edge endpoint is not a node");
  }
}

bool SceneGraph::adjacent(ObjectId a, ObjectId b) const {
  const ObjectId lo = std::min(a, b), hi = std::max(a, b);
  for (const auto& e : edges_)
    if (e.kind == RelationKind::adjacency && e.source == lo && e.target == hi)
      return true;
  return false;
}

std::vector<const SceneEdge*> SceneGraph::edges_of_kind(RelationKind k) const {
  std::vector<const SceneEdge*> out;
  for (const auto& e : edges_)
    if (e.kind == k) out.push_back(&e);
  return out;
}

std::vector<ObjectId> SceneGraph::containment_topological_order() const {
  std::map<ObjectId, std::vector<ObjectId>> adj;
  std::map<ObjectId, std::size_t> indeg;
  for (ObjectId n : nodes_) indeg[n] = 0;
  for (const auto& e : edges_) {
    if (e.kind != RelationKind::containment) continue;
    adj[e.source].push_back(e.target);
    ++indeg[e.target];
  }
  std::priority_queue<ObjectId, std::vector<ObjectId>, std::greater<>> ready;
  for (const auto& [n, d] : indeg)
    if (d == 0) ready.push(n);
  std::vector<ObjectId> order;
  while (!ready.empty()) {
    ObjectId n = ready.top();
    ready.pop();
    order.push_back(n);
    for (ObjectId m : adj[n])
      if (--indeg[m] == 0) ready.push(m);
  }
  if (order.size() != nodes_.size())
    throw Error("containment relation contains a cycle");
  return order;
}

SceneGraph build_scene_graph(const CityScene& scene, double adjacency_radius) {
  if (adjacency_radius <= 0.0)
    throw Error("adjacency_radius must be positive");

  std::vector<ObjectId> nodes;
  nodes.reserve(scene.size());
  for (const auto& obj : scene.objects()) nodes.push_back(obj.id());
  std::sort(nodes.begin(), nodes.end());

  std::vector<SceneEdge> edges;
  const auto& objs = scene.objects();
  for (std::size_t i = 0; i < objs.size(); ++i) {
    for (std::size_t j = 0; j < objs.size(); ++j) {
      if (i == j) continue;
      const ObjectInstance& a = objs[i];
      const ObjectInstance& b = objs[j];
      if (a.id() < b.id()) {
        const double d = pairwise_distance(a.centroid(), b.centroid(),
                                           DistanceMode::horizontal);
        if (d <= adjacency_radius) {
          SceneEdge e;
          e.source = a.id();
          e.target = b.id();
          e.kind = RelationKind::adjacency;
          e.distance = d;
          if (d > 0.0) e.octant = compass_octant(a.centroid(), b.centroid());
          edges.push_back(e);
        }
      }
      if (a.bbox().footprint_strictly_contains(b.bbox())) {
        SceneEdge e;
        e.source = a.id();  // container
        e.target = b.id();  // contained
        e.kind = RelationKind::containment;
        edges.push_back(e);
      }
    }
  }

  std::sort(edges.begin(), edges.end(), [](const SceneEdge& x, const SceneEdge& y) {
    if (x.source != y.source) return x.source < y.source;
    if (x.target != y.target) return x.target < y.target;
    return static_cast<int>(x.kind) < static_cast<int>(y.kind);
  });

  return SceneGraph(std::move(nodes), std::move(edges));
}

std::string scene_graph_to_json(const SceneGraph& graph) {
  nlohmann::json j;
  j["nodes"] = graph.nodes();
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    nlohmann::json je;
    je["source"] = e.source;
    je["target"] = e.target;
    je["kind"] = relation_kind_name(e.kind);
    if (e.distance) je["distance"] = *e.distance;
    if (e.octant) je["octant"] = octant_abbrev(*e.octant);
    edges.push_back(je);
  }
  return j.dump(2) + "\n";
}

}  // namespace cityvl
