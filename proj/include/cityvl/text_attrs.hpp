#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cityvl/scene.hpp"
#include "cityvl/scene_graph.hpp"

namespace cityvl {

enum class AttributeKind : std::uint8_t { object, relation, scene };

struct AttributeText {
  AttributeKind kind = AttributeKind::object;
  std::string text;
  std::vector<ObjectId> referenced_ids;
};

// Meters rendered with one decimal place, half-up; the precision every
// template below uses.
std::string format_meters(double v);

// `<Landmark> (<Category>, located at [<x>, <y>, <z>]m)` for named objects,
// `object #<id> (...)` otherwise.
AttributeText serialize_object(const ObjectInstance& obj);

// `<A> is approximately <d> meters from <B>, located to the <octant> of
// <B-short>.` Distance is horizontal; octant is A's bearing as seen from B.
// Co-located centroids fall back to a "co-located with" sentence.
AttributeText serialize_relation(const ObjectInstance& a,
                                 const ObjectInstance& b);

// Header (scene id, object count, category histogram), one line per landmark
// object, then up to max_relations adjacency sentences by ascending distance.
AttributeText serialize_scene(const CityScene& scene, const SceneGraph& graph,
                              std::size_t max_relations);

// Inverse of serialize_object up to the rounding already applied. Landmark is
// empty for unnamed objects (whose id is recovered instead).
struct ParsedObjectPhrase {
  std::optional<std::string> landmark;
  std::optional<ObjectId> id;
  std::string category;
  double x = 0, y = 0, z = 0;
};
ParsedObjectPhrase parse_object_phrase(const std::string& text);

}  // namespace cityvl
