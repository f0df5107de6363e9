#include "cityvl/text_attrs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cityvl/errors.hpp"
#include "cityvl/spatial.hpp"

namespace cityvl {

namespace {

// The versioned template table. Golden files key off these exact strings, so
// any wording change must bump the serializer goldens as well.
constexpr const char* kObjectTemplate = "{name} ({category}, located at [{x}, {y}, {z}]m)";
constexpr const char* kRelationTemplate =
    "{a} is approximately {d} meters from {b}, located to the {octant} of {b_short}.";
constexpr const char* kCoLocatedTemplate = "{a} is co-located with {b}.";
constexpr const char* kContainTemplate = "{a} lies within the footprint of {b}.";
constexpr const char* kSceneHeaderTemplate =
    "Scene {id} contains {n} objects: {histogram}.";

std::string replace_all(std::string text, const std::string& key,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string short_phrase(const ObjectInstance& obj) {
  if (obj.landmark()) return *obj.landmark();
  return "object #" + std::to_string(obj.id());
}

}  // namespace

std::string format_meters(double v) {
  long long scaled = std::llround(v * 10.0);  // half away from zero
  bool neg = scaled < 0;
  unsigned long long mag = neg ? -(unsigned long long)scaled : scaled;
  std::string s = (neg && mag != 0 ? "-" : "");
  s += std::to_string(mag / 10) + "." + std::to_string(mag % 10);
  return s;
}

AttributeText serialize_object(const ObjectInstance& obj) {
  const Point3& c = obj.centroid();
  std::string text = kObjectTemplate;
  text = replace_all(text, "{name}", short_phrase(obj));
  text = replace_all(text, "{category}", obj.category());
  text = replace_all(text, "{x}", format_meters(c.x));
  text = replace_all(text, "{y}", format_meters(c.y));
  text = replace_all(text, "{z}", format_meters(c.z));
  return {AttributeKind::object, text, {obj.id()}};
}

AttributeText serialize_relation(const ObjectInstance& a,
                                 const ObjectInstance& b) {
  if (a.id() == b.id()) throw Error("serialize_relation needs two objects");
  const std::string a_phrase = serialize_object(a).text;
  const std::string b_phrase = serialize_object(b).text;
  const double d = pairwise_distance(a.centroid(), b.centroid(),
                                     DistanceMode::horizontal);
  std::string text;
  if (a.centroid().x == b.centroid().x && a.centroid().y == b.centroid().y) {
    text = kCoLocatedTemplate;
    text = replace_all(text, "{a}", a_phrase);
    text = replace_all(text, "{b}", b_phrase);
  } else {
    const Octant oct = compass_octant(b.centroid(), a.centroid());
    text = kRelationTemplate;
    text = replace_all(text, "{a}", a_phrase);
    text = replace_all(text, "{d}", format_meters(d));
    text = replace_all(text, "{b}", b_phrase);
    text = replace_all(text, "{octant}", octant_word(oct));
    text = replace_all(text, "{b_short}", short_phrase(b));
  }
  return {AttributeKind::relation, text, {a.id(), b.id()}};
}

AttributeText serialize_scene(const CityScene& scene, const SceneGraph& graph,
                              std::size_t max_relations) {
  // Category histogram in alphabetical order.
  std::map<std::string, std::size_t> hist;
  for (const auto& obj : scene.objects()) ++hist[obj.category()];
  std::string histogram;
  for (const auto& [cat, n] : hist) {
    if (!histogram.empty()) histogram += ", ";
    histogram += std::to_string(n) + " " + cat;
  }

  std::string text = kSceneHeaderTemplate;
  text = replace_all(text, "{id}", scene.scene_id());
  text = replace_all(text, "{n}", std::to_string(scene.size()));
  text = replace_all(text, "{histogram}", histogram);

  std::vector<ObjectId> refs;

  // Landmark lines, ascending id.
  std::vector<const ObjectInstance*> named = scene.landmark_objects();
  std::sort(named.begin(), named.end(),
            [](const ObjectInstance* x, const ObjectInstance* y) {
              return x->id() < y->id();
            });
  for (const ObjectInstance* obj : named) {
    text += "\n" + serialize_object(*obj).text;
    refs.push_back(obj->id());
  }

  // Shortest adjacency relations first; (source, target) breaks ties.
  std::vector<const SceneEdge*> adj = graph.edges_of_kind(RelationKind::adjacency);
  std::sort(adj.begin(), adj.end(), [](const SceneEdge* x, const SceneEdge* y) {
    const double dx = x->distance.value_or(0.0);
    const double dy = y->distance.value_or(0.0);
    if (dx != dy) return dx < dy;
    if (x->source != y->source) return x->source < y->source;
    return x->target < y->target;
  });
  std::size_t emitted = 0;
  for (const SceneEdge* e : adj) {
    if (emitted == max_relations) break;
    text += "\n" +
            serialize_relation(scene.object(e->source), scene.object(e->target))
                .text;
    refs.push_back(e->source);
    refs.push_back(e->target);
    ++emitted;
  }

  for (const SceneEdge* e : graph.edges_of_kind(RelationKind::containment)) {
    if (emitted == max_relations) break;
    std::string line = kContainTemplate;
    line = replace_all(line, "{a}", short_phrase(scene.object(e->target)));
    line = replace_all(line, "{b}", short_phrase(scene.object(e->source)));
    text += "\n" + line;
    refs.push_back(e->source);
    refs.push_back(e->target);
    ++emitted;
  }

  return {AttributeKind::scene, text, refs};
}

ParsedObjectPhrase parse_object_phrase(const std::string& text) {
  // <name> (<category>, located at [<x>, <y>, <z>]m)
  const std::string marker = ", located at [";
  auto mark = text.find(marker);
  // Landmarks may themselves contain " (", so bind to the last opener before
  // the coordinate marker.
  auto open = mark == std::string::npos ? std::string::npos
                                        : text.rfind(" (", mark);
  if (open == std::string::npos || mark == std::string::npos || mark < open)
    throw Error("unparseable object phrase: " + text);
  auto close = text.find("]m)", mark);
  if (close == std::string::npos)
    throw Error("unparseable object phrase: " + text);

  ParsedObjectPhrase out;
  const std::string name = text.substr(0, open);
  if (name.rfind("object #", 0) == 0) {
    out.id = std::stoull(name.substr(8));
  } else {
    out.landmark = name;
  }
  out.category = text.substr(open + 2, mark - open - 2);

  std::string coords = text.substr(mark + marker.size(), close - mark - marker.size());
  double vals[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    auto comma = coords.find(", ", pos);
    std::string tok = comma == std::string::npos ? coords.substr(pos)
                                                 : coords.substr(pos, comma - pos);
    vals[i] = std::stod(tok);
    pos = comma == std::string::npos ? coords.size() : comma + 2;
  }
  out.x = vals[0];
  out.y = vals[1];
  out.z = vals[2];
  return out;
}

}  // namespace cityvl
