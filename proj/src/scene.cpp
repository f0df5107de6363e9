#include "cityvl/scene.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cityvl/errors.hpp"

namespace cityvl {

namespace {

std::string trim(std::string_view sv) {
  const char* ws = " \t\r\n";
  auto begin = sv.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  auto end = sv.find_last_not_of(ws);
  return std::string(sv.substr(begin, end - begin + 1));
}

double parse_double(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw SchemaViolation("bad number '" + tok + "'", line);
  }
}

}  // namespace

ObjectInstance::ObjectInstance(ObjectId id, std::string category,
                               std::vector<Point3> points,
                               std::optional<std::string> landmark,
                               std::vector<PointColor> colors)
    : id_(id),
      category_(std::move(category)),
      points_(std::move(points)),
      colors_(std::move(colors)),
      landmark_(std::move(landmark)) {
  if (points_.empty())
    throw Error("object " + std::to_string(id_) + " has no points");
  if (!colors_.empty() && colors_.size() != points_.size())
    throw Error("object " + std::to_string(id_) + " color/point count mismatch");
  if (landmark_ && landmark_->empty())
    throw Error("object " + std::to_string(id_) + " has an empty landmark");
  double sx = 0, sy = 0, sz = 0;
  for (const auto& p : points_) {
    if (!p.finite())
      throw Error("object " + std::to_string(id_) + " has a non-finite point");
    sx += p.x;
    sy += p.y;
    sz += p.z;
    bbox_.expand(p);
  }
  const double n = static_cast<double>(points_.size());
  centroid_ = {sx / n, sy / n, sz / n};
}

Point3 object_centroid(const ObjectInstance& obj) { return obj.centroid(); }

CityScene::CityScene(std::string scene_id, std::vector<ObjectInstance> objects)
    : scene_id_(std::move(scene_id)), objects_(std::move(objects)) {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    auto [it, inserted] = index_.emplace(objects_[i].id(), i);
    if (!inserted)
      throw Error("duplicate object id " + std::to_string(objects_[i].id()));
    extent_.expand(objects_[i].bbox());
  }
}

const ObjectInstance& CityScene::object(ObjectId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownObject(id);
  return objects_[it->second];
}

std::vector<const ObjectInstance*> CityScene::landmark_objects() const {
  std::vector<const ObjectInstance*> out;
  for (const auto& obj : objects_)
    if (obj.landmark()) out.push_back(&obj);
  return out;
}

CityScene parse_scene(std::istream& in, const std::string& origin) {
  std::string scene_id;
  bool saw_scene = false;

  struct PendingObject {
    ObjectId id = 0;
    std::string category;
    std::optional<std::string> landmark;
    std::vector<Point3> points;
    std::vector<PointColor> colors;
    bool any_color = false;
    std::size_t line = 0;
  };

  std::vector<ObjectInstance> objects;
  std::optional<PendingObject> cur;
  std::vector<ObjectId> seen_ids;

  auto flush = [&](std::size_t line) {
    if (!cur) return;
    if (cur->points.empty())
      throw SchemaViolation(
          "object " + std::to_string(cur->id) + " has no points", line);
    objects.emplace_back(cur->id, cur->category, std::move(cur->points),
                         cur->landmark,
                         cur->any_color ? std::move(cur->colors)
                                        : std::vector<PointColor>{});
    cur.reset();
  };

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    std::istringstream ls(line);
    std::string kw;
    ls >> kw;

    if (kw == "scene") {
      if (saw_scene) throw SchemaViolation("duplicate scene header", lineno);
      scene_id = trim(line.substr(5));
      if (scene_id.empty()) throw SchemaViolation("empty scene id", lineno);
      saw_scene = true;
    } else if (kw == "object") {
      if (!saw_scene)
        throw SchemaViolation("object record before scene header", lineno);
      flush(lineno);
      std::string idtok;
      ls >> idtok;
      ObjectId id = 0;
      auto [ptr, ec] =
          std::from_chars(idtok.data(), idtok.data() + idtok.size(), id);
      if (ec != std::errc() || ptr != idtok.data() + idtok.size())
        throw SchemaViolation("bad object id '" + idtok + "'", lineno);
      for (ObjectId s : seen_ids)
        if (s == id)
          throw SchemaViolation("duplicate object id " + std::to_string(id),
                                lineno);
      seen_ids.push_back(id);
      std::string rest;
      std::getline(ls, rest);
      std::string category = trim(rest);
      if (category.empty())
        throw SchemaViolation("object record without category", lineno);
      cur = PendingObject{};
      cur->id = id;
      cur->category = category;
      cur->line = lineno;
    } else if (kw == "landmark") {
      if (!cur) throw SchemaViolation("landmark record outside object", lineno);
      if (cur->landmark)
        throw SchemaViolation("duplicate landmark record", lineno);
      std::string name = trim(line.substr(8));
      if (name.empty()) throw SchemaViolation("empty landmark name", lineno);
      cur->landmark = name;
    } else if (kw == "p") {
      if (!cur) throw SchemaViolation("point record outside object", lineno);
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (toks.size() != 3 && toks.size() != 6)
        throw SchemaViolation("point record needs 3 or 6 values", lineno);
      Point3 p{parse_double(toks[0], lineno), parse_double(toks[1], lineno),
               parse_double(toks[2], lineno)};
      if (!p.finite())
        throw SchemaViolation("non-finite coordinate", lineno);
      cur->points.push_back(p);
      if (toks.size() == 6) {
        auto chan = [&](const std::string& tok) -> std::uint8_t {
          double v = parse_double(tok, lineno);
          if (v < 0 || v > 255)
            throw SchemaViolation("color channel outside [0,255]", lineno);
          return static_cast<std::uint8_t>(v);
        };
        // Backfill default colors if earlier points in this object had none.
        cur->colors.resize(cur->points.size() - 1);
        cur->colors.push_back({chan(toks[3]), chan(toks[4]), chan(toks[5])});
        cur->any_color = true;
      } else if (cur->any_color) {
        cur->colors.push_back({});
      }
    } else {
      throw SchemaViolation("unknown record '" + kw + "'", lineno);
    }
  }

  if (!saw_scene)
    throw SchemaViolation("missing scene header in " + origin, lineno + 1);
  flush(lineno);
  if (objects.empty())
    throw SchemaViolation("scene has no objects", lineno + 1);

  try {
    return CityScene(scene_id, std::move(objects));
  } catch (const Error& e) {
    throw SchemaViolation(e.what(), lineno);
  }
}

CityScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing(path.string());
  return parse_scene(in, path.string());
}

std::string scene_to_string(const CityScene& scene) {
  std::string out;
  out += "scene " + scene.scene_id() + "\n";
  char buf[160];
  for (const auto& obj : scene.objects()) {
    out += "object " + std::to_string(obj.id()) + " " + obj.category() + "\n";
    if (obj.landmark()) out += "landmark " + *obj.landmark() + "\n";
    const bool colored = !obj.colors().empty();
    for (std::size_t i = 0; i < obj.points().size(); ++i) {
      const Point3& p = obj.points()[i];
      if (colored) {
        const PointColor& c = obj.colors()[i];
        std::snprintf(buf, sizeof(buf), "p %.6f %.6f %.6f %u %u %u\n", p.x,
                      p.y, p.z, c.r, c.g, c.b);
      } else {
        std::snprintf(buf, sizeof(buf), "p %.6f %.6f %.6f\n", p.x, p.y, p.z);
      }
      out += buf;
    }
  }
  return out;
}

void save_scene(const CityScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << scene_to_string(scene);
}

}  // namespace cityvl
