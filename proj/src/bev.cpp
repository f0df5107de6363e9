#include "cityvl/bev.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"

namespace cityvl {

namespace {

std::array<Rgb, 64> build_palette() {
  std::array<Rgb, 64> pal{};
  for (int i = 0; i < 64; ++i) {
    // Golden-angle hue walk; alternating value keeps neighbors apart.
    const double h = static_cast<double>((i * 137) % 360);
    const double s = 0.78;
    const double v = (i % 2 == 0) ? 0.92 : 0.65;
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
      case 0: r = c; g = x; break;
      case 1: r = x; g = c; break;
      case 2: g = c; b = x; break;
      case 3: g = x; b = c; break;
      case 4: r = x; b = c; break;
      default: r = c; b = x; break;
    }
    const double m = v - c;
    pal[static_cast<std::size_t>(i)] = {
        static_cast<std::uint8_t>(std::lround((r + m) * 255.0)),
        static_cast<std::uint8_t>(std::lround((g + m) * 255.0)),
        static_cast<std::uint8_t>(std::lround((b + m) * 255.0))};
  }
  return pal;
}

const std::array<Rgb, 64>& palette() {
  static const std::array<Rgb, 64> pal = build_palette();
  return pal;
}

// 3x5 digit glyphs, one bit-row per entry, MSB = left pixel.
constexpr std::uint8_t kDigitFont[10][5] = {
    {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
    {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
    {0b111, 0b001, 0b111, 0b100, 0b111},  // 2
    {0b111, 0b001, 0b111, 0b001, 0b111},  // 3
    {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
    {0b111, 0b100, 0b111, 0b001, 0b111},  // 5
    {0b111, 0b100, 0b111, 0b101, 0b111},  // 6
    {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
    {0b111, 0b101, 0b111, 0b101, 0b111},  // 8
    {0b111, 0b101, 0b111, 0b001, 0b111},  // 9
};

struct Region {
  double min_x, min_y, max_x, max_y;
};

struct PlottedPoint {
  std::size_t px, py;
  double z;
  Rgb color;
  std::uint32_t owner;  // object index + 1; 0 = none
};

Rgb point_render_color(const ObjectInstance& obj, std::size_t point_idx) {
  if (!obj.colors().empty()) {
    const PointColor& c = obj.colors()[point_idx];
    return {c.r, c.g, c.b};
  }
  return category_color(obj.category());
}

void raster_dims(const Region& r, double scale, std::size_t& w, std::size_t& h) {
  w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((r.max_x - r.min_x) / scale)));
  h = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((r.max_y - r.min_y) / scale)));
}

bool project(const Region& r, double scale, std::size_t w, std::size_t h,
             double x, double y, std::size_t& px, std::size_t& py) {
  if (x < r.min_x || x > r.max_x || y < r.min_y || y > r.max_y) return false;
  const double y_max = r.min_y + static_cast<double>(h) * scale;
  auto fx = static_cast<std::int64_t>(std::floor((x - r.min_x) / scale));
  auto fy = static_cast<std::int64_t>(std::floor((y_max - y) / scale));
  px = static_cast<std::size_t>(
      std::clamp<std::int64_t>(fx, 0, static_cast<std::int64_t>(w) - 1));
  py = static_cast<std::size_t>(
      std::clamp<std::int64_t>(fy, 0, static_cast<std::int64_t>(h) - 1));
  return true;
}

void draw_label(Raster& out, const CityScene& scene, const Region& region) {
  const std::size_t w = out.width(), h = out.height();
  for (const auto& obj : scene.objects()) {
    std::size_t cx, cy;
    if (!project(region, out.meters_per_pixel(), w, h, obj.centroid().x,
                 obj.centroid().y, cx, cy))
      continue;
    const std::string digits = std::to_string(obj.id());
    std::size_t pen_x = cx;
    for (char ch : digits) {
      const auto& glyph = kDigitFont[ch - '0'];
      for (std::size_t gy = 0; gy < 5; ++gy) {
        for (std::size_t gx = 0; gx < 3; ++gx) {
          if (!(glyph[gy] & (0b100 >> gx))) continue;
          const std::size_t px = pen_x + gx;
          const std::size_t py = cy + gy;
          if (px < w && py < h) out.set(px, py, {0, 0, 0});
        }
      }
      pen_x += 4;
    }
  }
}

void blend_overlay_row(Raster& out, const std::vector<std::uint32_t>& owner,
                       const CityScene& scene, std::size_t py) {
  const std::size_t w = out.width();
  for (std::size_t px = 0; px < w; ++px) {
    const std::uint32_t o = owner[py * w + px];
    if (o == 0) continue;
    const Rgb idc = id_overlay_color(scene.objects()[o - 1].id());
    const Rgb base = out.get(px, py);
    out.set(px, py,
            {static_cast<std::uint8_t>((base.r + idc.r) / 2),
             static_cast<std::uint8_t>((base.g + idc.g) / 2),
             static_cast<std::uint8_t>((base.b + idc.b) / 2)});
  }
}

Raster rasterize_serial(const CityScene& scene, const Region& region,
                        double scale) {
  std::size_t w, h;
  raster_dims(region, scale, w, h);
  Raster out(w, h, scale, {region.min_x, region.min_y, 0.0});

  std::vector<double> best_z(w * h, -std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> owner(w * h, 0);

  for (std::size_t oi = 0; oi < scene.objects().size(); ++oi) {
    const ObjectInstance& obj = scene.objects()[oi];
    for (std::size_t pi = 0; pi < obj.points().size(); ++pi) {
      const Point3& p = obj.points()[pi];
      std::size_t px, py;
      if (!project(region, scale, w, h, p.x, p.y, px, py)) continue;
      const std::size_t cell = py * w + px;
      if (p.z > best_z[cell]) {
        best_z[cell] = p.z;
        owner[cell] = static_cast<std::uint32_t>(oi) + 1;
        out.set(px, py, point_render_color(obj, pi));
      }
    }
  }

  for (std::size_t py = 0; py < h; ++py) blend_overlay_row(out, owner, scene, py);
  draw_label(out, scene, region);
  return out;
}

Raster rasterize_parallel(const CityScene& scene, const Region& region,
                          double scale) {
  std::size_t w, h;
  raster_dims(region, scale, w, h);
  Raster out(w, h, scale, {region.min_x, region.min_y, 0.0});

  // Bucket points by raster row in global traversal order; per-pixel results
  // depend only on the in-order subsequence hitting that pixel, so processing
  // rows independently reproduces the serial output bit for bit.
  std::vector<std::vector<PlottedPoint>> rows(h);
  for (std::size_t oi = 0; oi < scene.objects().size(); ++oi) {
    const ObjectInstance& obj = scene.objects()[oi];
    for (std::size_t pi = 0; pi < obj.points().size(); ++pi) {
      const Point3& p = obj.points()[pi];
      std::size_t px, py;
      if (!project(region, scale, w, h, p.x, p.y, px, py)) continue;
      rows[py].push_back({px, py, p.z, point_render_color(obj, pi),
                          static_cast<std::uint32_t>(oi) + 1});
    }
  }

  std::vector<double> best_z(w * h, -std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> owner(w * h, 0);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t py = 0; py < static_cast<std::int64_t>(h); ++py) {
    for (const PlottedPoint& pp : rows[static_cast<std::size_t>(py)]) {
      const std::size_t cell = pp.py * w + pp.px;
      if (pp.z > best_z[cell]) {
        best_z[cell] = pp.z;
        owner[cell] = pp.owner;
        out.set(pp.px, pp.py, pp.color);
      }
    }
    blend_overlay_row(out, owner, scene, static_cast<std::size_t>(py));
  }

  draw_label(out, scene, region);
  return out;
}

Region global_region(const CityScene& scene) {
  if (scene.size() == 0) throw EmptyScene();
  const Bbox3& e = scene.extent();
  return {e.min.x, e.min.y, e.max.x, e.max.y};
}

}  // namespace

Rgb id_overlay_color(ObjectId id) { return palette()[id % 64]; }

Rgb category_color(const std::string& category) {
  const Rgb base = palette()[fnv1a64(category) % 64];
  // Darkened so the id overlay stays distinguishable on top.
  return {static_cast<std::uint8_t>(base.r * 3 / 4),
          static_cast<std::uint8_t>(base.g * 3 / 4),
          static_cast<std::uint8_t>(base.b * 3 / 4)};
}

Raster render_global_bev(const CityScene& scene, double meters_per_pixel) {
  return rasterize_parallel(scene, global_region(scene), meters_per_pixel);
}

Raster render_global_bev_serial(const CityScene& scene,
                                double meters_per_pixel) {
  return rasterize_serial(scene, global_region(scene), meters_per_pixel);
}

Raster render_object_crop(const CityScene& scene, ObjectId object_id,
                          double margin, double meters_per_pixel) {
  if (margin < 0.0) throw Error("margin must be non-negative");
  const ObjectInstance& obj = scene.object(object_id);
  const Bbox3& e = scene.extent();
  Region r{std::max(obj.bbox().min.x - margin, e.min.x),
           std::max(obj.bbox().min.y - margin, e.min.y),
           std::min(obj.bbox().max.x + margin, e.max.x),
           std::min(obj.bbox().max.y + margin, e.max.y)};
  return rasterize_parallel(scene, r, meters_per_pixel);
}

std::string bev_metadata_json(const CityScene& scene, const Raster& raster) {
  nlohmann::json j;
  j["origin"] = {{"x", raster.origin().x},
                 {"y", raster.origin().y},
                 {"z", raster.origin().z}};
  j["meters_per_pixel"] = raster.meters_per_pixel();
  j["width"] = raster.width();
  j["height"] = raster.height();
  auto& objs = j["objects"] = nlohmann::json::array();
  const Region r{raster.origin().x, raster.origin().y,
                 raster.origin().x + raster.width() * raster.meters_per_pixel(),
                 raster.origin().y + raster.height() * raster.meters_per_pixel()};
  for (const auto& obj : scene.objects()) {
    std::size_t px, py;
    if (!project(r, raster.meters_per_pixel(), raster.width(), raster.height(),
                 obj.centroid().x, obj.centroid().y, px, py))
      continue;
    objs.push_back({{"id", obj.id()}, {"centroid_px", {px, py}}});
  }
  return j.dump(2) + "\n";
}

}  // namespace cityvl
