#pragma once

#include <string>

#include "cityvl/raster.hpp"
#include "cityvl/scene.hpp"

namespace cityvl {

constexpr double kGlobalBevScale = 0.5;  // m/px
constexpr double kCropScale = 0.1;       // m/px

// Color every object id hashes to; fixed 64-entry palette.
Rgb id_overlay_color(ObjectId id);
Rgb category_color(const std::string& category);

// Orthographic top view: highest-z point wins each pixel (first point kept on
// an exact z tie), id-derived color blended over each object's pixels, and
// the numeric id drawn at the centroid pixel with the embedded bitmap font.
// Rasterization runs OpenMP-parallel over pixel rows and is bit-identical to
// render_global_bev_serial, the reference kept for testing.
Raster render_global_bev(const CityScene& scene, double meters_per_pixel);
Raster render_global_bev_serial(const CityScene& scene, double meters_per_pixel);

// Crop covering the object's bbox footprint grown by `margin`, clamped to the
// scene extent; same projection and marking rules as the global view.
Raster render_object_crop(const CityScene& scene, ObjectId object_id,
                          double margin, double meters_per_pixel);

// Sidecar metadata for a rendered raster: origin, scale, and per-object
// centroid pixel coordinates (global view) or the single object (crops).
std::string bev_metadata_json(const CityScene& scene, const Raster& raster);

}  // namespace cityvl
