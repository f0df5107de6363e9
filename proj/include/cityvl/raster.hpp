#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cityvl/geometry.hpp"

namespace cityvl {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB top-view raster. Pixel (0, height-1) sits at `origin`, the
// south-west corner of the covered footprint; row 0 is the northern edge.
class Raster {
 public:
  Raster(std::size_t width, std::size_t height, double meters_per_pixel,
         Point3 origin, Rgb background = {230, 230, 230});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double meters_per_pixel() const { return scale_; }
  const Point3& origin() const { return origin_; }

  Rgb get(std::size_t px, std::size_t py) const;
  void set(std::size_t px, std::size_t py, Rgb c);

  const std::vector<std::uint8_t>& pixels() const { return data_; }
  std::vector<std::uint8_t>& pixels() { return data_; }

  // World (x, y) -> pixel indices, clamped to the raster bounds.
  void world_to_pixel(double x, double y, std::size_t& px, std::size_t& py) const;

 private:
  std::size_t width_;
  std::size_t height_;
  double scale_;
  Point3 origin_;
  std::vector<std::uint8_t> data_;  // row-major RGB, row 0 = north edge
};

// PNG, 8-bit RGB, no interlacing; deterministic byte stream for a given
// pixel buffer.
void write_png(const Raster& raster, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Raster& raster);

}  // namespace cityvl
