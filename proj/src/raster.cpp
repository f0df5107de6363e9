#include "cityvl/raster.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "cityvl/errors.hpp"

namespace cityvl {

Raster::Raster(std::size_t width, std::size_t height, double meters_per_pixel,
               Point3 origin, Rgb background)
    : width_(width), height_(height), scale_(meters_per_pixel),
      origin_(origin), data_(width * height * 3) {
  if (width_ == 0 || height_ == 0) throw Error("raster needs positive size");
  if (scale_ <= 0.0) throw Error("meters_per_pixel must be positive");
  for (std::size_t i = 0; i < width_ * height_; ++i) {
    data_[3 * i] = background.r;
    data_[3 * i + 1] = background.g;
    data_[3 * i + 2] = background.b;
  }
}

Rgb Raster::get(std::size_t px, std::size_t py) const {
  const std::size_t i = (py * width_ + px) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Raster::set(std::size_t px, std::size_t py, Rgb c) {
  const std::size_t i = (py * width_ + px) * 3;
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

void Raster::world_to_pixel(double x, double y, std::size_t& px,
                            std::size_t& py) const {
  const double y_max = origin_.y + static_cast<double>(height_) * scale_;
  auto fx = static_cast<std::int64_t>(std::floor((x - origin_.x) / scale_));
  auto fy = static_cast<std::int64_t>(std::floor((y_max - y) / scale_));
  px = static_cast<std::size_t>(
      std::clamp<std::int64_t>(fx, 0, static_cast<std::int64_t>(width_) - 1));
  py = static_cast<std::size_t>(
      std::clamp<std::int64_t>(fy, 0, static_cast<std::int64_t>(height_) - 1));
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[5],
               const std::vector<std::uint8_t>& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  const std::size_t w = raster.width(), h = raster.height();

  // Filter type 0 on every scanline.
  std::vector<std::uint8_t> scanlines;
  scanlines.reserve(h * (1 + w * 3));
  const auto& px = raster.pixels();
  for (std::size_t y = 0; y < h; ++y) {
    scanlines.push_back(0);
    scanlines.insert(scanlines.end(), px.begin() + y * w * 3,
                     px.begin() + (y + 1) * w * 3);
  }

  uLongf bound = compressBound(static_cast<uLong>(scanlines.size()));
  std::vector<std::uint8_t> deflated(bound);
  if (compress2(deflated.data(), &bound, scanlines.data(),
                static_cast<uLong>(scanlines.size()), 6) != Z_OK)
    throw Error("png deflate failed");
  deflated.resize(bound);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflated);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const Raster& raster, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(raster);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cityvl
