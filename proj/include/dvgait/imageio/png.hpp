#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace dvgait::imageio {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// bit_depth 8 stores values as-is; bit_depth 1 stores nonzero pixels as white.
void write_png(const std::filesystem::path& path, const GrayImage& image, int bit_depth = 8);

/// Reads any PNG as 8-bit gray. Sub-byte gray depths are scaled to 0..255.
GrayImage read_png(const std::filesystem::path& path);

}  // namespace dvgait::imageio
