#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hideseek {

// 8-bit RGB pixels, row-major, top row first.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Decodes any PNG libpng understands into RGB; alpha is discarded.
// Throws FormatError on malformed input.
RgbImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

}  // namespace hideseek
