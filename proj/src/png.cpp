#include "hideseek/png.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "hideseek/errors.hpp"

namespace hideseek {

namespace {

struct ImageGuard {
  png_image* image;
  ~ImageGuard() { png_image_free(image); }
};

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  ImageGuard guard{&image};

  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  // Alpha is dropped without compositing: no background blending for RGBA input.
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }

  RgbImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  out.pixels.resize(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(&out.pixels[i * 3], &rgba[i * 4], 3);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbImage& in) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(in.width);
  image.height = static_cast<png_uint_32>(in.height);
  image.format = PNG_FORMAT_RGB;
  ImageGuard guard{&image};

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, in.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, in.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace hideseek
