#ifndef VSG_PNG_H_
#define VSG_PNG_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vsg {

struct Rgba {
  uint8_t r = 0, g = 0, b = 0, a = 255;
};

// Row-major pixels, `width * height` bytes.
std::string EncodeGrayPng(int width, int height, std::span<const uint8_t> pixels);
// Palette indices with per-entry alpha.
std::string EncodeIndexedPng(int width, int height, std::span<const uint8_t> indices, std::span<const Rgba> palette);

struct DecodedPng {
  int width = 0;
  int height = 0;
  int color_type = 0;  // libpng PNG_COLOR_TYPE_*
  int bit_depth = 0;
  std::vector<uint8_t> pixels;  // one byte per pixel (gray or palette index)
  std::vector<Rgba> palette;
};

// Accepts 8-bit gray and 8-bit palette images; throws kMalformedHeader otherwise.
DecodedPng DecodePng(const std::string& bytes);

}  // namespace vsg

#endif  // VSG_PNG_H_
