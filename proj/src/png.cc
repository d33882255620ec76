#include "vsg/png.h"

#include <png.h>

#include <cstring>

#include "vsg/error.h"

namespace vsg {

namespace {

// libpng reports errors by longjmp; the message is kept for the exception
// thrown once control is back in C++ frames.
void OnError(png_structp png, png_const_charp message) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = message;
  png_longjmp(png, 1);
}

void OnWarning(png_structp, png_const_charp) {}

void Append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void Flush(png_structp) {}

std::string Encode(int width, int height, std::span<const uint8_t> pixels, int color_type,
                   std::span<const Rgba> palette) {
  if (width < 1 || height < 1 || pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height)) {
    throw Error(ErrorKind::kShapeMismatch, "png: pixel count does not match the image size");
  }
  std::string out;
  std::string message;
  std::vector<png_color> colors;
  std::vector<png_byte> alpha;
  for (const auto& c : palette) {
    colors.push_back({c.r, c.g, c.b});
    alpha.push_back(c.a);
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, OnError, OnWarning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::kIoFailure, "png: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIoFailure, "png: " + message);
  }
  png_set_write_fn(png, &out, Append, Flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
    png_set_tRNS(png, info, alpha.data(), static_cast<int>(alpha.size()), nullptr);
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + static_cast<size_t>(y) * static_cast<size_t>(width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Reader {
  const std::string* bytes;
  size_t offset = 0;
};

void Read(png_structp png, png_bytep data, png_size_t length) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(png));
  if (r->offset + length > r->bytes->size()) png_error(png, "truncated stream");
  std::memcpy(data, r->bytes->data() + r->offset, length);
  r->offset += length;
}

}  // namespace

std::string EncodeGrayPng(int width, int height, std::span<const uint8_t> pixels) {
  return Encode(width, height, pixels, PNG_COLOR_TYPE_GRAY, {});
}

std::string EncodeIndexedPng(int width, int height, std::span<const uint8_t> indices, std::span<const Rgba> palette) {
  if (palette.empty() || palette.size() > 256) throw Error(ErrorKind::kInvalidArgument, "png: palette needs 1-256 entries");
  for (uint8_t i : indices) {
    if (i >= palette.size()) throw Error(ErrorKind::kInvalidArgument, "png: index outside the palette");
  }
  return Encode(width, height, indices, PNG_COLOR_TYPE_PALETTE, palette);
}

DecodedPng DecodePng(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw Error(ErrorKind::kMalformedHeader, "png: bad signature");
  }
  DecodedPng out;
  std::string message;
  Reader reader{&bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, OnError, OnWarning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::kIoFailure, "png: cannot allocate reader");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kMalformedHeader, "png: " + message);
  }
  png_set_read_fn(png, &reader, Read);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.color_type = png_get_color_type(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (out.bit_depth != 8 || (out.color_type != PNG_COLOR_TYPE_GRAY && out.color_type != PNG_COLOR_TYPE_PALETTE)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kMalformedHeader, "png: only 8-bit gray or palette images are supported");
  }
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
    png_colorp colors = nullptr;
    int n = 0;
    png_get_PLTE(png, info, &colors, &n);
    png_bytep alpha = nullptr;
    int n_alpha = 0;
    png_color_16p unused = nullptr;
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_get_tRNS(png, info, &alpha, &n_alpha, &unused);
    out.palette.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      out.palette.push_back(
          {colors[i].red, colors[i].green, colors[i].blue, static_cast<uint8_t>(i < n_alpha ? alpha[i] : 255)});
    }
  }
  out.pixels.resize(static_cast<size_t>(out.width) * static_cast<size_t>(out.height));
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, out.pixels.data() + static_cast<size_t>(y) * static_cast<size_t>(out.width), nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace vsg
