#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cycleprompt::image {

/// 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0xff);

  std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  friend bool operator==(const Image&, const Image&) = default;
};

/// PNG or JPEG by magic bytes. Throws ImageDecodeError.
Image decode(std::string_view bytes);
Image decode_file(const std::filesystem::path& path);

/// "image/png" or "image/jpeg"; throws ImageDecodeError for anything else.
std::string mime_type(std::string_view bytes);

/// Byte-stable for identical pixels.
std::string encode_png(const Image& img);
/// Throws FileWriteError.
void write_png(const Image& img, const std::filesystem::path& path);

/// Reference on the left, candidate on the right, `padding` white columns in
/// between; the shorter image is vertically centred on white.
Image side_by_side(const Image& left, const Image& right, int padding);

/// Deterministic 8x8 block pattern coloured from a hash of `seed_text`.
Image render_placeholder(std::string_view seed_text, int width = 64, int height = 64);

}  // namespace cycleprompt::image
