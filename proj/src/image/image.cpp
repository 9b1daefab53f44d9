#include "image/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>

#include "core/errors.hpp"
#include "core/hashing.hpp"

namespace cycleprompt::image {

namespace {

bool is_png(std::string_view b) { return b.size() >= 8 && std::memcmp(b.data(), "\x89PNG\r\n\x1a\n", 8) == 0; }
bool is_jpeg(std::string_view b) {
  return b.size() >= 3 && static_cast<unsigned char>(b[0]) == 0xff && static_cast<unsigned char>(b[1]) == 0xd8 &&
         static_cast<unsigned char>(b[2]) == 0xff;
}

Image decode_png(std::string_view bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ImageDecodeError(std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.rgb.resize(PNG_IMAGE_SIZE(img));
  png_color white{0xff, 0xff, 0xff};
  if (!png_image_finish_read(&img, &white, out.rgb.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ImageDecodeError("png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Only C frames lie between setjmp and longjmp, and `out` lives in the caller.
bool decode_jpeg_into(std::string_view bytes, Image& out, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.message[0] = '\0';
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.rgb.assign(static_cast<std::size_t>(out.width) * out.height * 3, 0);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  auto* p = pixel(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

std::string mime_type(std::string_view bytes) {
  if (is_png(bytes)) return "image/png";
  if (is_jpeg(bytes)) return "image/jpeg";
  throw ImageDecodeError("unrecognised image format");
}

Image decode(std::string_view bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) {
    Image out;
    char message[JMSG_LENGTH_MAX] = {0};
    if (!decode_jpeg_into(bytes, out, message)) throw ImageDecodeError(std::string("jpeg: ") + message);
    return out;
  }
  throw ImageDecodeError("unrecognised image format");
}

Image decode_file(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const PreconditionError& e) {
    throw ImageDecodeError(e.what());
  }
  try {
    return decode(bytes);
  } catch (const ImageDecodeError& e) {
    throw ImageDecodeError(path.string() + ": " + e.what());
  }
}

std::string encode_png(const Image& src) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(src.width);
  img.height = static_cast<png_uint_32>(src.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, src.rgb.data(), 0, nullptr)) {
    throw FileWriteError(std::string("png encode: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, src.rgb.data(), 0, nullptr)) {
    throw FileWriteError(std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const Image& img, const std::filesystem::path& path) { write_file_atomic(path, encode_png(img)); }

Image side_by_side(const Image& left, const Image& right, int padding) {
  if (padding < 0) throw PreconditionError("padding must be non-negative");
  const int width = left.width + padding + right.width;
  const int height = std::max(left.height, right.height);
  Image out(width, height, 0xff);
  auto blit = [&out, height](const Image& src, int x0) {
    const int y0 = (height - src.height) / 2;
    for (int y = 0; y < src.height; ++y) {
      std::memcpy(out.pixel(x0, y0 + y), src.pixel(0, y), static_cast<std::size_t>(src.width) * 3);
    }
  };
  blit(left, 0);
  blit(right, left.width + padding);
  return out;
}

Image render_placeholder(std::string_view seed_text, int width, int height) {
  const std::string hex = sha256_hex(seed_text);
  std::uint8_t digest[32];
  for (int i = 0; i < 32; ++i) digest[i] = static_cast<std::uint8_t>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  Image out(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int cell = (y * 8 / height) * 8 + (x * 8 / width);
      const int base = (cell * 3) % 32;
      out.set(x, y, digest[base], digest[(base + 1) % 32], digest[(base + 2) % 32]);
    }
  }
  return out;
}

}  // namespace cycleprompt::image
