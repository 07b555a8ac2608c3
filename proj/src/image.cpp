#include "cova/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "cova/error.hpp"
#include "csv.hpp"
#include "utf8.hpp"

namespace cova {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw ShapeError("image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

void Image::fill_rect(int x, int y, int w, int h, Rgb c) {
  int x0 = std::max(0, x), y0 = std::max(0, y);
  int x1 = std::min(width_, x + w), y1 = std::min(height_, y + h);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, c);
  }
}

void Image::blend_rect(int x, int y, int w, int h, Rgb c, double opacity) {
  opacity = std::clamp(opacity, 0.0, 1.0);
  int x0 = std::max(0, x), y0 = std::max(0, y);
  int x1 = std::min(width_, x + w), y1 = std::min(height_, y + h);
  auto mix = [&](std::uint8_t under, std::uint8_t over) {
    return static_cast<std::uint8_t>(std::lround(under * (1.0 - opacity) + over * opacity));
  };
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) {
      Rgb u = at(xx, yy);
      set(xx, yy, {mix(u.r, c.r), mix(u.g, c.g), mix(u.b, c.b)});
    }
  }
}

void Image::outline_rect(int x, int y, int w, int h, Rgb c, int thickness) {
  thickness = std::max(1, std::min({thickness, (w + 1) / 2, (h + 1) / 2}));
  fill_rect(x, y, w, thickness, c);
  fill_rect(x, y + h - thickness, w, thickness, c);
  fill_rect(x, y, thickness, h, c);
  fill_rect(x + w - thickness, y, thickness, h, c);
}

void Image::fill_ellipse(int x, int y, int w, int h, Rgb c) {
  double cx = x + w / 2.0, cy = y + h / 2.0;
  double rx = w / 2.0, ry = h / 2.0;
  for (int yy = std::max(0, y); yy < std::min(height_, y + h); ++yy) {
    for (int xx = std::max(0, x); xx < std::min(width_, x + w); ++xx) {
      double dx = (xx + 0.5 - cx) / rx, dy = (yy + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) set(xx, yy, c);
    }
  }
}

bool Image::crop_equals(int x, int y, int w, int h, const Image& other, int ox, int oy) const {
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      if (at(x + xx, y + yy) != other.at(ox + xx, oy + yy)) return false;
    }
  }
  return true;
}

namespace font {
namespace {

struct Glyph {
  char32_t cp;
  std::array<std::uint8_t, 7> rows;
};

// Classic 5x7 bitmaps, bit 4 is the leftmost column.
constexpr Glyph kGlyphs[] = {
    {U' ', {0, 0, 0, 0, 0, 0, 0}},
    {U'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {U'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {U'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {U'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {U'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {U'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {U'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {U'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {U'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {U'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {U'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}},
    {U'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {U'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {U'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {U'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {U'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {U'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {U'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {U'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {U'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {U'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {U'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {U'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {U'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {U'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {U'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {U'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {U'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {U'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {U'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {U'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {U'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {U'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {U'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {U'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {U'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {U'$', {0x04, 0x0F, 0x14, 0x0E, 0x05, 0x1E, 0x04}},
    {U'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
    {U',', {0, 0, 0, 0, 0x0C, 0x04, 0x08}},
    {U'-', {0, 0, 0, 0x1F, 0, 0, 0}},
    {U':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},
    {U'!', {0x04, 0x04, 0x04, 0x04, 0x04, 0, 0x04}},
    {U'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0, 0x04}},
    {U'/', {0, 0x01, 0x02, 0x04, 0x08, 0x10, 0}},
    {U'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {U'&', {0x0C, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0D}},
    {U'+', {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0}},
    {U'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {U')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {U'\'', {0x0C, 0x04, 0x08, 0, 0, 0, 0}},
    {U'#', {0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A}},
    {U'*', {0, 0x04, 0x15, 0x0E, 0x15, 0x04, 0}},
};

constexpr std::array<std::uint8_t, 7> kUnknown = {0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};

const std::array<std::uint8_t, 7>& glyph_for(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') cp = cp - U'a' + U'A';
  for (const auto& g : kGlyphs) {
    if (g.cp == cp) return g.rows;
  }
  return kUnknown;
}

}  // namespace

int text_width(std::string_view utf8, int scale) {
  return static_cast<int>(detail::decode_utf8(utf8).size()) * kCellWidth * scale;
}

int text_height(int scale) { return kCellHeight * scale; }

void draw_text(Image& img, int x, int y, std::string_view utf8, int scale, Rgb color) {
  int pen = x;
  for (char32_t cp : detail::decode_utf8(utf8)) {
    const auto& rows = glyph_for(cp);
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (rows[r] & (0x10 >> c)) img.fill_rect(pen + c * scale, y + r * scale, scale, scale, color);
      }
    }
    pen += kCellWidth * scale;
  }
}

}  // namespace font

Image read_png(const std::filesystem::path& path) {
  std::string bytes = detail::read_file(path);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.bytes().data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(path.string() + ": " + image.message);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, img.bytes().data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.bytes().data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  auto bytes = encode_png(img);
  detail::write_file(path, std::string(bytes.begin(), bytes.end()));
}

}  // namespace cova
