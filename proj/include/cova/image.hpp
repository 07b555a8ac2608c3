#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cova {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit interleaved RGB raster, row-major.
class Image {
public:
  Image() = default;
  Image(int width, int height, Rgb fill = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }

  // Drawing primitives clip to the raster; rectangles use integer pixel bounds.
  void fill_rect(int x, int y, int w, int h, Rgb c);
  // Alpha-blends c over the rectangle with opacity in [0,1].
  void blend_rect(int x, int y, int w, int h, Rgb c, double opacity);
  void outline_rect(int x, int y, int w, int h, Rgb c, int thickness);
  void fill_ellipse(int x, int y, int w, int h, Rgb c);

  // Pixel equality of two same-sized crops.
  bool crop_equals(int x, int y, int w, int h, const Image& other, int ox, int oy) const;

  friend bool operator==(const Image&, const Image&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Monospace 5x7 bitmap font. Each glyph cell is 6x8 units scaled by `scale`.
namespace font {
inline constexpr int kCellWidth = 6;
inline constexpr int kCellHeight = 8;

int text_width(std::string_view utf8, int scale);
int text_height(int scale);
void draw_text(Image& img, int x, int y, std::string_view utf8, int scale, Rgb color);
}  // namespace font

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_png(const Image& img);

}  // namespace cova
