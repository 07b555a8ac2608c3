#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cova {

inline constexpr int kViewportSide = 1280;

// Axis-aligned box in screenshot pixels. Fractional coordinates are kept.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Intersection with [0, width) x [0, height). May return a zero-area box.
BBox clip_to_viewport(const BBox& box, double width, double height);

struct Viewport {
  int width = kViewportSide;
  int height = kViewportSide;

  friend bool operator==(const Viewport&, const Viewport&) = default;
};

// Class order is fixed: logits and probability columns follow it.
enum class Label : std::uint8_t { Price = 0, Title = 1, Image = 2, Background = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<Label, 3> kTargetLabels = {Label::Price, Label::Title, Label::Image};

std::string_view label_name(Label label);
std::optional<Label> label_from_name(std::string_view name);

}  // namespace cova
