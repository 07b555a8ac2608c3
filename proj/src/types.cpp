#include "cova/types.hpp"

#include <algorithm>

namespace cova {

BBox clip_to_viewport(const BBox& box, double width, double height) {
  double x0 = std::clamp(box.x, 0.0, width);
  double y0 = std::clamp(box.y, 0.0, height);
  double x1 = std::clamp(box.right(), 0.0, width);
  double y1 = std::clamp(box.bottom(), 0.0, height);
  return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Price: return "PRICE";
    case Label::Title: return "TITLE";
    case Label::Image: return "IMAGE";
    case Label::Background: return "BACKGROUND";
  }
  return "BACKGROUND";
}

std::optional<Label> label_from_name(std::string_view name) {
  for (int c = 0; c < kNumClasses; ++c) {
    auto label = static_cast<Label>(c);
    if (label_name(label) == name) return label;
  }
  return std::nullopt;
}

}  // namespace cova
