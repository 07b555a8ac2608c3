#include "cova/viz.hpp"

#include <algorithm>
#include <cmath>

#include "cova/error.hpp"

namespace cova {

namespace {

void box_px(const BBox& b, int& x, int& y, int& w, int& h) {
  x = static_cast<int>(std::floor(b.x));
  y = static_cast<int>(std::floor(b.y));
  w = std::max(1, static_cast<int>(std::ceil(b.right())) - x);
  h = std::max(1, static_cast<int>(std::ceil(b.bottom())) - y);
}

}  // namespace

AttentionViz render_attention(const Webpage& page, const Image& screenshot, int element_id,
                              const std::map<int, double>& attn, double threshold) {
  const int target = page.index_of(element_id);
  if (target < 0) throw UnknownElementError("element " + std::to_string(element_id) + " is not on page " + page.page_id);
  for (const auto& [id, a] : attn) {
    if (page.index_of(id) < 0) throw UnknownElementError("attention names unknown element " + std::to_string(id));
  }
  AttentionViz viz{screenshot, nlohmann::json::object()};
  nlohmann::json neighbours = nlohmann::json::array();
  for (const auto& [id, a] : attn) {
    const bool shaded = a > threshold;
    const double opacity = 0.8 * std::clamp(a, 0.0, 1.0);
    if (shaded && !viz.image.empty()) {
      int x, y, w, h;
      box_px(page.elements[static_cast<std::size_t>(page.index_of(id))].bbox, x, y, w, h);
      viz.image.blend_rect(x, y, w, h, kContextShade, opacity);
    }
    neighbours.push_back({{"element_id", id}, {"alpha", a}, {"opacity", shaded ? opacity : 0.0}, {"shaded", shaded}});
  }
  if (!viz.image.empty()) {
    int x, y, w, h;
    box_px(page.elements[static_cast<std::size_t>(target)].bbox, x, y, w, h);
    viz.image.outline_rect(x, y, w, h, kTargetOutline, 3);
  }
  viz.report["page_id"] = page.page_id;
  viz.report["element_id"] = element_id;
  viz.report["threshold"] = threshold;
  viz.report["neighbors"] = std::move(neighbours);
  std::size_t active = 0;
  for (const auto& [id, a] : attn) active += a > threshold ? 1 : 0;
  viz.report["activated_fraction"] = attn.empty() ? 0.0 : static_cast<double>(active) / static_cast<double>(attn.size());
  return viz;
}

double activated_fraction(const std::vector<std::map<int, double>>& attns, double threshold) {
  std::size_t total = 0, active = 0;
  for (const auto& m : attns) {
    for (const auto& [id, a] : m) {
      ++total;
      if (a > threshold) ++active;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(total);
}

}  // namespace cova
