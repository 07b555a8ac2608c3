#pragma once

#include <map>
#include <vector>

#include "cova/dom.hpp"
#include "cova/image.hpp"

#include "json.hpp"

namespace cova {

struct AttentionViz {
  Image image;
  nlohmann::json report;
};

inline constexpr Rgb kTargetOutline{220, 0, 0};
inline constexpr Rgb kContextShade{0, 170, 0};

// Outlines `element_id` in red and shades each neighbour green with opacity 0.8 * alpha.
// Neighbours below the threshold stay unshaded but are still listed in the report.
// Throws UnknownElementError for ids that are not elements of the page.
AttentionViz render_attention(const Webpage& page, const Image& screenshot, int element_id,
                              const std::map<int, double>& attn, double threshold = 0.05);

// Fraction of attention weights strictly above the threshold.
double activated_fraction(const std::vector<std::map<int, double>>& attns, double threshold = 0.05);

}  // namespace cova
