#pragma once

#include <vector>

#include "cova/nn.hpp"
#include "cova/types.hpp"

namespace cova {

struct RoiSize {
  int height = 3;
  int width = 3;
};

// Integer cell window [x0, x1) x [y0, y1) of a pixel box on a feature map.
struct CellWindow {
  int x0, y0, x1, y1;
};

// floor/ceil projection by the stride, clipped to the map, widened to at least one cell.
CellWindow project_box(const BBox& box, double stride, int map_height, int map_width);

struct RoiPooled {
  // C * H_r * W_r values, channel-major then row then column.
  Vec values;
  // Flat feature-map index that produced each value.
  std::vector<std::size_t> argmax;
};

// Max pooling over quantized sub-windows: bin p spans
// [start + floor(p*len/out), start + ceil((p+1)*len/out)). Ties keep the first cell in row-major order.
RoiPooled roi_pool(const FeatureMap& fmap, const BBox& box, RoiSize out = {});

// Scatters d(loss)/d(pooled) back onto the feature map.
void roi_pool_backward(const RoiPooled& pooled, const Vec& dvalues, Tensor3& dmap);

}  // namespace cova
