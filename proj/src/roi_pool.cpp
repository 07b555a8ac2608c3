#include "cova/roi_pool.hpp"

#include <algorithm>
#include <cmath>

#include "cova/error.hpp"

namespace cova {

CellWindow project_box(const BBox& box, double stride, int map_height, int map_width) {
  auto axis = [stride](double lo, double len, int cells, int& a, int& b) {
    a = static_cast<int>(std::floor(lo / stride));
    b = static_cast<int>(std::ceil((lo + len) / stride));
    a = std::clamp(a, 0, cells - 1);
    b = std::clamp(b, 0, cells);
    if (b <= a) b = a + 1;
  };
  CellWindow w{};
  axis(box.x, box.w, map_width, w.x0, w.x1);
  axis(box.y, box.h, map_height, w.y0, w.y1);
  return w;
}

RoiPooled roi_pool(const FeatureMap& fmap, const BBox& box, RoiSize out) {
  const Tensor3& m = fmap.map;
  if (m.height <= 0 || m.width <= 0) throw ShapeError("empty feature map");
  if (out.height <= 0 || out.width <= 0) throw ShapeError("RoI output size must be positive");
  const CellWindow win = project_box(box, fmap.stride, m.height, m.width);
  const int len_y = win.y1 - win.y0, len_x = win.x1 - win.x0;

  RoiPooled r;
  const std::size_t n = static_cast<std::size_t>(m.channels) * out.height * out.width;
  r.values.resize(static_cast<Eigen::Index>(n));
  r.argmax.resize(n);
  std::size_t k = 0;
  for (int c = 0; c < m.channels; ++c) {
    for (int ph = 0; ph < out.height; ++ph) {
      const int hs = win.y0 + (ph * len_y) / out.height;
      const int he = win.y0 + ((ph + 1) * len_y + out.height - 1) / out.height;
      for (int pw = 0; pw < out.width; ++pw) {
        const int ws = win.x0 + (pw * len_x) / out.width;
        const int we = win.x0 + ((pw + 1) * len_x + out.width - 1) / out.width;
        std::size_t best_i = (static_cast<std::size_t>(c) * m.height + hs) * m.width + ws;
        double best = m.data[best_i];
        for (int y = hs; y < he; ++y) {
          for (int x = ws; x < we; ++x) {
            const std::size_t i = (static_cast<std::size_t>(c) * m.height + y) * m.width + x;
            if (m.data[i] > best) {
              best = m.data[i];
              best_i = i;
            }
          }
        }
        r.values[static_cast<Eigen::Index>(k)] = best;
        r.argmax[k] = best_i;
        ++k;
      }
    }
  }
  return r;
}

void roi_pool_backward(const RoiPooled& pooled, const Vec& dvalues, Tensor3& dmap) {
  if (static_cast<std::size_t>(dvalues.size()) != pooled.argmax.size()) throw ShapeError("RoI gradient size mismatch");
  for (std::size_t k = 0; k < pooled.argmax.size(); ++k) dmap.data[pooled.argmax[k]] += dvalues[static_cast<Eigen::Index>(k)];
}

}  // namespace cova
