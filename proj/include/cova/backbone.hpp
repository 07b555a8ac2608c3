#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cova/image.hpp"
#include "cova/nn.hpp"

namespace cova {

enum class BackboneKind {
  // Two strided convolutions, random init. Stride 8.
  SmallConv,
  // conv1/bn1/relu/maxpool/layer1 of an 18-layer residual net. Stride 4.
  ResNet18Stem,
};

std::string_view backbone_name(BackboneKind kind);
BackboneKind backbone_from_name(std::string_view name);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::SmallConv;
  int channels = 64;
  int input_side = 1280;
  std::array<double, 3> pixel_mean{0.485, 0.456, 0.406};
  std::array<double, 3> pixel_std{0.229, 0.224, 0.225};
};

class Backbone {
public:
  Backbone(const BackboneConfig& config, std::uint64_t seed);

  // Throws ShapeError unless the image is input_side x input_side.
  FeatureMap forward(const Image& screenshot, bool keep_cache) const;
  FeatureMap forward_tensor(const Tensor3& normalized, bool keep_cache) const;
  // Accumulates parameter gradients from d(loss)/d(feature map) of the last cached forward.
  void backward(const Tensor3& dmap) const;

  Tensor3 normalize(const Image& screenshot) const;
  int stride() const { return stride_; }
  const BackboneConfig& config() const { return config_; }

  void collect(std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers);

private:
  BackboneConfig config_;
  int stride_ = 1;
  // Layers keep per-call caches, so forward/backward are logically const but mutate them.
  std::vector<std::pair<std::string, std::unique_ptr<Layer>>> layers_;
};

}  // namespace cova
