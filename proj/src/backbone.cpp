#include "cova/backbone.hpp"

#include "cova/error.hpp"

namespace cova {

std::string_view backbone_name(BackboneKind kind) {
  return kind == BackboneKind::SmallConv ? "small" : "resnet18_stem";
}

BackboneKind backbone_from_name(std::string_view name) {
  if (name == "small") return BackboneKind::SmallConv;
  if (name == "resnet18_stem") return BackboneKind::ResNet18Stem;
  throw ConfigError("unknown backbone `" + std::string(name) + "`");
}

Backbone::Backbone(const BackboneConfig& config, std::uint64_t seed) : config_(config) {
  if (config.channels <= 0) throw ConfigError("backbone channels must be positive");
  Rng rng(seed);
  const int c = config.channels;
  if (config.kind == BackboneKind::SmallConv) {
    auto conv1 = std::make_unique<Conv2d>(3, 16, 4, 4, 0, true);
    auto conv2 = std::make_unique<Conv2d>(16, c, 2, 2, 0, true);
    conv1->init(rng);
    conv2->init(rng);
    layers_.emplace_back("conv1", std::move(conv1));
    layers_.emplace_back("relu1", std::make_unique<ReLU>());
    layers_.emplace_back("conv2", std::move(conv2));
    layers_.emplace_back("relu2", std::make_unique<ReLU>());
  } else {
    auto conv1 = std::make_unique<Conv2d>(3, c, 7, 2, 3, false);
    conv1->init(rng);
    layers_.emplace_back("conv1", std::move(conv1));
    layers_.emplace_back("bn1", std::make_unique<FrozenBatchNorm2d>(c));
    layers_.emplace_back("relu", std::make_unique<ReLU>());
    layers_.emplace_back("maxpool", std::make_unique<MaxPool2d>(3, 2, 1));
    for (int b = 0; b < 2; ++b) {
      auto block = std::make_unique<BasicBlock>(c);
      block->init(rng);
      layers_.emplace_back("layer1." + std::to_string(b), std::move(block));
    }
  }
  for (const auto& [name, layer] : layers_) stride_ *= layer->stride();
}

Tensor3 Backbone::normalize(const Image& screenshot) const {
  if (screenshot.width() != config_.input_side || screenshot.height() != config_.input_side) {
    throw ShapeError("screenshot must be " + std::to_string(config_.input_side) + "x" +
                     std::to_string(config_.input_side) + ", got " + std::to_string(screenshot.width()) + "x" +
                     std::to_string(screenshot.height()));
  }
  Tensor3 t(3, screenshot.height(), screenshot.width());
  const auto& px = screenshot.bytes();
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      t.data[c * plane + i] = (px[i * 3 + c] / 255.0 - config_.pixel_mean[c]) / config_.pixel_std[c];
    }
  }
  return t;
}

FeatureMap Backbone::forward(const Image& screenshot, bool keep_cache) const {
  return forward_tensor(normalize(screenshot), keep_cache);
}

FeatureMap Backbone::forward_tensor(const Tensor3& normalized, bool keep_cache) const {
  Tensor3 x = normalized;
  for (const auto& [name, layer] : layers_) x = layer->forward(x, keep_cache);
  return {std::move(x), static_cast<double>(stride_)};
}

void Backbone::backward(const Tensor3& dmap) const {
  Tensor3 g = dmap;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->second->backward(g);
}

void Backbone::collect(std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) {
  for (auto& [name, layer] : layers_) layer->collect("backbone." + name, params, buffers);
}

}  // namespace cova
