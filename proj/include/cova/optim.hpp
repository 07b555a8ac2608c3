#pragma once

#include <vector>

#include "cova/nn.hpp"

namespace cova {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Added to the gradient as an L2 penalty (not decoupled).
  double weight_decay = 0.0;
};

class Adam {
public:
  Adam(std::vector<NamedParam> params, AdamConfig config);

  void step();
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

private:
  std::vector<NamedParam> params_;
  AdamConfig config_;
  std::vector<Mat> m_, v_;
  long t_ = 0;
};

}  // namespace cova
