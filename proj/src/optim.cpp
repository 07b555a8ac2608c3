#include "cova/optim.hpp"

#include <cmath>

namespace cova {

Adam::Adam(std::vector<NamedParam> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.push_back(Mat::Zero(p.param->value.rows(), p.param->value.cols()));
    v_.push_back(Mat::Zero(p.param->value.rows(), p.param->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i].param;
    Mat g = p.grad;
    if (config_.weight_decay != 0.0) g += config_.weight_decay * p.value;
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseProduct(g);
    p.value.array() -= config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

}  // namespace cova
