#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cova/rng.hpp"

namespace cova {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Learnable array with its accumulated gradient.
struct Param {
  Mat value;
  Mat grad;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols) : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct NamedParam {
  std::string name;
  Param* param;
};

// Non-learned state that still belongs in a checkpoint (batch-norm running statistics).
struct NamedBuffer {
  std::string name;
  Mat* buffer;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Mat& m, Eigen::Index fan_in, Rng& rng);
void init_kaiming_normal(Mat& m, Eigen::Index fan_in, Rng& rng);

// Dense C x H x W activations.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Backbone output plus the pixel-to-cell scale needed by RoI pooling.
struct FeatureMap {
  Tensor3 map;
  double stride = 1.0;
};

class Layer {
public:
  virtual ~Layer() = default;
  // keep_cache=false skips storing what backward needs.
  virtual Tensor3 forward(const Tensor3& x, bool keep_cache) = 0;
  virtual Tensor3 backward(const Tensor3& dy) = 0;
  virtual void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) {
    (void)prefix;
    (void)params;
    (void)buffers;
  }
  virtual int stride() const { return 1; }
};

class Conv2d : public Layer {
public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias);

  Tensor3 forward(const Tensor3& x, bool keep_cache) override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) override;
  int stride() const override { return stride_; }

  void init(Rng& rng);
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

private:
  int in_, out_, kernel_, stride_, padding_;
  bool has_bias_;
  Param weight_;  // out x (in * k * k)
  Param bias_;    // 1 x out
  Tensor3 input_;
};

class ReLU : public Layer {
public:
  Tensor3 forward(const Tensor3& x, bool keep_cache) override;
  Tensor3 backward(const Tensor3& dy) override;

private:
  Tensor3 output_;
};

// Batch norm with frozen statistics: a learnable per-channel affine.
class FrozenBatchNorm2d : public Layer {
public:
  explicit FrozenBatchNorm2d(int channels);

  Tensor3 forward(const Tensor3& x, bool keep_cache) override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) override;

private:
  Param gamma_, beta_;
  Mat running_mean_, running_var_;
  Tensor3 input_;
};

class MaxPool2d : public Layer {
public:
  MaxPool2d(int kernel, int stride, int padding) : kernel_(kernel), stride_(stride), padding_(padding) {}

  Tensor3 forward(const Tensor3& x, bool keep_cache) override;
  Tensor3 backward(const Tensor3& dy) override;
  int stride() const override { return stride_; }

private:
  int kernel_, stride_, padding_;
  int in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<std::size_t> argmax_;
};

// conv-bn-relu-conv-bn plus identity, then relu.
class BasicBlock : public Layer {
public:
  explicit BasicBlock(int channels);

  Tensor3 forward(const Tensor3& x, bool keep_cache) override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) override;

  void init(Rng& rng);

private:
  Conv2d conv1_, conv2_;
  FrozenBatchNorm2d bn1_, bn2_;
  ReLU relu1_, relu_out_;
};

// Row-wise batch norm over a batch of feature vectors.
class BatchNorm1d {
public:
  explicit BatchNorm1d(int features = 0, double momentum = 0.1, double eps = 1e-5);

  // Training mode uses batch statistics and updates the running ones.
  Mat forward(const Mat& x, bool training);
  Mat backward(const Mat& dy);
  void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers);

  Param& gamma() { return gamma_; }
  Param& beta() { return beta_; }
  Mat& running_mean() { return running_mean_; }
  Mat& running_var() { return running_var_; }

private:
  double momentum_, eps_;
  Param gamma_, beta_;
  Mat running_mean_, running_var_;
  // backward cache
  bool cached_training_ = false;
  Mat xhat_;
  RowVec inv_std_;
};

}  // namespace cova
