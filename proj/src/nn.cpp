#include "cova/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cova/error.hpp"

namespace cova {

void init_uniform_fan_in(Mat& m, Eigen::Index fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, fan_in)));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

void init_kaiming_normal(Mat& m, Eigen::Index fan_in, Rng& rng) {
  double std = std::sqrt(2.0 / static_cast<double>(std::max<Eigen::Index>(1, fan_in)));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.normal();
}

namespace {

using OutMap = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
using ConstOutMap = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

constexpr std::size_t kColBudget = std::size_t{1} << 21;

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      has_bias_(bias),
      weight_(out_channels, static_cast<Eigen::Index>(in_channels) * kernel * kernel),
      bias_(1, out_channels) {}

void Conv2d::init(Rng& rng) {
  init_kaiming_normal(weight_.value, weight_.value.cols(), rng);
  bias_.value.setZero();
}

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>&) {
  params.push_back({prefix + ".weight", &weight_});
  if (has_bias_) params.push_back({prefix + ".bias", &bias_});
}

Tensor3 Conv2d::forward(const Tensor3& x, bool keep_cache) {
  if (x.channels != in_) throw ShapeError("conv input channel mismatch");
  const int ho = (x.height + 2 * padding_ - kernel_) / stride_ + 1;
  const int wo = (x.width + 2 * padding_ - kernel_) / stride_ + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv input smaller than kernel");
  Tensor3 y(out_, ho, wo);
  const int kk = kernel_ * kernel_;
  const Eigen::Index col_rows = static_cast<Eigen::Index>(in_) * kk;
  const int block = std::max<int>(1, static_cast<int>(kColBudget / (static_cast<std::size_t>(col_rows) * wo)));
  Mat col;
  for (int r0 = 0; r0 < ho; r0 += block) {
    const int r1 = std::min(ho, r0 + block);
    const Eigen::Index ncols = static_cast<Eigen::Index>(r1 - r0) * wo;
    col.resize(col_rows, ncols);
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          double* row = col.row(static_cast<Eigen::Index>(ci) * kk + ky * kernel_ + kx).data();
          for (int r = r0; r < r1; ++r) {
            const int iy = r * stride_ - padding_ + ky;
            double* dst = row + static_cast<std::size_t>(r - r0) * wo;
            if (iy < 0 || iy >= x.height) {
              std::fill(dst, dst + wo, 0.0);
              continue;
            }
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              dst[ox] = (ix < 0 || ix >= x.width) ? 0.0 : x.at(ci, iy, ix);
            }
          }
        }
      }
    }
    OutMap out(y.data.data() + static_cast<std::size_t>(r0) * wo, out_, ncols,
               Eigen::OuterStride<>(static_cast<Eigen::Index>(ho) * wo));
    out.noalias() = weight_.value * col;
    if (has_bias_) out.colwise() += bias_.value.row(0).transpose();
  }
  if (keep_cache) input_ = x;
  return y;
}

Tensor3 Conv2d::backward(const Tensor3& dy) {
  const Tensor3& x = input_;
  if (x.data.empty()) throw ShapeError("conv backward without cached forward");
  const int ho = dy.height, wo = dy.width;
  const int kk = kernel_ * kernel_;
  const Eigen::Index col_rows = static_cast<Eigen::Index>(in_) * kk;
  const int block = std::max<int>(1, static_cast<int>(kColBudget / (static_cast<std::size_t>(col_rows) * wo)));
  Tensor3 dx(x.channels, x.height, x.width);
  Mat col, dcol;
  for (int r0 = 0; r0 < ho; r0 += block) {
    const int r1 = std::min(ho, r0 + block);
    const Eigen::Index ncols = static_cast<Eigen::Index>(r1 - r0) * wo;
    col.resize(col_rows, ncols);
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          double* row = col.row(static_cast<Eigen::Index>(ci) * kk + ky * kernel_ + kx).data();
          for (int r = r0; r < r1; ++r) {
            const int iy = r * stride_ - padding_ + ky;
            double* dst = row + static_cast<std::size_t>(r - r0) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              dst[ox] = (iy < 0 || iy >= x.height || ix < 0 || ix >= x.width) ? 0.0 : x.at(ci, iy, ix);
            }
          }
        }
      }
    }
    ConstOutMap g(dy.data.data() + static_cast<std::size_t>(r0) * wo, out_, ncols,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(ho) * wo));
    weight_.grad.noalias() += g * col.transpose();
    if (has_bias_) bias_.grad.row(0) += g.rowwise().sum().transpose();
    dcol.noalias() = weight_.value.transpose() * g;
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          const double* row = dcol.row(static_cast<Eigen::Index>(ci) * kk + ky * kernel_ + kx).data();
          for (int r = r0; r < r1; ++r) {
            const int iy = r * stride_ - padding_ + ky;
            if (iy < 0 || iy >= x.height) continue;
            const double* src = row + static_cast<std::size_t>(r - r0) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              if (ix >= 0 && ix < x.width) dx.at(ci, iy, ix) += src[ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor3 ReLU::forward(const Tensor3& x, bool keep_cache) {
  Tensor3 y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  if (keep_cache) output_ = y;
  return y;
}

Tensor3 ReLU::backward(const Tensor3& dy) {
  Tensor3 dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    if (output_.data[i] <= 0.0) dx.data[i] = 0.0;
  }
  return dx;
}

FrozenBatchNorm2d::FrozenBatchNorm2d(int channels)
    : gamma_(1, channels),
      beta_(1, channels),
      running_mean_(Mat::Zero(1, channels)),
      running_var_(Mat::Ones(1, channels)) {
  gamma_.value.setOnes();
}

void FrozenBatchNorm2d::collect(const std::string& prefix, std::vector<NamedParam>& params,
                                std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + ".weight", &gamma_});
  params.push_back({prefix + ".bias", &beta_});
  buffers.push_back({prefix + ".running_mean", &running_mean_});
  buffers.push_back({prefix + ".running_var", &running_var_});
}

Tensor3 FrozenBatchNorm2d::forward(const Tensor3& x, bool keep_cache) {
  constexpr double eps = 1e-5;
  Tensor3 y = x;
  const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    const double inv = 1.0 / std::sqrt(running_var_(0, c) + eps);
    const double scale = gamma_.value(0, c) * inv;
    const double shift = beta_.value(0, c) - running_mean_(0, c) * scale;
    double* p = y.data.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] = p[i] * scale + shift;
  }
  if (keep_cache) input_ = x;
  return y;
}

Tensor3 FrozenBatchNorm2d::backward(const Tensor3& dy) {
  constexpr double eps = 1e-5;
  Tensor3 dx = dy;
  const std::size_t plane = static_cast<std::size_t>(dy.height) * dy.width;
  for (int c = 0; c < dy.channels; ++c) {
    const double inv = 1.0 / std::sqrt(running_var_(0, c) + eps);
    const double scale = gamma_.value(0, c) * inv;
    const double* g = dy.data.data() + c * plane;
    const double* xin = input_.data.data() + c * plane;
    double dgamma = 0.0, dbeta = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      dbeta += g[i];
      dgamma += g[i] * (xin[i] - running_mean_(0, c)) * inv;
      dx.data[c * plane + i] = g[i] * scale;
    }
    gamma_.grad(0, c) += dgamma;
    beta_.grad(0, c) += dbeta;
  }
  return dx;
}

Tensor3 MaxPool2d::forward(const Tensor3& x, bool keep_cache) {
  const int ho = (x.height + 2 * padding_ - kernel_) / stride_ + 1;
  const int wo = (x.width + 2 * padding_ - kernel_) / stride_ + 1;
  Tensor3 y(x.channels, ho, wo);
  std::vector<std::size_t> arg(y.size());
  for (int c = 0; c < x.channels; ++c) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= x.width) continue;
            const std::size_t i = (static_cast<std::size_t>(c) * x.height + iy) * x.width + ix;
            if (x.data[i] > best) {
              best = x.data[i];
              best_i = i;
            }
          }
        }
        y.at(c, oy, ox) = best;
        arg[(static_cast<std::size_t>(c) * ho + oy) * wo + ox] = best_i;
      }
    }
  }
  if (keep_cache) {
    argmax_ = std::move(arg);
    in_c_ = x.channels;
    in_h_ = x.height;
    in_w_ = x.width;
  }
  return y;
}

Tensor3 MaxPool2d::backward(const Tensor3& dy) {
  Tensor3 dx(in_c_, in_h_, in_w_);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

BasicBlock::BasicBlock(int channels)
    : conv1_(channels, channels, 3, 1, 1, false),
      conv2_(channels, channels, 3, 1, 1, false),
      bn1_(channels),
      bn2_(channels) {}

void BasicBlock::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

void BasicBlock::collect(const std::string& prefix, std::vector<NamedParam>& params,
                         std::vector<NamedBuffer>& buffers) {
  conv1_.collect(prefix + ".conv1", params, buffers);
  bn1_.collect(prefix + ".bn1", params, buffers);
  conv2_.collect(prefix + ".conv2", params, buffers);
  bn2_.collect(prefix + ".bn2", params, buffers);
}

Tensor3 BasicBlock::forward(const Tensor3& x, bool keep_cache) {
  Tensor3 h = conv1_.forward(x, keep_cache);
  h = bn1_.forward(h, keep_cache);
  h = relu1_.forward(h, keep_cache);
  h = conv2_.forward(h, keep_cache);
  h = bn2_.forward(h, keep_cache);
  for (std::size_t i = 0; i < h.size(); ++i) h.data[i] += x.data[i];
  return relu_out_.forward(h, keep_cache);
}

Tensor3 BasicBlock::backward(const Tensor3& dy) {
  Tensor3 g = relu_out_.backward(dy);
  Tensor3 skip = g;
  g = bn2_.backward(g);
  g = conv2_.backward(g);
  g = relu1_.backward(g);
  g = bn1_.backward(g);
  g = conv1_.backward(g);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += skip.data[i];
  return g;
}

BatchNorm1d::BatchNorm1d(int features, double momentum, double eps)
    : momentum_(momentum),
      eps_(eps),
      gamma_(1, features),
      beta_(1, features),
      running_mean_(Mat::Zero(1, features)),
      running_var_(Mat::Ones(1, features)) {
  gamma_.value.setOnes();
}

void BatchNorm1d::collect(const std::string& prefix, std::vector<NamedParam>& params,
                          std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + ".weight", &gamma_});
  params.push_back({prefix + ".bias", &beta_});
  buffers.push_back({prefix + ".running_mean", &running_mean_});
  buffers.push_back({prefix + ".running_var", &running_var_});
}

Mat BatchNorm1d::forward(const Mat& x, bool training) {
  const auto n = x.rows();
  RowVec mean, var;
  if (training) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
    const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
    running_mean_.row(0) = (1.0 - momentum_) * running_mean_.row(0) + momentum_ * mean;
    running_var_.row(0) = (1.0 - momentum_) * running_var_.row(0) + momentum_ * (var * unbias);
  } else {
    mean = running_mean_.row(0);
    var = running_var_.row(0);
  }
  inv_std_ = (var.array() + eps_).rsqrt().matrix();
  xhat_ = (x.rowwise() - mean).array().rowwise() * inv_std_.array();
  cached_training_ = training;
  Mat y = xhat_.array().rowwise() * gamma_.value.row(0).array();
  y.rowwise() += beta_.value.row(0);
  return y;
}

Mat BatchNorm1d::backward(const Mat& dy) {
  const auto n = static_cast<double>(dy.rows());
  gamma_.grad.row(0) += (dy.array() * xhat_.array()).colwise().sum().matrix();
  beta_.grad.row(0) += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
  if (!cached_training_) return dxhat.array().rowwise() * inv_std_.array();
  RowVec sum_dxhat = dxhat.colwise().sum();
  RowVec sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum().matrix();
  Mat dx = (n * dxhat).rowwise() - sum_dxhat;
  dx -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  return (dx.array().rowwise() * (inv_std_.array() / n)).matrix();
}

}  // namespace cova
