#include "doctest.h"

#include <cmath>
#include <functional>

#include "cova/backbone.hpp"
#include "cova/error.hpp"
#include "cova/nn.hpp"
#include "helpers.hpp"

using namespace cova;

namespace {

Tensor3 random_tensor(Rng& rng, int c, int h, int w) {
  Tensor3 t(c, h, w);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

double dot(const Tensor3& a, const Tensor3& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Checks input and parameter gradients of loss = <layer(x), r> against central differences.
void check_layer(Layer& layer, Tensor3 x, Rng& rng, double tol = 1e-5) {
  std::vector<NamedParam> params;
  std::vector<NamedBuffer> buffers;
  layer.collect("l", params, buffers);
  for (auto& p : params) p.param->zero_grad();

  Tensor3 y = layer.forward(x, true);
  Tensor3 r = random_tensor(rng, y.channels, y.height, y.width);
  Tensor3 dx = layer.backward(r);
  REQUIRE(dx.same_shape(x));

  auto loss = [&]() { return dot(layer.forward(x, false), r); };
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); i += 1 + x.size() / 40) {
    const double keep = x.data[i];
    x.data[i] = keep + h;
    const double up = loss();
    x.data[i] = keep - h;
    const double down = loss();
    x.data[i] = keep;
    CHECK(rel_err(dx.data[i], (up - down) / (2 * h)) < tol);
  }
  for (auto& p : params) {
    Mat& v = p.param->value;
    for (Eigen::Index i = 0; i < v.size(); i += 1 + v.size() / 20) {
      const double keep = v.data()[i];
      v.data()[i] = keep + h;
      const double up = loss();
      v.data()[i] = keep - h;
      const double down = loss();
      v.data()[i] = keep;
      INFO(p.name);
      CHECK(rel_err(p.param->grad.data()[i], (up - down) / (2 * h)) < tol);
    }
  }
}

}  // namespace

TEST_CASE("conv2d gradients") {
  Rng rng(1);
  Conv2d conv(3, 4, 3, 2, 1, true);
  conv.init(rng);
  check_layer(conv, random_tensor(rng, 3, 9, 7), rng);
  Conv2d no_bias(2, 3, 2, 2, 0, false);
  no_bias.init(rng);
  check_layer(no_bias, random_tensor(rng, 2, 6, 6), rng);
}

TEST_CASE("conv2d output shape and a hand value") {
  Conv2d conv(1, 1, 2, 2, 0, true);
  conv.weight().value.setConstant(1.0);
  conv.bias().value.setConstant(0.5);
  Tensor3 x(1, 4, 4);
  for (int i = 0; i < 16; ++i) x.data[i] = i;
  Tensor3 y = conv.forward(x, false);
  CHECK(y.height == 2);
  CHECK(y.width == 2);
  CHECK(y.at(0, 0, 0) == doctest::Approx(0 + 1 + 4 + 5 + 0.5));
  CHECK(y.at(0, 1, 1) == doctest::Approx(10 + 11 + 14 + 15 + 0.5));
}

TEST_CASE("frozen batch norm, relu, max pool and basic block gradients") {
  Rng rng(2);
  FrozenBatchNorm2d bn(3);
  check_layer(bn, random_tensor(rng, 3, 4, 5), rng);
  ReLU relu;
  check_layer(relu, random_tensor(rng, 2, 5, 5), rng);
  MaxPool2d pool(3, 2, 1);
  check_layer(pool, random_tensor(rng, 2, 7, 6), rng);
  BasicBlock block(3);
  block.init(rng);
  check_layer(block, random_tensor(rng, 3, 5, 5), rng);
}

TEST_CASE("batchnorm1d gradients in training mode") {
  Rng rng(3);
  BatchNorm1d bn(4);
  bn.gamma().value = cova::testing::random_mat(rng, 1, 4);
  bn.beta().value = cova::testing::random_mat(rng, 1, 4);
  Mat x = cova::testing::random_mat(rng, 6, 4);
  Mat r = cova::testing::random_mat(rng, 6, 4);
  bn.gamma().zero_grad();
  bn.beta().zero_grad();
  bn.forward(x, true);
  Mat dx = bn.backward(r);
  auto loss = [&](const Mat& in) {
    BatchNorm1d copy = bn;
    return (copy.forward(in, true).array() * r.array()).sum();
  };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Mat up = x, down = x;
    up.data()[i] += h;
    down.data()[i] -= h;
    CHECK(rel_err(dx.data()[i], (loss(up) - loss(down)) / (2 * h)) < 1e-5);
  }
  // Eval mode is a plain affine map with the running statistics.
  Mat y = bn.forward(x, false);
  Mat expect = ((x.rowwise() - bn.running_mean().row(0)).array().rowwise() /
                (bn.running_var().row(0).array() + 1e-5).sqrt())
                   .rowwise() *
               bn.gamma().value.row(0).array();
  expect.rowwise() += bn.beta().value.row(0);
  CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backbone strides and parameter gradients") {
  BackboneConfig small;
  small.channels = 3;
  small.input_side = 16;
  Backbone sc(small, 5);
  CHECK(sc.stride() == 8);
  BackboneConfig stem = small;
  stem.kind = BackboneKind::ResNet18Stem;
  Backbone rs(stem, 5);
  CHECK(rs.stride() == 4);
  CHECK(backbone_from_name(backbone_name(BackboneKind::ResNet18Stem)) == BackboneKind::ResNet18Stem);
  CHECK_THROWS_AS(backbone_from_name("vgg"), ConfigError);

  for (Backbone* bb : {&sc, &rs}) {
    Rng rng(6);
    Tensor3 x = random_tensor(rng, 3, 16, 16);
    std::vector<NamedParam> params;
    std::vector<NamedBuffer> buffers;
    bb->collect(params, buffers);
    for (auto& p : params) p.param->zero_grad();
    FeatureMap fm = bb->forward_tensor(x, true);
    CHECK(fm.map.height == 16 / bb->stride());
    Tensor3 r = random_tensor(rng, fm.map.channels, fm.map.height, fm.map.width);
    bb->backward(r);
    auto loss = [&]() { return dot(bb->forward_tensor(x, false).map, r); };
    for (auto& p : params) {
      Mat& v = p.param->value;
      for (Eigen::Index i = 0; i < v.size(); i += 1 + v.size() / 5) {
        const double keep = v.data()[i];
        v.data()[i] = keep + 1e-6;
        const double up = loss();
        v.data()[i] = keep - 1e-6;
        const double down = loss();
        v.data()[i] = keep;
        INFO(p.name);
        CHECK(rel_err(p.param->grad.data()[i], (up - down) / 2e-6) < 1e-5);
      }
    }
  }
}

TEST_CASE("backbone rejects the wrong screenshot size and stays finite on a blank one") {
  BackboneConfig cfg;
  cfg.channels = 4;
  cfg.input_side = 32;
  Backbone bb(cfg, 1);
  CHECK_THROWS_AS(bb.forward(Image(31, 32), false), ShapeError);
  FeatureMap black = bb.forward(Image(32, 32, {0, 0, 0}), false);
  for (double v : black.map.data) CHECK(std::isfinite(v));
}
