#include <catch2/catch_amalgamated.hpp>

#include "stainco/nn/adam.hpp"
#include "stainco/nn/resnet.hpp"
#include "stainco/nn/unet.hpp"
#include "testutil.hpp"

using namespace stainco;
using namespace stainco::nn;
using stainco::testutil::check_grad;
using stainco::testutil::fill_normal;

namespace {

// Weighted-sum loss turning any layer output into a scalar for grad checks.
struct SumLoss {
  TensorD w;
  explicit SumLoss(const std::vector<int>& shape, Rng& rng) : w(shape) { fill_normal(w, rng); }
  double value(const TensorD& y) const {
    double s = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += w[i] * y[i];
    return s;
  }
  TensorD grad() const { return w; }
};

}  // namespace

TEST_CASE("conv2d forward matches a direct convolution") {
  Rng rng(1);
  Conv2d<double> conv(2, 3, 3, 2, 1, true);
  conv.init(rng);
  for (auto& v : conv.b.data) v = rng.normal();
  TensorD x({2, 2, 5, 7});
  fill_normal(x, rng);
  const TensorD y = conv.forward(x, false);
  REQUIRE(y.shape == std::vector<int>{2, 3, 3, 4});

  // direct evaluation
  for (int n = 0; n < 2; ++n)
    for (int oc = 0; oc < 3; ++oc)
      for (int oy = 0; oy < 3; ++oy)
        for (int ox = 0; ox < 4; ++ox) {
          double acc = conv.b[static_cast<std::size_t>(oc)];
          for (int ic = 0; ic < 2; ++ic)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int iy = oy * 2 - 1 + ki, ix = ox * 2 - 1 + kj;
                if (iy < 0 || iy >= 5 || ix < 0 || ix >= 7) continue;
                const double wv =
                    conv.w[((static_cast<std::size_t>(oc) * 2 + ic) * 3 + ki) * 3 + kj];
                const double xv = x[((static_cast<std::size_t>(n) * 2 + ic) * 5 + iy) * 7 + ix];
                acc += wv * xv;
              }
          const double got = y[((static_cast<std::size_t>(n) * 3 + oc) * 3 + oy) * 4 + ox];
          CHECK_THAT(got, Catch::Matchers::WithinAbs(acc, 1e-12));
        }
}

TEST_CASE("conv2d gradients") {
  Rng rng(2);
  Conv2d<double> conv(2, 4, 3, 1, 1, true);
  conv.init(rng);
  TensorD x({2, 2, 6, 6});
  fill_normal(x, rng);
  SumLoss loss({2, 4, 6, 6}, rng);

  auto eval = [&] { return loss.value(conv.forward(x, true)); };
  conv.forward(x, true);
  conv.gw.fill(0);
  conv.gb.fill(0);
  const TensorD gx = conv.backward(loss.grad());

  check_grad(x, gx, eval, 1e-5, 1e-6, 60);
  check_grad(conv.w, conv.gw, eval, 1e-5, 1e-6, 60);
  check_grad(conv.b, conv.gb, eval, 1e-5, 1e-6, 8);
}

TEST_CASE("strided conv gradients") {
  Rng rng(3);
  Conv2d<double> conv(3, 2, 3, 2, 1, false);
  conv.init(rng);
  TensorD x({2, 3, 8, 8});
  fill_normal(x, rng);
  SumLoss loss({2, 2, 4, 4}, rng);
  auto eval = [&] { return loss.value(conv.forward(x, true)); };
  conv.forward(x, true);
  conv.gw.fill(0);
  const TensorD gx = conv.backward(loss.grad());
  check_grad(x, gx, eval, 1e-5, 1e-6, 50);
  check_grad(conv.w, conv.gw, eval, 1e-5, 1e-6, 50);
}

TEST_CASE("batch norm 2d statistics and gradients") {
  Rng rng(4);
  BatchNorm2d<double> bn(3);
  TensorD x({4, 3, 5, 5});
  fill_normal(x, rng, 2.0);
  for (auto& v : bn.gamma.data) v = rng.uniform(0.5, 1.5);
  for (auto& v : bn.beta.data) v = rng.normal();

  SECTION("train output is standardized per channel") {
    const TensorD y = bn.forward(x, true);
    for (int c = 0; c < 3; ++c) {
      double sum = 0, sq = 0;
      int count = 0;
      for (int n = 0; n < 4; ++n)
        for (int i = 0; i < 25; ++i) {
          const double xh = (y[(static_cast<std::size_t>(n) * 3 + c) * 25 + i] -
                             bn.beta[static_cast<std::size_t>(c)]) /
                            bn.gamma[static_cast<std::size_t>(c)];
          sum += xh;
          sq += xh * xh;
          ++count;
        }
      CHECK_THAT(sum / count, Catch::Matchers::WithinAbs(0.0, 1e-10));
      CHECK_THAT(sq / count, Catch::Matchers::WithinAbs(1.0, 1e-4));  // eps shifts this slightly
    }
  }

  SECTION("gradients") {
    SumLoss loss({4, 3, 5, 5}, rng);
    auto eval = [&] { return loss.value(bn.forward(x, true)); };
    bn.forward(x, true);
    bn.ggamma.fill(0);
    bn.gbeta.fill(0);
    const TensorD gx = bn.backward(loss.grad());
    check_grad(x, gx, eval, 1e-5, 1e-5, 60);
    check_grad(bn.gamma, bn.ggamma, eval, 1e-5, 1e-5, 3);
    check_grad(bn.beta, bn.gbeta, eval, 1e-5, 1e-5, 3);
  }

  SECTION("eval mode is per-sample deterministic") {
    bn.forward(x, true);  // populate running stats
    const TensorD y1 = bn.forward(x, false);
    TensorD single({1, 3, 5, 5});
    std::copy(x.ptr(), x.ptr() + 75, single.ptr());
    const TensorD y2 = bn.forward(single, false);
    for (std::size_t i = 0; i < 75; ++i) CHECK(y1[i] == y2[i]);
  }
}

TEST_CASE("batch norm 1d gradients") {
  Rng rng(5);
  BatchNorm1d<double> bn(6);
  TensorD x({8, 6});
  fill_normal(x, rng);
  SumLoss loss({8, 6}, rng);
  auto eval = [&] { return loss.value(bn.forward(x, true)); };
  bn.forward(x, true);
  bn.ggamma.fill(0);
  bn.gbeta.fill(0);
  const TensorD gx = bn.backward(loss.grad());
  check_grad(x, gx, eval, 1e-5, 1e-5, 48);
}

TEST_CASE("pooling and upsampling gradients") {
  Rng rng(6);
  SECTION("max pool") {
    MaxPool2d<double> mp(3, 2, 1);
    TensorD x({2, 2, 6, 6});
    fill_normal(x, rng);
    SumLoss loss({2, 2, 3, 3}, rng);
    auto eval = [&] { return loss.value(mp.forward(x, true)); };
    mp.forward(x, true);
    const TensorD gx = mp.backward(loss.grad());
    // values near ties are excluded by the small eps
    check_grad(x, gx, eval, 1e-7, 1e-4, 60);
  }
  SECTION("avg pool 2x2") {
    AvgPool2<double> ap;
    TensorD x({2, 3, 4, 4});
    fill_normal(x, rng);
    SumLoss loss({2, 3, 2, 2}, rng);
    auto eval = [&] { return loss.value(ap.forward(x, true)); };
    ap.forward(x, true);
    const TensorD gx = ap.backward(loss.grad());
    check_grad(x, gx, eval, 1e-5, 1e-7, 0);
  }
  SECTION("nearest upsample") {
    Upsample2<double> up;
    TensorD x({2, 2, 3, 3});
    fill_normal(x, rng);
    SumLoss loss({2, 2, 6, 6}, rng);
    auto eval = [&] { return loss.value(up.forward(x)); };
    const TensorD gx = up.backward(loss.grad());
    check_grad(x, gx, eval, 1e-5, 1e-7, 0);
  }
  SECTION("global average pool") {
    GlobalAvgPool<double> gap;
    TensorD x({3, 4, 5, 5});
    fill_normal(x, rng);
    SumLoss loss({3, 4}, rng);
    auto eval = [&] { return loss.value(gap.forward(x, true)); };
    gap.forward(x, true);
    const TensorD gx = gap.backward(loss.grad());
    check_grad(x, gx, eval, 1e-5, 1e-7, 60);
  }
}

TEST_CASE("linear gradients") {
  Rng rng(7);
  Linear<double> fc(10, 4);
  fc.init(rng);
  TensorD x({6, 10});
  fill_normal(x, rng);
  SumLoss loss({6, 4}, rng);
  auto eval = [&] { return loss.value(fc.forward(x, true)); };
  fc.forward(x, true);
  fc.gw.fill(0);
  fc.gb.fill(0);
  const TensorD gx = fc.backward(loss.grad());
  check_grad(x, gx, eval, 1e-5, 1e-7, 0);
  check_grad(fc.w, fc.gw, eval, 1e-5, 1e-7, 0);
  check_grad(fc.b, fc.gb, eval, 1e-5, 1e-7, 0);
}

TEST_CASE("adapt_first_layer kernel transform") {
  SECTION("all-ones kernels sum to threes") {
    Tensor<double> k({4, 3, 3, 3});
    k.fill(1.0);
    const auto a = adapt_first_layer(k);
    REQUIRE(a.shape == std::vector<int>{4, 1, 3, 3});
    for (double v : a.data) CHECK(v == 3.0);
  }
  SECTION("zero kernels stay zero") {
    Tensor<double> k({2, 3, 5, 5});
    const auto a = adapt_first_layer(k);
    for (double v : a.data) CHECK(v == 0.0);
  }
  SECTION("wrong channel count is rejected") {
    Tensor<double> k({2, 4, 3, 3});
    CHECK_THROWS_AS(adapt_first_layer(k), ShapeError);
  }
  SECTION("gray images produce identical conv outputs") {
    Rng rng(8);
    Conv2d<double> conv3(3, 8, 7, 2, 3, false);
    conv3.init(rng);
    Conv2d<double> conv1(1, 8, 7, 2, 3, false);
    conv1.w = adapt_first_layer(conv3.w);

    TensorD gray1({2, 1, 16, 16});
    fill_normal(gray1, rng);
    TensorD gray3({2, 3, 16, 16});
    for (int n = 0; n < 2; ++n)
      for (int c = 0; c < 3; ++c)
        std::copy(gray1.ptr() + static_cast<std::size_t>(n) * 256,
                  gray1.ptr() + static_cast<std::size_t>(n + 1) * 256,
                  gray3.ptr() + (static_cast<std::size_t>(n) * 3 + c) * 256);

    const TensorD y3 = conv3.forward(gray3, false);
    const TensorD y1 = conv1.forward(gray1, false);
    REQUIRE(y3.shape == y1.shape);
    for (std::size_t i = 0; i < y3.numel(); ++i)
      CHECK(std::abs(y1[i] - y3[i]) <= 1e-9 * std::max(1.0, std::abs(y3[i])));
  }
}

TEST_CASE("residual encoder end-to-end gradients") {
  Rng rng(9);
  ResnetConfig rc = ResnetConfig::small(2, 4, 1);
  ResNetEncoder<double> enc(rc);
  Rng init_rng(77);
  enc.init(init_rng);

  TensorD x({3, 2, 8, 8});
  fill_normal(x, rng);
  SumLoss loss({3, rc.feature_dim()}, rng);

  ParamList<double> params;
  enc.collect(params, "enc");
  auto eval = [&] { return loss.value(enc.forward(x, true)); };
  enc.forward(x, true);
  zero_grads(params);
  const TensorD gx = enc.backward(loss.grad());

  check_grad(x, gx, eval, 1e-5, 5e-5, 40);
  for (auto& p : params) {
    if (!p.trainable) continue;
    check_grad(*p.value, *p.grad, eval, 1e-5, 5e-5, 12);
  }
}

TEST_CASE("unet end-to-end gradients and shape") {
  Rng rng(10);
  UNetConfig uc;
  uc.base_width = 3;
  uc.levels = 3;
  UNetRegressor<double> net(uc);
  Rng init_rng(88);
  net.init(init_rng);

  TensorD x({2, 1, 8, 8});
  fill_normal(x, rng);
  const TensorD y = net.forward(x, false);
  REQUIRE(y.shape == std::vector<int>{2, 1, 8, 8});

  SumLoss loss({2, 1, 8, 8}, rng);
  ParamList<double> params = net.params();
  auto eval = [&] { return loss.value(net.forward(x, true)); };
  net.forward(x, true);
  zero_grads(params);
  net.backward(loss.grad());
  for (auto& p : params) {
    if (!p.trainable) continue;
    check_grad(*p.value, *p.grad, eval, 1e-5, 5e-5, 10);
  }
}

TEST_CASE("mse loss and gradient") {
  Rng rng(11);
  TensorD pred({2, 1, 3, 3}), target({2, 1, 3, 3});
  fill_normal(pred, rng);
  fill_normal(target, rng);
  TensorD g;
  const double l = mse_loss<double>(pred, target, &g);
  double manual = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) manual += std::pow(pred[i] - target[i], 2);
  CHECK_THAT(l, Catch::Matchers::WithinAbs(manual / pred.numel(), 1e-12));
  auto eval = [&] { return mse_loss<double>(pred, target); };
  check_grad(pred, g, eval, 1e-6, 1e-7, 0);
}

TEST_CASE("adam minimizes a quadratic") {
  Tensor<double> w({4});
  w.data = {5.0, -3.0, 2.0, 8.0};
  Tensor<double> g({4});
  ParamList<double> params{{"w", &w, &g, true}};
  Adam<double> opt;
  for (int step = 0; step < 4000; ++step) {
    for (int i = 0; i < 4; ++i) g[static_cast<std::size_t>(i)] = 2.0 * w[static_cast<std::size_t>(i)];
    opt.step(params, 1e-2);
  }
  for (double v : w.data) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.0, 1e-3));
}
