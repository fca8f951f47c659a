// Copyright 2026 The STNet Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stnet/layers.hpp"
#include "test_util.hpp"
#include "../../core/src/kernels.hpp"

namespace stnet {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

// Direct-loop convolution with TF-style padding, weights (kh, kw, cin, cout).
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>* bias,
                          std::size_t stride, Padding pad) {
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
  const std::size_t k = w.dim(0), cout = w.dim(3);
  const auto gy = window_geometry(h, k, stride, pad);
  const auto gx = window_geometry(wd, k, stride, pad);
  Tensor<double> y({n, gy.out, gx.out, cout});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oy = 0; oy < gy.out; ++oy)
      for (std::size_t ox = 0; ox < gx.out; ++ox)
        for (std::size_t co = 0; co < cout; ++co) {
          double acc = bias ? (*bias)[co] : 0.0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(gy.pad_begin);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(gx.pad_begin);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              for (std::size_t ci = 0; ci < cin; ++ci) {
                acc += x[((b * h + iy) * wd + ix) * cin + ci] * w[((ky * k + kx) * cin + ci) * cout + co];
              }
            }
          y[((b * gy.out + oy) * gx.out + ox) * cout + co] = acc;
        }
  return y;
}

Shape out_shape(Layer<double>& layer, const Shape& in) {
  const Shape shapes[] = {in};
  return layer.infer_shape(shapes);
}

Tensor<double> run(Layer<double>& layer, const Tensor<double>& x, bool training = false) {
  Tensor<double> y(out_shape(layer, x.shape()));
  const Tensor<double>* in[] = {&x};
  layer.forward(in, y, training);
  return y;
}

void set_params(Layer<double>& layer, std::uint64_t seed) {
  std::uint64_t s = seed;
  for (Parameter<double>* p : layer.parameters()) {
    if (p->trainable) p->value = random_tensor<double>(p->value.shape(), s++);
  }
}

TEST(WindowGeometry, SameAndValid) {
  EXPECT_EQ(window_geometry(32, 3, 1, Padding::kSame).out, 32u);
  EXPECT_EQ(window_geometry(32, 3, 1, Padding::kSame).pad_begin, 1u);
  EXPECT_EQ(window_geometry(32, 7, 2, Padding::kSame).out, 16u);
  EXPECT_EQ(window_geometry(32, 7, 2, Padding::kSame).pad_begin, 2u);
  EXPECT_EQ(window_geometry(7, 3, 2, Padding::kSame).out, 4u);
  EXPECT_EQ(window_geometry(32, 3, 1, Padding::kValid).out, 30u);
  EXPECT_EQ(window_geometry(2, 3, 1, Padding::kValid).out, 0u);
}

struct ConvCase {
  std::size_t cin, cout, kernel, stride;
  Padding pad;
  bool bias;
};

class ConvForward : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvForward, MatchesDirectLoops) {
  const ConvCase c = GetParam();
  auto layer = make_conv2d<double>(c.cin, c.cout, {c.kernel, c.stride, c.pad, c.bias});
  set_params(*layer, 11);
  const auto x = random_tensor<double>({2, 7, 6, c.cin}, 5);
  const auto params = layer->parameters();
  const Tensor<double> expect = naive_conv(x, params[0]->value, c.bias ? &params[1]->value : nullptr,
                                           c.stride, c.pad);
  const Tensor<double> got = run(*layer, x);
  ASSERT_EQ(got.shape(), expect.shape());
  EXPECT_LT(max_abs_diff(got, expect), 1e-12);
}

// cout below 16 takes the transposed path, 16 and above the direct one.
INSTANTIATE_TEST_SUITE_P(
    Shapes, ConvForward,
    ::testing::Values(ConvCase{3, 5, 3, 1, Padding::kSame, true}, ConvCase{3, 17, 3, 1, Padding::kSame, true},
                      ConvCase{4, 6, 3, 2, Padding::kSame, false}, ConvCase{4, 20, 3, 2, Padding::kValid, true},
                      ConvCase{5, 3, 1, 1, Padding::kSame, false}, ConvCase{5, 18, 1, 1, Padding::kSame, true},
                      ConvCase{2, 4, 7, 2, Padding::kSame, true}, ConvCase{3, 16, 1, 2, Padding::kSame, false}),
    [](const auto& info) {
      const ConvCase& c = info.param;
      return "c" + std::to_string(c.cin) + "to" + std::to_string(c.cout) + "_k" + std::to_string(c.kernel) + "s" +
             std::to_string(c.stride) + (c.pad == Padding::kSame ? "_same" : "_valid") + (c.bias ? "_bias" : "");
    });

TEST(DepthwiseConv, MatchesPerChannelConv) {
  const std::size_t ch = 4;
  auto layer = make_depthwise_conv2d<double>(ch, {3, 2, Padding::kSame, true});
  set_params(*layer, 3);
  const auto params = layer->parameters();
  const auto x = random_tensor<double>({2, 7, 7, ch}, 4);
  // Oracle: a full conv whose weight is diagonal across channels.
  Tensor<double> full({3, 3, ch, ch}, 0.0);
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t c = 0; c < ch; ++c) full[(t * ch + c) * ch + c] = params[0]->value[t * ch + c];
  const Tensor<double> expect = naive_conv(x, full, &params[1]->value, 2, Padding::kSame);
  EXPECT_LT(max_abs_diff(run(*layer, x), expect), 1e-12);
}

TEST(Dense, MatchesMatrixProduct) {
  auto layer = make_dense<double>(6, 4, true);
  set_params(*layer, 9);
  const auto p = layer->parameters();
  const auto x = random_tensor<double>({3, 6}, 1);
  const Tensor<double> y = run(*layer, x);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t o = 0; o < 4; ++o) {
      double acc = p[1]->value[o];
      for (std::size_t i = 0; i < 6; ++i) acc += x[b * 6 + i] * p[0]->value[i * 4 + o];
      EXPECT_NEAR(y[b * 4 + o], acc, 1e-12);
    }
}

TEST(Pooling, MaxAndAverageExcludePadding) {
  Tensor<double> x({1, 3, 3, 1}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto mx = make_max_pool<double>(2, 2, Padding::kSame);
  auto av = make_avg_pool<double>(2, 2, Padding::kSame);
  const auto m = run(*mx, x), a = run(*av, x);
  ASSERT_EQ(m.shape(), (Shape{1, 2, 2, 1}));
  EXPECT_EQ(std::vector<double>(m.data().begin(), m.data().end()), (std::vector<double>{5, 6, 8, 9}));
  EXPECT_DOUBLE_EQ(a[0], 3.0);  // (1+2+4+5)/4
  EXPECT_DOUBLE_EQ(a[1], 4.5);  // (3+6)/2
  EXPECT_DOUBLE_EQ(a[2], 7.5);  // (7+8)/2
  EXPECT_DOUBLE_EQ(a[3], 9.0);
}

TEST(GlobalAvgPool, AveragesSpatialAxes) {
  const auto x = random_tensor<double>({2, 3, 4, 5}, 2);
  auto g = make_global_avg_pool<double>();
  const auto y = run(*g, x);
  ASSERT_EQ(y.shape(), (Shape{2, 5}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0;
      for (std::size_t p = 0; p < 12; ++p) s += x[(b * 12 + p) * 5 + c];
      EXPECT_NEAR(y[b * 5 + c], s / 12.0, 1e-12);
    }
}

TEST(Relu, CapGivesRelu6) {
  Tensor<double> x({1, 5}, std::vector<double>{-1, 0, 3, 6, 9});
  auto r = make_relu<double>(), r6 = make_relu<double>(6.0);
  const auto a = run(*r, x), b = run(*r6, x);
  EXPECT_EQ(std::vector<double>(a.data().begin(), a.data().end()), (std::vector<double>{0, 0, 3, 6, 9}));
  EXPECT_EQ(std::vector<double>(b.data().begin(), b.data().end()), (std::vector<double>{0, 0, 3, 6, 6}));
}

TEST(BatchNorm, TrainingOutputIsNormalizedPerChannel) {
  auto bn = make_batch_norm<double>(3, 0.99, 1e-3);
  const auto x = random_tensor<double>({4, 2, 2, 3}, 8, -5.0, 9.0);
  const auto y = run(*bn, x, true);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, sq = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      s += y[i * 3 + c];
      sq += y[i * 3 + c] * y[i * 3 + c];
    }
    EXPECT_NEAR(s / 16, 0.0, 1e-9);
    EXPECT_NEAR(sq / 16, 1.0, 1e-3);  // eps shrinks the variance slightly
  }
}

TEST(BatchNorm, RunningStatisticsUseMomentum) {
  auto bn = make_batch_norm<double>(1, 0.9, 1e-3);
  Tensor<double> x({4, 1}, std::vector<double>{1, 2, 3, 6});
  run(*bn, x, true);
  const auto p = bn->parameters();
  // mean 3, biased variance 3.5
  EXPECT_NEAR(p[2]->value[0], 0.9 * 0 + 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(p[3]->value[0], 0.9 * 1 + 0.1 * 3.5, 1e-12);
  const auto y = run(*bn, x, false);
  EXPECT_NEAR(y[0], (1 - 0.3) / std::sqrt(1.25 + 1e-3), 1e-12);
}

TEST(Softmax, RowsSumToOneAndAreStable) {
  Tensor<double> x({2, 3}, std::vector<double>{1000, 1001, 1002, -5, 0, 5});
  auto s = make_softmax<double>();
  const auto y = run(*s, x);
  for (std::size_t b = 0; b < 2; ++b) {
    double sum = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_TRUE(std::isfinite(y[b * 3 + j]));
      sum += y[b * 3 + j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_NEAR(y[2] / y[1], std::exp(1.0), 1e-9);
}

TEST(Concat, JoinsLastAxisInInputOrder) {
  Tensor<double> a({2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor<double> b({2, 1}, std::vector<double>{9, 8});
  auto c = make_concat<double>();
  const Shape shapes[] = {a.shape(), b.shape()};
  Tensor<double> y(c->infer_shape(shapes));
  const Tensor<double>* in[] = {&a, &b};
  c->forward(in, y, false);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{1, 2, 9, 3, 4, 8}));
}

TEST(Layers, InferShapeRejectsBadInput) {
  auto conv = make_conv2d<double>(3, 4, {});
  const Shape wrong_channels[] = {{1, 8, 8, 2}};
  EXPECT_THROW(conv->infer_shape(wrong_channels), std::invalid_argument);
  auto dense = make_dense<double>(5, 2, true);
  const Shape rank4[] = {{1, 1, 1, 5}};
  EXPECT_THROW(dense->infer_shape(rank4), std::invalid_argument);
  auto add = make_residual_add<double>();
  const Shape mismatch[] = {{1, 4}, {1, 5}};
  EXPECT_THROW(add->infer_shape(mismatch), std::invalid_argument);
}

TEST(Kernels, GemmVariantsMatchNaive) {
  const std::size_t m = 37, n = 300, k = 13;
  const auto a = random_tensor<double>({m, k}, 1), b = random_tensor<double>({k, n}, 2);
  std::vector<double> c(m * n, 0.5), ref(m * n, 0.5);
  kernels::gemm_nn(m, n, k, a.raw(), b.raw(), c.data());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) ref[i * n + j] += a[i * k + p] * b[p * n + j];
  for (std::size_t i = 0; i < c.size(); ++i) ASSERT_NEAR(c[i], ref[i], 1e-12);

  const auto bt = random_tensor<double>({m, n}, 3);
  std::vector<double> g(k * n, 0.0), gref(k * n, 0.0);
  kernels::gemm_tn(m, n, k, a.raw(), bt.raw(), g.data());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) gref[p * n + j] += a[i * k + p] * bt[i * n + j];
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(g[i], gref[i], 1e-12);

  std::vector<double> t(k * m);
  kernels::transpose(m, k, a.raw(), t.data());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) ASSERT_EQ(t[p * m + i], a[i * k + p]);
}

}  // namespace
}  // namespace stnet
