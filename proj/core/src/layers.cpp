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

#include "stnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels.hpp"

namespace stnet {

namespace {

// Convolutions with fewer filters than this run the transposed product.
constexpr std::size_t kNarrowFilters = 16;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void require_rank(const Shape& shape, std::size_t rank, std::string_view who) {
  require(shape.size() == rank, std::string(who) + " expects rank " +
                                    std::to_string(rank) + " input, got " +
                                    shape_to_string(shape));
}

inline void mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

template <typename T>
Parameter<T> make_param(std::string name, Shape shape, T fill, bool trainable) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(shape, fill);
  p.grad = Tensor<T>(shape, T{0});
  p.trainable = trainable;
  return p;
}

struct Spatial {
  std::size_t batch, h, w, c;
};

Spatial spatial_of(const Shape& s) { return {s[0], s[1], s[2], s[3]}; }

// ---------------------------------------------------------------------------

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t cin, std::size_t cout, ConvOptions opts)
      : cin_(cin), cout_(cout), opts_(opts) {
    require(cin > 0 && cout > 0 && opts.kernel > 0 && opts.stride > 0,
            "conv2d requires positive channels, kernel and stride");
    weight_ = make_param<T>("weight", {opts.kernel, opts.kernel, cin, cout},
                            T{0}, true);
    if (opts.bias) bias_ = make_param<T>("bias", {cout}, T{0}, true);
  }

  LayerKind kind() const override { return LayerKind::kConv2d; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "conv2d takes one input");
    require_rank(in[0], 4, "conv2d");
    require(in[0][3] == cin_, "conv2d expects " + std::to_string(cin_) +
                                  " input channels, got " +
                                  shape_to_string(in[0]));
    const auto gy = window_geometry(in[0][1], opts_.kernel, opts_.stride, opts_.padding);
    const auto gx = window_geometry(in[0][2], opts_.kernel, opts_.stride, opts_.padding);
    require(gy.out > 0 && gx.out > 0, "conv2d window larger than input");
    return {in[0][0], gy.out, gx.out, cout_};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const Tensor<T>& x = *in[0];
    const Spatial s = spatial_of(x.shape());
    const Spatial o = spatial_of(out.shape());
    const std::size_t rows = o.h * o.w;
    const std::size_t k = patch_size();
    if (narrow()) {
      wt_.resize(k * cout_);
      kernels::transpose(k, cout_, weight_.value.raw(), wt_.data());
    }
    for (std::size_t b = 0; b < s.batch; ++b) {
      T* dst = out.raw() + b * rows * cout_;
      if (narrow()) {
        // Few filters: C^T = W^T col^T keeps the inner loop over positions.
        const T* src = pointwise() ? x.raw() + b * s.h * s.w * s.c : im2col(x, b, s, o);
        colt_.resize(k * rows);
        kernels::transpose(rows, k, src, colt_.data());
        ct_.resize(cout_ * rows);
        for (std::size_t c = 0; c < cout_; ++c) {
          std::fill_n(ct_.data() + c * rows, rows, opts_.bias ? bias_.value[c] : T{0});
        }
        kernels::gemm_nn(cout_, rows, k, wt_.data(), colt_.data(), ct_.data());
        kernels::transpose(cout_, rows, ct_.data(), dst);
        continue;
      }
      if (opts_.bias) {
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(bias_.value.raw(), cout_, dst + r * cout_);
        }
      } else {
        std::fill_n(dst, rows * cout_, T{0});
      }
      const T* src = pointwise() ? x.raw() + b * s.h * s.w * s.c
                                 : im2col(x, b, s, o);
      kernels::gemm_nn(rows, cout_, k, src, weight_.value.raw(), dst);
    }
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    const Tensor<T>& x = *in[0];
    const Spatial s = spatial_of(x.shape());
    const Spatial o = spatial_of(out.shape());
    const std::size_t rows = o.h * o.w;
    const std::size_t k = patch_size();
    weight_.grad.fill(T{0});
    if (opts_.bias) bias_.grad.fill(T{0});
    if (narrow()) gwt_.assign(k * cout_, T{0});
    if (gin[0] != nullptr) {
      wt_.resize(k * cout_);
      kernels::transpose(k, cout_, weight_.value.raw(), wt_.data());
    }
    for (std::size_t b = 0; b < s.batch; ++b) {
      const T* dy = gout.raw() + b * rows * cout_;
      const T* src = pointwise() ? x.raw() + b * s.h * s.w * s.c
                                 : im2col(x, b, s, o);
      if (narrow()) {
        ct_.resize(cout_ * rows);
        kernels::transpose(rows, cout_, dy, ct_.data());
        kernels::gemm_nn(cout_, k, rows, ct_.data(), src, gwt_.data());
      } else {
        kernels::gemm_tn(rows, cout_, k, src, dy, weight_.grad.raw());
      }
      if (opts_.bias) {
        T* db = bias_.grad.raw();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cout_; ++c) db[c] += dy[r * cout_ + c];
        }
      }
      if (gin[0] == nullptr) continue;
      T* dx = gin[0]->raw() + b * s.h * s.w * s.c;
      if (pointwise()) {
        kernels::gemm_nn(rows, k, cout_, dy, wt_.data(), dx);
      } else {
        dcols_.assign(rows * k, T{0});
        kernels::gemm_nn(rows, k, cout_, dy, wt_.data(), dcols_.data());
        col2im(dx, s, o);
      }
    }
    if (narrow()) kernels::transpose(cout_, k, gwt_.data(), weight_.grad.raw());
  }

  std::vector<Parameter<T>*> parameters() override {
    if (opts_.bias) return {&weight_, &bias_};
    return {&weight_};
  }

 private:
  std::size_t patch_size() const { return opts_.kernel * opts_.kernel * cin_; }

  bool pointwise() const {
    return opts_.kernel == 1 && opts_.stride == 1;
  }

  bool narrow() const { return cout_ < kNarrowFilters; }

  // Patch rows ordered (ky, kx, cin) to match the weight layout.
  const T* im2col(const Tensor<T>& x, std::size_t b, const Spatial& s,
                  const Spatial& o) {
    const std::size_t kk = opts_.kernel;
    const std::size_t k = patch_size();
    const auto gy = window_geometry(s.h, kk, opts_.stride, opts_.padding);
    const auto gx = window_geometry(s.w, kk, opts_.stride, opts_.padding);
    cols_.resize(o.h * o.w * k);
    const T* img = x.raw() + b * s.h * s.w * s.c;
    T* dst = cols_.data();
    for (std::size_t oy = 0; oy < o.h; ++oy) {
      for (std::size_t ox = 0; ox < o.w; ++ox) {
        for (std::size_t ky = 0; ky < kk; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * opts_.stride + ky) -
                          static_cast<std::ptrdiff_t>(gy.pad_begin);
          for (std::size_t kx = 0; kx < kk; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * opts_.stride + kx) -
                            static_cast<std::ptrdiff_t>(gx.pad_begin);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(s.h) ||
                ix >= static_cast<std::ptrdiff_t>(s.w)) {
              std::fill_n(dst, cin_, T{0});
            } else {
              std::copy_n(img + (static_cast<std::size_t>(iy) * s.w +
                                 static_cast<std::size_t>(ix)) * cin_,
                          cin_, dst);
            }
            dst += cin_;
          }
        }
      }
    }
    return cols_.data();
  }

  void col2im(T* dx, const Spatial& s, const Spatial& o) const {
    const std::size_t kk = opts_.kernel;
    const auto gy = window_geometry(s.h, kk, opts_.stride, opts_.padding);
    const auto gx = window_geometry(s.w, kk, opts_.stride, opts_.padding);
    const T* src = dcols_.data();
    for (std::size_t oy = 0; oy < o.h; ++oy) {
      for (std::size_t ox = 0; ox < o.w; ++ox) {
        for (std::size_t ky = 0; ky < kk; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * opts_.stride + ky) -
                          static_cast<std::ptrdiff_t>(gy.pad_begin);
          for (std::size_t kx = 0; kx < kk; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * opts_.stride + kx) -
                            static_cast<std::ptrdiff_t>(gx.pad_begin);
            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(s.h) &&
                ix < static_cast<std::ptrdiff_t>(s.w)) {
              T* d = dx + (static_cast<std::size_t>(iy) * s.w +
                           static_cast<std::size_t>(ix)) * cin_;
              for (std::size_t c = 0; c < cin_; ++c) d[c] += src[c];
            }
            src += cin_;
          }
        }
      }
    }
  }

  std::size_t cin_, cout_;
  ConvOptions opts_;
  Parameter<T> weight_, bias_;
  std::vector<T> cols_, dcols_, wt_, colt_, ct_, gwt_;
};

// ---------------------------------------------------------------------------

template <typename T>
class DepthwiseConv2d final : public Layer<T> {
 public:
  DepthwiseConv2d(std::size_t channels, ConvOptions opts)
      : c_(channels), opts_(opts) {
    require(channels > 0 && opts.kernel > 0 && opts.stride > 0,
            "depthwise_conv2d requires positive channels, kernel and stride");
    weight_ = make_param<T>("weight", {opts.kernel, opts.kernel, channels}, T{0}, true);
    if (opts.bias) bias_ = make_param<T>("bias", {channels}, T{0}, true);
  }

  LayerKind kind() const override { return LayerKind::kDepthwiseConv2d; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "depthwise_conv2d takes one input");
    require_rank(in[0], 4, "depthwise_conv2d");
    require(in[0][3] == c_, "depthwise_conv2d expects " + std::to_string(c_) +
                                " channels, got " + shape_to_string(in[0]));
    const auto gy = window_geometry(in[0][1], opts_.kernel, opts_.stride, opts_.padding);
    const auto gx = window_geometry(in[0][2], opts_.kernel, opts_.stride, opts_.padding);
    require(gy.out > 0 && gx.out > 0, "depthwise_conv2d window larger than input");
    return {in[0][0], gy.out, gx.out, c_};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const Tensor<T>& x = *in[0];
    const Spatial s = spatial_of(x.shape());
    const Spatial o = spatial_of(out.shape());
    const auto gy = window_geometry(s.h, opts_.kernel, opts_.stride, opts_.padding);
    const auto gx = window_geometry(s.w, opts_.kernel, opts_.stride, opts_.padding);
    const T* w = weight_.value.raw();
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t oy = 0; oy < o.h; ++oy) {
        for (std::size_t ox = 0; ox < o.w; ++ox) {
          T* dst = out.raw() + ((b * o.h + oy) * o.w + ox) * c_;
          if (opts_.bias) {
            std::copy_n(bias_.value.raw(), c_, dst);
          } else {
            std::fill_n(dst, c_, T{0});
          }
          for_each_tap(s, gy, gx, oy, ox, [&](std::size_t iy, std::size_t ix,
                                              std::size_t tap) {
            const T* src = x.raw() + ((b * s.h + iy) * s.w + ix) * c_;
            const T* wt = w + tap * c_;
            for (std::size_t c = 0; c < c_; ++c) dst[c] += src[c] * wt[c];
          });
        }
      }
    }
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    const Tensor<T>& x = *in[0];
    const Spatial s = spatial_of(x.shape());
    const Spatial o = spatial_of(out.shape());
    const auto gy = window_geometry(s.h, opts_.kernel, opts_.stride, opts_.padding);
    const auto gx = window_geometry(s.w, opts_.kernel, opts_.stride, opts_.padding);
    weight_.grad.fill(T{0});
    if (opts_.bias) bias_.grad.fill(T{0});
    const T* w = weight_.value.raw();
    T* dw = weight_.grad.raw();
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t oy = 0; oy < o.h; ++oy) {
        for (std::size_t ox = 0; ox < o.w; ++ox) {
          const T* dy = gout.raw() + ((b * o.h + oy) * o.w + ox) * c_;
          if (opts_.bias) {
            T* db = bias_.grad.raw();
            for (std::size_t c = 0; c < c_; ++c) db[c] += dy[c];
          }
          for_each_tap(s, gy, gx, oy, ox, [&](std::size_t iy, std::size_t ix,
                                              std::size_t tap) {
            const std::size_t offset = ((b * s.h + iy) * s.w + ix) * c_;
            const T* src = x.raw() + offset;
            T* dwt = dw + tap * c_;
            for (std::size_t c = 0; c < c_; ++c) dwt[c] += src[c] * dy[c];
            if (gin[0] != nullptr) {
              T* dx = gin[0]->raw() + offset;
              const T* wt = w + tap * c_;
              for (std::size_t c = 0; c < c_; ++c) dx[c] += wt[c] * dy[c];
            }
          });
        }
      }
    }
  }

  std::vector<Parameter<T>*> parameters() override {
    if (opts_.bias) return {&weight_, &bias_};
    return {&weight_};
  }

 private:
  template <typename Fn>
  void for_each_tap(const Spatial& s, const WindowGeometry& gy,
                    const WindowGeometry& gx, std::size_t oy, std::size_t ox,
                    Fn&& fn) const {
    const std::size_t kk = opts_.kernel;
    for (std::size_t ky = 0; ky < kk; ++ky) {
      const auto iy = static_cast<std::ptrdiff_t>(oy * opts_.stride + ky) -
                      static_cast<std::ptrdiff_t>(gy.pad_begin);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.h)) continue;
      for (std::size_t kx = 0; kx < kk; ++kx) {
        const auto ix = static_cast<std::ptrdiff_t>(ox * opts_.stride + kx) -
                        static_cast<std::ptrdiff_t>(gx.pad_begin);
        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.w)) continue;
        fn(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ky * kk + kx);
      }
    }
  }

  std::size_t c_;
  ConvOptions opts_;
  Parameter<T> weight_, bias_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out, bool bias)
      : in_(in), out_(out), has_bias_(bias) {
    require(in > 0 && out > 0, "dense requires positive widths");
    weight_ = make_param<T>("weight", {in, out}, T{0}, true);
    if (bias) bias_ = make_param<T>("bias", {out}, T{0}, true);
  }

  LayerKind kind() const override { return LayerKind::kDense; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "dense takes one input");
    require_rank(in[0], 2, "dense");
    require(in[0][1] == in_, "dense expects " + std::to_string(in_) +
                                 " features, got " + shape_to_string(in[0]));
    return {in[0][0], out_};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const std::size_t batch = in[0]->dim(0);
    for (std::size_t b = 0; b < batch; ++b) {
      T* row = out.raw() + b * out_;
      if (has_bias_) {
        std::copy_n(bias_.value.raw(), out_, row);
      } else {
        std::fill_n(row, out_, T{0});
      }
    }
    kernels::gemm_nn(batch, out_, in_, in[0]->raw(), weight_.value.raw(), out.raw());
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& /*out*/,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    const std::size_t batch = in[0]->dim(0);
    weight_.grad.fill(T{0});
    kernels::gemm_tn(batch, out_, in_, in[0]->raw(), gout.raw(), weight_.grad.raw());
    if (has_bias_) {
      bias_.grad.fill(T{0});
      T* db = bias_.grad.raw();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < out_; ++j) db[j] += gout[b * out_ + j];
      }
    }
    if (gin[0] != nullptr) {
      wt_.resize(in_ * out_);
      kernels::transpose(in_, out_, weight_.value.raw(), wt_.data());
      kernels::gemm_nn(batch, in_, out_, gout.raw(), wt_.data(), gin[0]->raw());
    }
  }

  std::vector<Parameter<T>*> parameters() override {
    if (has_bias_) return {&weight_, &bias_};
    return {&weight_};
  }

 private:
  std::size_t in_, out_;
  bool has_bias_;
  Parameter<T> weight_, bias_;
  std::vector<T> wt_;
};

// ---------------------------------------------------------------------------

// Normalizes over every axis except the last (channel / feature) axis.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(std::size_t channels, double momentum, double epsilon)
      : c_(channels), momentum_(momentum), epsilon_(epsilon) {
    require(channels > 0, "batch_norm requires positive channel count");
    require(epsilon > 0 && momentum >= 0 && momentum <= 1,
            "batch_norm requires epsilon > 0 and momentum in [0, 1]");
    gamma_ = make_param<T>("gamma", {c_}, T{1}, true);
    beta_ = make_param<T>("beta", {c_}, T{0}, true);
    running_mean_ = make_param<T>("running_mean", {c_}, T{0}, false);
    running_var_ = make_param<T>("running_var", {c_}, T{1}, false);
  }

  LayerKind kind() const override { return LayerKind::kBatchNorm; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "batch_norm takes one input");
    require(in[0].size() >= 2 && in[0].back() == c_,
            "batch_norm expects last axis " + std::to_string(c_) + ", got " +
                shape_to_string(in[0]));
    return in[0];
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool training) override {
    const Tensor<T>& x = *in[0];
    const std::size_t m = x.size() / c_;
    training_ = training;
    inv_std_.assign(c_, 0.0);
    xhat_.resize(x.size());
    std::vector<double> mean(c_, 0.0), var(c_, 0.0);
    if (training) {
      for (std::size_t r = 0; r < m; ++r) {
        const T* row = x.raw() + r * c_;
        for (std::size_t c = 0; c < c_; ++c) mean[c] += row[c];
      }
      for (std::size_t c = 0; c < c_; ++c) mean[c] /= static_cast<double>(m);
      for (std::size_t r = 0; r < m; ++r) {
        const T* row = x.raw() + r * c_;
        for (std::size_t c = 0; c < c_; ++c) {
          const double d = row[c] - mean[c];
          var[c] += d * d;
        }
      }
      for (std::size_t c = 0; c < c_; ++c) {
        var[c] /= static_cast<double>(m);
        T& rm = running_mean_.value[c];
        T& rv = running_var_.value[c];
        rm = static_cast<T>(momentum_ * rm + (1.0 - momentum_) * mean[c]);
        rv = static_cast<T>(momentum_ * rv + (1.0 - momentum_) * var[c]);
      }
    } else {
      for (std::size_t c = 0; c < c_; ++c) {
        mean[c] = running_mean_.value[c];
        var[c] = running_var_.value[c];
      }
    }
    for (std::size_t c = 0; c < c_; ++c) inv_std_[c] = 1.0 / std::sqrt(var[c] + epsilon_);
    const T* g = gamma_.value.raw();
    const T* bt = beta_.value.raw();
    for (std::size_t r = 0; r < m; ++r) {
      const T* row = x.raw() + r * c_;
      T* xh = xhat_.data() + r * c_;
      T* y = out.raw() + r * c_;
      for (std::size_t c = 0; c < c_; ++c) {
        xh[c] = static_cast<T>((row[c] - mean[c]) * inv_std_[c]);
        y[c] = g[c] * xh[c] + bt[c];
      }
    }
  }

  void backward(std::span<const Tensor<T>* const> /*in*/,
                const Tensor<T>& /*out*/, const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    const std::size_t m = gout.size() / c_;
    std::vector<double> sum_dy(c_, 0.0), sum_dy_xhat(c_, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const T* dy = gout.raw() + r * c_;
      const T* xh = xhat_.data() + r * c_;
      for (std::size_t c = 0; c < c_; ++c) {
        sum_dy[c] += dy[c];
        sum_dy_xhat[c] += static_cast<double>(dy[c]) * xh[c];
      }
    }
    for (std::size_t c = 0; c < c_; ++c) {
      gamma_.grad[c] = static_cast<T>(sum_dy_xhat[c]);
      beta_.grad[c] = static_cast<T>(sum_dy[c]);
    }
    if (gin[0] == nullptr) return;
    const T* g = gamma_.value.raw();
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
      const T* dy = gout.raw() + r * c_;
      const T* xh = xhat_.data() + r * c_;
      T* dx = gin[0]->raw() + r * c_;
      for (std::size_t c = 0; c < c_; ++c) {
        const double scale = g[c] * inv_std_[c];
        if (training_) {
          dx[c] += static_cast<T>(scale * (dy[c] - inv_m * sum_dy[c] -
                                           xh[c] * inv_m * sum_dy_xhat[c]));
        } else {
          dx[c] += static_cast<T>(scale * dy[c]);
        }
      }
    }
  }

  std::vector<Parameter<T>*> parameters() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }

 private:
  std::size_t c_;
  double momentum_, epsilon_;
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  bool training_ = false;
  std::vector<double> inv_std_;
  std::vector<T> xhat_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Relu final : public Layer<T> {
 public:
  explicit Relu(double cap) : cap_(static_cast<T>(cap)) {}

  LayerKind kind() const override { return LayerKind::kRelu; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "relu takes one input");
    return in[0];
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const T* x = in[0]->raw();
    T* y = out.raw();
    const std::size_t n = out.size();
    if (cap_ > T{0}) {
      for (std::size_t i = 0; i < n; ++i) y[i] = std::min(std::max(x[i], T{0}), cap_);
    } else {
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
    }
  }

  void backward(std::span<const Tensor<T>* const> /*in*/, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    if (gin[0] == nullptr) return;
    const T* y = out.raw();
    const T* dy = gout.raw();
    T* dx = gin[0]->raw();
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      const bool pass = y[i] > T{0} && (cap_ <= T{0} || y[i] < cap_);
      if (pass) dx[i] += dy[i];
    }
  }

  void hash_decisions(const Tensor<T>& out, std::uint64_t& h) const override {
    std::uint64_t word = 0;
    std::size_t bits = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const T y = out[i];
      const std::uint64_t state = y <= T{0} ? 0 : (cap_ > T{0} && y >= cap_ ? 2 : 1);
      word = (word << 2) | state;
      if (++bits == 32) {
        mix(h, word);
        word = 0;
        bits = 0;
      }
    }
    mix(h, word);
  }

 private:
  T cap_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Pool2d final : public Layer<T> {
 public:
  Pool2d(bool is_max, std::size_t kernel, std::size_t stride, Padding padding)
      : is_max_(is_max), kernel_(kernel), stride_(stride), padding_(padding) {
    require(kernel > 0 && stride > 0, "pooling requires positive kernel and stride");
  }

  LayerKind kind() const override {
    return is_max_ ? LayerKind::kMaxPool : LayerKind::kAvgPool;
  }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "pooling takes one input");
    require_rank(in[0], 4, "pooling");
    const auto gy = window_geometry(in[0][1], kernel_, stride_, padding_);
    const auto gx = window_geometry(in[0][2], kernel_, stride_, padding_);
    require(gy.out > 0 && gx.out > 0, "pooling window larger than input");
    return {in[0][0], gy.out, gx.out, in[0][3]};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const Tensor<T>& x = *in[0];
    const Spatial s = spatial_of(x.shape());
    const Spatial o = spatial_of(out.shape());
    const auto gy = window_geometry(s.h, kernel_, stride_, padding_);
    const auto gx = window_geometry(s.w, kernel_, stride_, padding_);
    if (is_max_) argmax_.assign(out.size(), 0);
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t oy = 0; oy < o.h; ++oy) {
        const auto [y0, y1] = window(oy, gy, s.h);
        for (std::size_t ox = 0; ox < o.w; ++ox) {
          const auto [x0, x1] = window(ox, gx, s.w);
          const std::size_t oidx = ((b * o.h + oy) * o.w + ox) * s.c;
          T* dst = out.raw() + oidx;
          if (is_max_) {
            std::size_t* am = argmax_.data() + oidx;
            for (std::size_t c = 0; c < s.c; ++c) {
              dst[c] = -std::numeric_limits<T>::infinity();
            }
            for (std::size_t iy = y0; iy < y1; ++iy) {
              for (std::size_t ix = x0; ix < x1; ++ix) {
                const std::size_t iidx = ((b * s.h + iy) * s.w + ix) * s.c;
                const T* src = x.raw() + iidx;
                for (std::size_t c = 0; c < s.c; ++c) {
                  if (src[c] > dst[c]) {
                    dst[c] = src[c];
                    am[c] = iidx + c;
                  }
                }
              }
            }
          } else {
            std::fill_n(dst, s.c, T{0});
            for (std::size_t iy = y0; iy < y1; ++iy) {
              for (std::size_t ix = x0; ix < x1; ++ix) {
                const T* src = x.raw() + ((b * s.h + iy) * s.w + ix) * s.c;
                for (std::size_t c = 0; c < s.c; ++c) dst[c] += src[c];
              }
            }
            const T inv = T{1} / static_cast<T>((y1 - y0) * (x1 - x0));
            for (std::size_t c = 0; c < s.c; ++c) dst[c] *= inv;
          }
        }
      }
    }
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    if (gin[0] == nullptr) return;
    T* dx = gin[0]->raw();
    if (is_max_) {
      for (std::size_t i = 0; i < gout.size(); ++i) dx[argmax_[i]] += gout[i];
      return;
    }
    const Spatial s = spatial_of(in[0]->shape());
    const Spatial o = spatial_of(out.shape());
    const auto gy = window_geometry(s.h, kernel_, stride_, padding_);
    const auto gx = window_geometry(s.w, kernel_, stride_, padding_);
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t oy = 0; oy < o.h; ++oy) {
        const auto [y0, y1] = window(oy, gy, s.h);
        for (std::size_t ox = 0; ox < o.w; ++ox) {
          const auto [x0, x1] = window(ox, gx, s.w);
          const T* dy = gout.raw() + ((b * o.h + oy) * o.w + ox) * s.c;
          const T inv = T{1} / static_cast<T>((y1 - y0) * (x1 - x0));
          for (std::size_t iy = y0; iy < y1; ++iy) {
            for (std::size_t ix = x0; ix < x1; ++ix) {
              T* d = dx + ((b * s.h + iy) * s.w + ix) * s.c;
              for (std::size_t c = 0; c < s.c; ++c) d[c] += dy[c] * inv;
            }
          }
        }
      }
    }
  }

  void hash_decisions(const Tensor<T>& /*out*/, std::uint64_t& h) const override {
    for (std::size_t v : argmax_) mix(h, v);
  }

 private:
  // Valid input range [begin, end) of output position o; padding excluded.
  std::pair<std::size_t, std::size_t> window(std::size_t o, const WindowGeometry& g,
                                             std::size_t extent) const {
    const auto start = static_cast<std::ptrdiff_t>(o * stride_) -
                       static_cast<std::ptrdiff_t>(g.pad_begin);
    const auto stop = start + static_cast<std::ptrdiff_t>(kernel_);
    const auto lo = std::max<std::ptrdiff_t>(start, 0);
    const auto hi = std::min<std::ptrdiff_t>(stop, static_cast<std::ptrdiff_t>(extent));
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }

  bool is_max_;
  std::size_t kernel_, stride_;
  Padding padding_;
  std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------

template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kGlobalAvgPool; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "global_avg_pool takes one input");
    require_rank(in[0], 4, "global_avg_pool");
    return {in[0][0], in[0][3]};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const Spatial s = spatial_of(in[0]->shape());
    const std::size_t hw = s.h * s.w;
    out.fill(T{0});
    for (std::size_t b = 0; b < s.batch; ++b) {
      T* dst = out.raw() + b * s.c;
      for (std::size_t p = 0; p < hw; ++p) {
        const T* src = in[0]->raw() + (b * hw + p) * s.c;
        for (std::size_t c = 0; c < s.c; ++c) dst[c] += src[c];
      }
      for (std::size_t c = 0; c < s.c; ++c) dst[c] /= static_cast<T>(hw);
    }
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& /*out*/,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    if (gin[0] == nullptr) return;
    const Spatial s = spatial_of(in[0]->shape());
    const std::size_t hw = s.h * s.w;
    const T inv = T{1} / static_cast<T>(hw);
    for (std::size_t b = 0; b < s.batch; ++b) {
      const T* dy = gout.raw() + b * s.c;
      for (std::size_t p = 0; p < hw; ++p) {
        T* dx = gin[0]->raw() + (b * hw + p) * s.c;
        for (std::size_t c = 0; c < s.c; ++c) dx[c] += dy[c] * inv;
      }
    }
  }
};

// ---------------------------------------------------------------------------

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kFlatten; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1 && in[0].size() >= 2, "flatten takes one batched input");
    return {in[0][0], shape_size(in[0]) / in[0][0]};
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    std::copy_n(in[0]->raw(), out.size(), out.raw());
  }

  void backward(std::span<const Tensor<T>* const> /*in*/, const Tensor<T>& /*out*/,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    if (gin[0] == nullptr) return;
    T* dx = gin[0]->raw();
    for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += gout[i];
  }
};

// ---------------------------------------------------------------------------

// Joins inputs along the last axis; all leading extents must agree.
template <typename T>
class Concat final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kConcat; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() >= 2, "concat needs at least two inputs");
    Shape out = in[0];
    out.back() = 0;
    for (const Shape& s : in) {
      require(s.size() == out.size() &&
                  std::equal(s.begin(), s.end() - 1, out.begin()),
              "concat inputs disagree outside the last axis: " +
                  shape_to_string(in[0]) + " vs " + shape_to_string(s));
      out.back() += s.back();
    }
    return out;
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const std::size_t width = out.shape().back();
    const std::size_t rows = out.size() / width;
    std::size_t offset = 0;
    for (const Tensor<T>* t : in) {
      const std::size_t w = t->shape().back();
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(t->raw() + r * w, w, out.raw() + r * width + offset);
      }
      offset += w;
    }
  }

  void backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    const std::size_t width = out.shape().back();
    const std::size_t rows = out.size() / width;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const std::size_t w = in[i]->shape().back();
      if (gin[i] != nullptr) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* src = gout.raw() + r * width + offset;
          T* dst = gin[i]->raw() + r * w;
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
        }
      }
      offset += w;
    }
  }
};

// ---------------------------------------------------------------------------

template <typename T>
class ResidualAdd final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kResidualAdd; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 2, "residual_add takes two inputs");
    require(in[0] == in[1], "residual_add shapes differ: " +
                                shape_to_string(in[0]) + " vs " +
                                shape_to_string(in[1]));
    return in[0];
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const T* a = in[0]->raw();
    const T* b = in[1]->raw();
    T* y = out.raw();
    for (std::size_t i = 0; i < out.size(); ++i) y[i] = a[i] + b[i];
  }

  void backward(std::span<const Tensor<T>* const> /*in*/, const Tensor<T>& /*out*/,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    for (Tensor<T>* g : gin) {
      if (g == nullptr) continue;
      T* dx = g->raw();
      for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += gout[i];
    }
  }
};

// ---------------------------------------------------------------------------

template <typename T>
class Softmax final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kSoftmax; }

  Shape infer_shape(std::span<const Shape> in) const override {
    require(in.size() == 1, "softmax takes one input");
    require_rank(in[0], 2, "softmax");
    return in[0];
  }

  void forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               bool /*training*/) override {
    const std::size_t k = out.dim(1);
    const std::size_t rows = out.dim(0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = in[0]->raw() + r * k;
      T* y = out.raw() + r * k;
      const T peak = *std::max_element(x, x + k);
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double e = std::exp(static_cast<double>(x[j] - peak));
        y[j] = static_cast<T>(e);
        total += e;
      }
      for (std::size_t j = 0; j < k; ++j) y[j] = static_cast<T>(y[j] / total);
    }
  }

  void backward(std::span<const Tensor<T>* const> /*in*/, const Tensor<T>& out,
                const Tensor<T>& gout,
                std::span<Tensor<T>* const> gin) override {
    if (gin[0] == nullptr) return;
    const std::size_t k = out.dim(1);
    for (std::size_t r = 0; r < out.dim(0); ++r) {
      const T* y = out.raw() + r * k;
      const T* dy = gout.raw() + r * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(dy[j]) * y[j];
      T* dx = gin[0]->raw() + r * k;
      for (std::size_t j = 0; j < k; ++j) dx[j] += static_cast<T>(y[j] * (dy[j] - dot));
    }
  }
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_conv2d(std::size_t in_channels, std::size_t filters,
                                      ConvOptions opts) {
  return std::make_unique<Conv2d<T>>(in_channels, filters, opts);
}
template <typename T>
std::unique_ptr<Layer<T>> make_depthwise_conv2d(std::size_t channels, ConvOptions opts) {
  return std::make_unique<DepthwiseConv2d<T>>(channels, opts);
}
template <typename T>
std::unique_ptr<Layer<T>> make_dense(std::size_t in_features, std::size_t out_features,
                                     bool bias) {
  return std::make_unique<Dense<T>>(in_features, out_features, bias);
}
template <typename T>
std::unique_ptr<Layer<T>> make_batch_norm(std::size_t channels, double momentum,
                                          double epsilon) {
  return std::make_unique<BatchNorm<T>>(channels, momentum, epsilon);
}
template <typename T>
std::unique_ptr<Layer<T>> make_relu(double cap) {
  return std::make_unique<Relu<T>>(cap);
}
template <typename T>
std::unique_ptr<Layer<T>> make_max_pool(std::size_t kernel, std::size_t stride,
                                        Padding padding) {
  return std::make_unique<Pool2d<T>>(true, kernel, stride, padding);
}
template <typename T>
std::unique_ptr<Layer<T>> make_avg_pool(std::size_t kernel, std::size_t stride,
                                        Padding padding) {
  return std::make_unique<Pool2d<T>>(false, kernel, stride, padding);
}
template <typename T>
std::unique_ptr<Layer<T>> make_global_avg_pool() {
  return std::make_unique<GlobalAvgPool<T>>();
}
template <typename T>
std::unique_ptr<Layer<T>> make_flatten() {
  return std::make_unique<Flatten<T>>();
}
template <typename T>
std::unique_ptr<Layer<T>> make_concat() {
  return std::make_unique<Concat<T>>();
}
template <typename T>
std::unique_ptr<Layer<T>> make_residual_add() {
  return std::make_unique<ResidualAdd<T>>();
}
template <typename T>
std::unique_ptr<Layer<T>> make_softmax() {
  return std::make_unique<Softmax<T>>();
}

#define STNET_INSTANTIATE_LAYERS(T)                                                    \
  template std::unique_ptr<Layer<T>> make_conv2d<T>(std::size_t, std::size_t,          \
                                                    ConvOptions);                      \
  template std::unique_ptr<Layer<T>> make_depthwise_conv2d<T>(std::size_t, ConvOptions); \
  template std::unique_ptr<Layer<T>> make_dense<T>(std::size_t, std::size_t, bool);    \
  template std::unique_ptr<Layer<T>> make_batch_norm<T>(std::size_t, double, double);  \
  template std::unique_ptr<Layer<T>> make_relu<T>(double);                             \
  template std::unique_ptr<Layer<T>> make_max_pool<T>(std::size_t, std::size_t,        \
                                                      Padding);                        \
  template std::unique_ptr<Layer<T>> make_avg_pool<T>(std::size_t, std::size_t,        \
                                                      Padding);                        \
  template std::unique_ptr<Layer<T>> make_global_avg_pool<T>();                        \
  template std::unique_ptr<Layer<T>> make_flatten<T>();                                \
  template std::unique_ptr<Layer<T>> make_concat<T>();                                 \
  template std::unique_ptr<Layer<T>> make_residual_add<T>();                           \
  template std::unique_ptr<Layer<T>> make_softmax<T>();

STNET_INSTANTIATE_LAYERS(float)
STNET_INSTANTIATE_LAYERS(double)

#undef STNET_INSTANTIATE_LAYERS

}  // namespace stnet
