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

#include "stnet/corruptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stnet/arch.hpp"
#include "stnet/rng.hpp"

namespace stnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct KindInfo {
  CorruptionKind kind;
  std::string_view name;
  bool stochastic;
  SeverityParameter parameter;
};

const std::array<KindInfo, kNumCorruptionKinds> kKinds{{
    {CorruptionKind::kGaussianNoise, "gaussian-noise", true,
     {"sigma", {8, 13, 18, 26, 38}, 0.0, true}},
    {CorruptionKind::kShotNoise, "shot-noise", true,
     {"photons", {500, 250, 100, 75, 50}, kInf, false}},
    {CorruptionKind::kImpulseNoise, "impulse-noise", true,
     {"amount", {0.01, 0.02, 0.03, 0.05, 0.07}, 0.0, true}},
    {CorruptionKind::kSpeckleNoise, "speckle-noise", true,
     {"sigma", {0.06, 0.1, 0.12, 0.16, 0.2}, 0.0, true}},
    {CorruptionKind::kRandomZero, "random-zero", true,
     {"p", {0.05, 0.1, 0.2, 0.3, 0.5}, 0.0, true}},
    {CorruptionKind::kBrightness, "brightness", false,
     {"delta_v", {0.05, 0.1, 0.15, 0.2, 0.3}, 0.0, true}},
    {CorruptionKind::kContrast, "contrast", false,
     {"factor", {0.75, 0.5, 0.4, 0.3, 0.15}, 1.0, false}},
    {CorruptionKind::kSaturate, "saturate", false,
     {"factor", {1.5, 2, 2.5, 3, 4}, 1.0, true}},
    {CorruptionKind::kGaussianBlur, "gaussian-blur", false,
     {"sigma", {0.4, 0.6, 0.7, 0.8, 1.0}, 0.0, true}},
    {CorruptionKind::kDefocusBlur, "defocus-blur", false,
     {"radius", {0.5, 1, 1.5, 2, 2.5}, 0.0, true}},
    {CorruptionKind::kMotionBlur, "motion-blur", false,
     {"length", {3, 5, 7, 9, 11}, 1.0, true}},
    {CorruptionKind::kZoomBlur, "zoom-blur", false,
     {"max_zoom", {1.06, 1.11, 1.16, 1.21, 1.26}, 1.0, true}},
    {CorruptionKind::kPixelate, "pixelate", false,
     {"factor", {0.95, 0.9, 0.85, 0.75, 0.65}, 1.0, false}},
    {CorruptionKind::kElasticTransform, "elastic-transform", true,
     {"alpha", {0.5, 1, 1.5, 2, 2.5}, 0.0, true}},
}};

const KindInfo& info(CorruptionKind kind) {
  return kKinds.at(static_cast<std::size_t>(kind));
}

// Working buffer: (H, W, 3) doubles on the 0..255 scale.
struct Buf {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  double& at(std::size_t y, std::size_t x, std::size_t c) { return v[(y * w + x) * 3 + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return v[(y * w + x) * 3 + c]; }
};

Buf to_buf(const Image& image) {
  Buf b{image.dim(0), image.dim(1), std::vector<double>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i) b.v[i] = image[i];
  return b;
}

Image from_buf(const Buf& b) {
  Image out({b.h, b.w, 3});
  for (std::size_t i = 0; i < b.v.size(); ++i) out[i] = to_u8(b.v[i]);
  return out;
}

// Mirror without repeating the edge sample.
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

double sample(const Buf& b, double y, double x, std::size_t c) {
  const double fy = std::floor(y), fx = std::floor(x);
  const double ty = y - fy, tx = x - fx;
  const auto h = static_cast<std::ptrdiff_t>(b.h), w = static_cast<std::ptrdiff_t>(b.w);
  const auto y0 = static_cast<std::ptrdiff_t>(fy), x0 = static_cast<std::ptrdiff_t>(fx);
  auto px = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
    return b.at(static_cast<std::size_t>(reflect(yy, h)), static_cast<std::size_t>(reflect(xx, w)), c);
  };
  double top = px(y0, x0);
  double bottom = px(y0 + 1, x0);
  if (tx != 0.0) {
    top = top * (1 - tx) + px(y0, x0 + 1) * tx;
    bottom = bottom * (1 - tx) + px(y0 + 1, x0 + 1) * tx;
  }
  return ty != 0.0 ? top * (1 - ty) + bottom * ty : top;
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution over the first `channels` interleaved planes.
void separable(std::vector<double>& v, std::size_t h, std::size_t w, std::size_t channels,
               const std::vector<double>& k) {
  const auto r = static_cast<std::ptrdiff_t>(k.size() / 2);
  std::vector<double> tmp(v.size());
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -r; i <= r; ++i) {
          acc += k[static_cast<std::size_t>(i + r)] *
                 v[static_cast<std::size_t>(y * W + reflect(x + i, W)) * channels + c];
        }
        tmp[static_cast<std::size_t>(y * W + x) * channels + c] = acc;
      }
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -r; i <= r; ++i) {
          acc += k[static_cast<std::size_t>(i + r)] *
                 tmp[static_cast<std::size_t>(reflect(y + i, H) * W + x) * channels + c];
        }
        v[static_cast<std::size_t>(y * W + x) * channels + c] = acc;
      }
}

void convolve2d(Buf& b, const std::vector<double>& k, std::ptrdiff_t r) {
  const auto H = static_cast<std::ptrdiff_t>(b.h), W = static_cast<std::ptrdiff_t>(b.w);
  const std::ptrdiff_t side = 2 * r + 1;
  Buf out = b;
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -r; i <= r; ++i)
          for (std::ptrdiff_t j = -r; j <= r; ++j) {
            acc += k[static_cast<std::size_t>((i + r) * side + j + r)] *
                   b.at(static_cast<std::size_t>(reflect(y + i, H)),
                        static_cast<std::size_t>(reflect(x + j, W)), c);
          }
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc;
      }
  b = std::move(out);
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
    if (h < 0) h += 6.0;
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  double rr = 0, gg = 0, bb = 0;
  switch (static_cast<int>(h) % 6) {
    case 0: rr = c; gg = x; break;
    case 1: rr = x; gg = c; break;
    case 2: gg = c; bb = x; break;
    case 3: gg = x; bb = c; break;
    case 4: rr = x; bb = c; break;
    default: rr = c; bb = x; break;
  }
  r = rr + m;
  g = gg + m;
  b = bb + m;
}

template <typename F>
void map_hsv(Buf& b, F f) {
  for (std::size_t p = 0; p < b.h * b.w; ++p) {
    double* px = &b.v[3 * p];
    double h, s, v;
    rgb_to_hsv(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0, h, s, v);
    f(s, v);
    s = std::clamp(s, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    double r, g, bl;
    hsv_to_rgb(h, s, v, r, g, bl);
    px[0] = r * 255.0;
    px[1] = g * 255.0;
    px[2] = bl * 255.0;
  }
}

void gaussian_noise(Buf& b, double sigma, Rng& rng) {
  for (double& x : b.v) x += rng.normal(0.0, sigma);
}

void shot_noise(Buf& b, double photons, Rng& rng) {
  if (std::isinf(photons)) return;
  for (double& x : b.v) {
    x = static_cast<double>(rng.poisson(x / 255.0 * photons)) / photons * 255.0;
  }
}

void impulse_noise(Buf& b, double amount, Rng& rng) {
  for (double& x : b.v) {
    if (rng.uniform() < amount) x = rng.bernoulli(0.5) ? 255.0 : 0.0;
  }
}

void speckle_noise(Buf& b, double sigma, Rng& rng) {
  for (double& x : b.v) x += x * rng.normal(0.0, sigma);
}

void contrast(Buf& b, double factor) {
  const double n = static_cast<double>(b.h * b.w);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t p = 0; p < b.h * b.w; ++p) mean += b.v[3 * p + c];
    mean /= n;
    for (std::size_t p = 0; p < b.h * b.w; ++p) {
      double& x = b.v[3 * p + c];
      x = (x - mean) * factor + mean;
    }
  }
}

void gaussian_blur(Buf& b, double sigma) {
  if (sigma <= 0.0) return;
  separable(b.v, b.h, b.w, 3, gaussian_kernel(sigma));
}

// Disk kernel with partial-coverage weights from 16x16 supersampling.
void defocus_blur(Buf& b, double radius) {
  if (radius <= 0.0) return;
  const auto r = static_cast<std::ptrdiff_t>(std::ceil(radius));
  const std::ptrdiff_t side = 2 * r + 1;
  constexpr int kSub = 16;
  std::vector<double> k(static_cast<std::size_t>(side * side));
  double sum = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i)
    for (std::ptrdiff_t j = -r; j <= r; ++j) {
      int inside = 0;
      for (int u = 0; u < kSub; ++u)
        for (int v = 0; v < kSub; ++v) {
          const double y = static_cast<double>(i) - 0.5 + (u + 0.5) / kSub;
          const double x = static_cast<double>(j) - 0.5 + (v + 0.5) / kSub;
          if (x * x + y * y <= radius * radius) ++inside;
        }
      const double wgt = static_cast<double>(inside) / (kSub * kSub);
      k[static_cast<std::size_t>((i + r) * side + j + r)] = wgt;
      sum += wgt;
    }
  for (double& v : k) v /= sum;
  convolve2d(b, k, r);
}

// Horizontal line kernel of the given length, centered on the pixel.
void motion_blur(Buf& b, double length) {
  const long taps = std::lround(length);
  if (taps <= 1) return;
  const Buf src = b;
  const double span = length - 1.0;
  for (std::size_t y = 0; y < b.h; ++y)
    for (std::size_t x = 0; x < b.w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (long t = 0; t < taps; ++t) {
          const double off = -span / 2.0 + span * static_cast<double>(t) / static_cast<double>(taps - 1);
          acc += sample(src, static_cast<double>(y), static_cast<double>(x) + off, c);
        }
        b.at(y, x, c) = acc / static_cast<double>(taps);
      }
}

// Mean of the image and its center zooms at 1, 1.01, ... below max_zoom.
void zoom_blur(Buf& b, double max_zoom) {
  const long count = std::lround((max_zoom - 1.0) / 0.01);
  if (count <= 0) return;
  const Buf src = b;
  const double cy = (static_cast<double>(b.h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(b.w) - 1.0) / 2.0;
  for (std::size_t y = 0; y < b.h; ++y)
    for (std::size_t x = 0; x < b.w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = src.at(y, x, c);
        for (long i = 0; i < count; ++i) {
          const double z = 1.0 + 0.01 * static_cast<double>(i);
          acc += sample(src, cy + (static_cast<double>(y) - cy) / z,
                        cx + (static_cast<double>(x) - cx) / z, c);
        }
        b.at(y, x, c) = acc / static_cast<double>(count + 1);
      }
}

// Area-average resample of one axis from n to m samples.
std::vector<std::vector<std::pair<std::size_t, double>>> area_weights(std::size_t n, std::size_t m) {
  std::vector<std::vector<std::pair<std::size_t, double>>> out(m);
  const double step = static_cast<double>(n) / static_cast<double>(m);
  for (std::size_t o = 0; o < m; ++o) {
    const double lo = static_cast<double>(o) * step, hi = lo + step;
    for (auto i = static_cast<std::size_t>(std::floor(lo)); i < n && static_cast<double>(i) < hi; ++i) {
      const double overlap =
          std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) out[o].push_back({i, overlap / step});
    }
  }
  return out;
}

void pixelate(Buf& b, double factor) {
  const std::size_t sh = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(b.h) * factor + 1e-9));
  const std::size_t sw = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(b.w) * factor + 1e-9));
  if (sh >= b.h && sw >= b.w) return;
  const auto wy = area_weights(b.h, sh), wx = area_weights(b.w, sw);
  std::vector<double> small(sh * sw * 3, 0.0);
  for (std::size_t oy = 0; oy < sh; ++oy)
    for (std::size_t ox = 0; ox < sw; ++ox)
      for (const auto& [iy, ay] : wy[oy])
        for (const auto& [ix, ax] : wx[ox])
          for (std::size_t c = 0; c < 3; ++c) small[(oy * sw + ox) * 3 + c] += ay * ax * b.at(iy, ix, c);
  for (std::size_t y = 0; y < b.h; ++y) {
    const std::size_t sy = std::min(sh - 1, (2 * y + 1) * sh / (2 * b.h));
    for (std::size_t x = 0; x < b.w; ++x) {
      const std::size_t sx = std::min(sw - 1, (2 * x + 1) * sw / (2 * b.w));
      for (std::size_t c = 0; c < 3; ++c) b.at(y, x, c) = small[(sy * sw + sx) * 3 + c];
    }
  }
}

// Displacement field: uniform noise smoothed with sigma 3, rescaled so the
// largest component is alpha pixels.
void elastic(Buf& b, double alpha, Rng& rng) {
  constexpr double kSigma = 3.0;
  const std::size_t n = b.h * b.w;
  std::vector<double> field(2 * n);
  for (std::size_t i = 0; i < n; ++i) field[2 * i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) field[2 * i + 1] = rng.uniform(-1.0, 1.0);
  if (alpha == 0.0) return;
  separable(field, b.h, b.w, 2, gaussian_kernel(kSigma));
  double peak = 0.0;
  for (double v : field) peak = std::max(peak, std::fabs(v));
  if (peak == 0.0) return;
  const Buf src = b;
  for (std::size_t y = 0; y < b.h; ++y)
    for (std::size_t x = 0; x < b.w; ++x) {
      const double dy = field[2 * (y * b.w + x)] / peak * alpha;
      const double dx = field[2 * (y * b.w + x) + 1] / peak * alpha;
      for (std::size_t c = 0; c < 3; ++c) {
        b.at(y, x, c) = sample(src, static_cast<double>(y) + dy, static_cast<double>(x) + dx, c);
      }
    }
}

}  // namespace

const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds() {
  static const auto kinds = [] {
    std::array<CorruptionKind, kNumCorruptionKinds> out{};
    for (std::size_t i = 0; i < kNumCorruptionKinds; ++i) out[i] = kKinds[i].kind;
    return out;
  }();
  return kinds;
}

std::string_view corruption_name(CorruptionKind kind) { return info(kind).name; }

std::optional<CorruptionKind> parse_corruption(std::string_view text) {
  for (const KindInfo& k : kKinds) {
    if (k.name == text) return k.kind;
  }
  return std::nullopt;
}

std::string corruption_names_list() {
  std::string out;
  for (const KindInfo& k : kKinds) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

bool is_stochastic(CorruptionKind kind) { return info(kind).stochastic; }

const SeverityParameter& severity_parameter(CorruptionKind kind) { return info(kind).parameter; }

std::string severity_table_csv() {
  std::ostringstream out;
  out << "kind,severity,parameter,value\n";
  for (const KindInfo& k : kKinds) {
    for (int s = 1; s <= kMaxSeverity; ++s) {
      out << k.name << ',' << s << ',' << k.parameter.name << ','
          << format_real(k.parameter.values[static_cast<std::size_t>(s - 1)]) << '\n';
    }
  }
  return out.str();
}

double Corruption::strength() const {
  if (severity < 1 || severity > kMaxSeverity) {
    throw std::invalid_argument("severity must be in 1..5, got " + std::to_string(severity));
  }
  if (parameter) return *parameter;
  return severity_parameter(kind).values[static_cast<std::size_t>(severity - 1)];
}

std::string Corruption::tag() const {
  std::string t = std::string(corruption_name(kind)) + "/" + std::to_string(severity) +
                  "/seed=" + std::to_string(seed);
  if (parameter) t += "/" + std::string(severity_parameter(kind).name) + "=" + format_real(*parameter);
  return t;
}

Image apply(const Image& image, const Corruption& corruption) {
  check_rgb(image);
  const double p = corruption.strength();
  Rng rng(corruption.seed);
  Buf b = to_buf(image);
  switch (corruption.kind) {
    case CorruptionKind::kGaussianNoise: gaussian_noise(b, p, rng); break;
    case CorruptionKind::kShotNoise: shot_noise(b, p, rng); break;
    case CorruptionKind::kImpulseNoise: impulse_noise(b, p, rng); break;
    case CorruptionKind::kSpeckleNoise: speckle_noise(b, p, rng); break;
    case CorruptionKind::kRandomZero: return random_zero(image, p, corruption.seed);
    case CorruptionKind::kBrightness:
      if (p == 0.0) return image;
      map_hsv(b, [p](double&, double& v) { v += p; });
      break;
    case CorruptionKind::kContrast: contrast(b, p); break;
    case CorruptionKind::kSaturate:
      if (p == 1.0) return image;
      map_hsv(b, [p](double& s, double&) { s *= p; });
      break;
    case CorruptionKind::kGaussianBlur: gaussian_blur(b, p); break;
    case CorruptionKind::kDefocusBlur: defocus_blur(b, p); break;
    case CorruptionKind::kMotionBlur: motion_blur(b, p); break;
    case CorruptionKind::kZoomBlur: zoom_blur(b, p); break;
    case CorruptionKind::kPixelate: pixelate(b, p); break;
    case CorruptionKind::kElasticTransform: elastic(b, p, rng); break;
  }
  return from_buf(b);
}

Image random_zero(const Image& image, double p, std::uint64_t seed) {
  check_rgb(image);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("random_zero probability must be in [0, 1]");
  }
  Rng rng(seed);
  Image out = image;
  const std::size_t pixels = image.dim(0) * image.dim(1);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (rng.uniform() < p) {
      out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = 0;
    }
  }
  return out;
}

LabeledImageSet corrupt_set(const LabeledImageSet& images, const Corruption& corruption) {
  LabeledImageSet out(images.height(), images.width(), images.channels());
  out.set_provenance(corruption.tag());
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Corruption c = corruption;
    c.seed = corruption.seed ^ static_cast<std::uint64_t>(i);
    out.push_back(apply(images.image(i), c), images.label(i), images.id(i));
  }
  return out;
}

}  // namespace stnet
