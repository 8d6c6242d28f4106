// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "dktrack/rng.hpp"

namespace dktrack {

// Dense C x H x W tensor, channel-major rows of contiguous width. 64-bit
// scalars by default; the template keeps the core reusable at other widths.
template <typename Scalar>
struct TensorT {
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using ChannelMap =
      Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstChannelMap =
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  int channels = 0;
  int height = 0;
  int width = 0;
  Storage data;

  TensorT() = default;

  TensorT(int c, int h, int w) : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0)
      throw std::invalid_argument("tensor dims must be positive");
    data = Storage::Zero(static_cast<Eigen::Index>(c) * h * w);
  }

  static TensorT constant(int c, int h, int w, Scalar value) {
    TensorT t(c, h, w);
    t.data.setConstant(value);
    return t;
  }

  Eigen::Index size() const { return data.size(); }

  Scalar& operator()(int c, int y, int x) {
    return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
  }
  Scalar operator()(int c, int y, int x) const {
    return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
  }

  Scalar* channel_ptr(int c) {
    return data.data() + static_cast<Eigen::Index>(c) * height * width;
  }
  const Scalar* channel_ptr(int c) const {
    return data.data() + static_cast<Eigen::Index>(c) * height * width;
  }

  ChannelMap channel(int c) { return ChannelMap(channel_ptr(c), height, width); }
  ConstChannelMap channel(int c) const {
    return ConstChannelMap(channel_ptr(c), height, width);
  }

  bool same_shape(const TensorT& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

using Tensor = TensorT<double>;

template <typename Scalar>
void ensure_finite(const TensorT<Scalar>& t, const char* what) {
  if (!t.data.allFinite())
    throw std::domain_error(std::string(what) + ": non-finite value produced");
}

template <typename Scalar>
void require_same_shape(const TensorT<Scalar>& a, const TensorT<Scalar>& b,
                        const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

template <typename Scalar>
TensorT<Scalar> operator+(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  require_same_shape(a, b, "tensor add");
  TensorT<Scalar> r = a;
  r.data += b.data;
  return r;
}

template <typename Scalar>
TensorT<Scalar> operator-(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  require_same_shape(a, b, "tensor sub");
  TensorT<Scalar> r = a;
  r.data -= b.data;
  return r;
}

template <typename Scalar>
TensorT<Scalar> operator*(Scalar s, const TensorT<Scalar>& t) {
  TensorT<Scalar> r = t;
  r.data *= s;
  return r;
}

template <typename Scalar>
TensorT<Scalar> hadamard(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  require_same_shape(a, b, "hadamard");
  TensorT<Scalar> r = a;
  r.data *= b.data;
  return r;
}

template <typename Scalar>
TensorT<Scalar> relu(const TensorT<Scalar>& t) {
  TensorT<Scalar> r = t;
  r.data = r.data.max(Scalar(0));
  return r;
}

template <typename Scalar>
void fill_uniform(TensorT<Scalar>& t, Rng& rng, Scalar lo, Scalar hi) {
  for (Eigen::Index i = 0; i < t.data.size(); ++i)
    t.data[i] = static_cast<Scalar>(rng.uniform(lo, hi));
}

// 2D convolution bank. Weight layout is (out, in, ky, kx) flattened; biases
// are one per output channel.
template <typename Scalar>
struct ConvSpecT {
  int out_channels = 0;
  int in_channels = 0;
  int kh = 0;
  int kw = 0;
  int stride = 1;
  int padding = 0;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> weights;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> bias;

  Scalar weight(int o, int i, int ky, int kx) const {
    return weights[((static_cast<Eigen::Index>(o) * in_channels + i) * kh + ky) * kw + kx];
  }
  Scalar& weight(int o, int i, int ky, int kx) {
    return weights[((static_cast<Eigen::Index>(o) * in_channels + i) * kh + ky) * kw + kx];
  }

  void validate() const {
    if (out_channels <= 0 || in_channels <= 0 || kh <= 0 || kw <= 0)
      throw std::invalid_argument("conv spec: non-positive dims");
    if (stride <= 0) throw std::invalid_argument("conv spec: stride must be positive");
    if (padding < 0) throw std::invalid_argument("conv spec: negative padding");
    if (weights.size() !=
        static_cast<Eigen::Index>(out_channels) * in_channels * kh * kw)
      throw std::invalid_argument("conv spec: weight count mismatch");
    if (bias.size() != out_channels)
      throw std::invalid_argument("conv spec: bias count mismatch");
  }
};

using ConvSpec = ConvSpecT<double>;

enum class BiasInit { kZero, kUniform };
enum class WeightSign { kSigned, kNonNegative, kNonPositive };

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], fan_in = in*kh*kw.
// Sign-constrained variants keep |w| inside the same bound.
template <typename Scalar>
ConvSpecT<Scalar> make_conv_spec(int out_channels, int in_channels, int kh, int kw,
                                 int stride, int padding, Rng rng,
                                 BiasInit bias_init = BiasInit::kUniform,
                                 WeightSign sign = WeightSign::kSigned) {
  ConvSpecT<Scalar> s;
  s.out_channels = out_channels;
  s.in_channels = in_channels;
  s.kh = kh;
  s.kw = kw;
  s.stride = stride;
  s.padding = padding;
  const Eigen::Index nw =
      static_cast<Eigen::Index>(out_channels) * in_channels * kh * kw;
  s.weights.resize(nw);
  const Scalar bound =
      Scalar(1) / std::sqrt(static_cast<Scalar>(in_channels) * kh * kw);
  for (Eigen::Index i = 0; i < nw; ++i) {
    Scalar v = static_cast<Scalar>(rng.uniform(-bound, bound));
    if (sign == WeightSign::kNonNegative) v = std::abs(v);
    if (sign == WeightSign::kNonPositive) v = -std::abs(v);
    s.weights[i] = v;
  }
  s.bias.resize(out_channels);
  for (int o = 0; o < out_channels; ++o)
    s.bias[o] = bias_init == BiasInit::kUniform
                    ? static_cast<Scalar>(rng.uniform(-bound, bound))
                    : Scalar(0);
  s.validate();
  return s;
}

namespace detail {
inline int ceil_div(int a, int b) {  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}
inline int floor_div(int a, int b) {  // b > 0
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}
}  // namespace detail

// Cross-correlation with zero padding. Accumulation order over (in, ky, kx)
// is fixed, so results are bit-stable across runs.
template <typename Scalar>
TensorT<Scalar> conv2d(const TensorT<Scalar>& input, const ConvSpecT<Scalar>& spec) {
  spec.validate();
  if (spec.in_channels != input.channels)
    throw std::invalid_argument("conv2d: input channels do not match spec");
  const int h_num = input.height + 2 * spec.padding - spec.kh;
  const int w_num = input.width + 2 * spec.padding - spec.kw;
  if (h_num < 0 || w_num < 0)
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  const int oh = h_num / spec.stride + 1;
  const int ow = w_num / spec.stride + 1;

  TensorT<Scalar> out(spec.out_channels, oh, ow);
  const int H = input.height, W = input.width;
  const int s = spec.stride, p = spec.padding;
  for (int oc = 0; oc < spec.out_channels; ++oc) {
    Scalar* out_ch = out.channel_ptr(oc);
    const Scalar b = spec.bias[oc];
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(oh) * ow; ++i)
      out_ch[i] = b;
    for (int ic = 0; ic < spec.in_channels; ++ic) {
      const Scalar* in_ch = input.channel_ptr(ic);
      for (int ky = 0; ky < spec.kh; ++ky) {
        for (int kx = 0; kx < spec.kw; ++kx) {
          const Scalar w = spec.weight(oc, ic, ky, kx);
          const int ox_lo = std::max(0, detail::ceil_div(p - kx, s));
          const int ox_hi = std::min(ow - 1, detail::floor_div(W - 1 + p - kx, s));
          if (ox_hi < ox_lo) continue;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s - p + ky;
            if (iy < 0 || iy >= H) continue;
            const Scalar* in_row = in_ch + static_cast<Eigen::Index>(iy) * W;
            Scalar* out_row = out_ch + static_cast<Eigen::Index>(oy) * ow;
            const int base = kx - p;
            for (int ox = ox_lo; ox <= ox_hi; ++ox)
              out_row[ox] += w * in_row[ox * s + base];
          }
        }
      }
    }
  }
  ensure_finite(out, "conv2d");
  return out;
}

// Transposed convolution (gradient of conv2d w.r.t. its input, plus bias).
// output = (in - 1) * stride - 2 * padding + k + output_padding.
template <typename Scalar>
TensorT<Scalar> conv_transpose2d(const TensorT<Scalar>& input,
                                 const ConvSpecT<Scalar>& spec, int output_padding) {
  spec.validate();
  if (spec.in_channels != input.channels)
    throw std::invalid_argument("conv_transpose2d: input channels do not match spec");
  if (output_padding < 0 || output_padding >= spec.stride)
    throw std::invalid_argument("conv_transpose2d: output_padding must be in [0, stride)");
  const int oh =
      (input.height - 1) * spec.stride - 2 * spec.padding + spec.kh + output_padding;
  const int ow =
      (input.width - 1) * spec.stride - 2 * spec.padding + spec.kw + output_padding;
  if (oh <= 0 || ow <= 0)
    throw std::invalid_argument("conv_transpose2d: empty output");

  TensorT<Scalar> out(spec.out_channels, oh, ow);
  const int s = spec.stride, p = spec.padding;
  for (int oc = 0; oc < spec.out_channels; ++oc) {
    Scalar* out_ch = out.channel_ptr(oc);
    const Scalar b = spec.bias[oc];
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(oh) * ow; ++i)
      out_ch[i] = b;
    for (int ic = 0; ic < spec.in_channels; ++ic) {
      const Scalar* in_ch = input.channel_ptr(ic);
      for (int y = 0; y < input.height; ++y) {
        for (int ky = 0; ky < spec.kh; ++ky) {
          const int oy = y * s - p + ky;
          if (oy < 0 || oy >= oh) continue;
          const Scalar* in_row = in_ch + static_cast<Eigen::Index>(y) * input.width;
          Scalar* out_row = out_ch + static_cast<Eigen::Index>(oy) * ow;
          for (int x = 0; x < input.width; ++x) {
            const Scalar v = in_row[x];
            for (int kx = 0; kx < spec.kw; ++kx) {
              const int ox = x * s - p + kx;
              if (ox < 0 || ox >= ow) continue;
              out_row[ox] += v * spec.weight(oc, ic, ky, kx);
            }
          }
        }
      }
    }
  }
  ensure_finite(out, "conv_transpose2d");
  return out;
}

// 2x2 mean pooling; spatial dims must be even.
template <typename Scalar>
TensorT<Scalar> avg_pool2(const TensorT<Scalar>& input) {
  if (input.height % 2 != 0 || input.width % 2 != 0)
    throw std::invalid_argument("avg_pool2: spatial dims must be even");
  TensorT<Scalar> out(input.channels, input.height / 2, input.width / 2);
  for (int c = 0; c < input.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        out(c, y, x) = (input(c, 2 * y, 2 * x) + input(c, 2 * y, 2 * x + 1) +
                        input(c, 2 * y + 1, 2 * x) + input(c, 2 * y + 1, 2 * x + 1)) *
                       Scalar(0.25);
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> global_avg_pool(const TensorT<Scalar>& input) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> means(input.channels);
  const Scalar inv = Scalar(1) / (static_cast<Scalar>(input.height) * input.width);
  for (int c = 0; c < input.channels; ++c) means[c] = input.channel(c).sum() * inv;
  return means;
}

// Bilinear resize with the half-pixel (align-corners-false) source mapping:
// src = (dst + 0.5) * in/out - 0.5, clamped to the valid index range. Equal
// sizes reproduce the input exactly.
template <typename Scalar>
TensorT<Scalar> resize_bilinear(const TensorT<Scalar>& input, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("resize_bilinear: output dims must be positive");
  TensorT<Scalar> out(input.channels, out_h, out_w);
  const Scalar sy = static_cast<Scalar>(input.height) / out_h;
  const Scalar sx = static_cast<Scalar>(input.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    Scalar fy = (y + Scalar(0.5)) * sy - Scalar(0.5);
    fy = std::min(std::max(fy, Scalar(0)), static_cast<Scalar>(input.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, input.height - 1);
    const Scalar wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      Scalar fx = (x + Scalar(0.5)) * sx - Scalar(0.5);
      fx = std::min(std::max(fx, Scalar(0)), static_cast<Scalar>(input.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, input.width - 1);
      const Scalar wx = fx - x0;
      for (int c = 0; c < input.channels; ++c) {
        const Scalar top =
            input(c, y0, x0) * (Scalar(1) - wx) + input(c, y0, x1) * wx;
        const Scalar bot =
            input(c, y1, x0) * (Scalar(1) - wx) + input(c, y1, x1) * wx;
        out(c, y, x) = top * (Scalar(1) - wy) + bot * wy;
      }
    }
  }
  ensure_finite(out, "resize_bilinear");
  return out;
}

// v / sqrt(|v|^2 + epsilon). A zero vector with zero epsilon has no defined
// direction and is rejected.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> l2_normalize(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, Scalar epsilon) {
  if (epsilon < 0) throw std::invalid_argument("l2_normalize: negative epsilon");
  const Scalar q = v.squaredNorm() + epsilon;
  if (q <= Scalar(0))
    throw std::invalid_argument("l2_normalize: zero vector with zero epsilon");
  return v / std::sqrt(q);
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace dktrack
