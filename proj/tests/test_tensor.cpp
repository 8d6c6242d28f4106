// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "dktrack/tensor.hpp"

using namespace dktrack;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(c, h, w);
  Rng rng(seed);
  fill_uniform(t, rng, lo, hi);
  return t;
}

// Reference convolution: six plain loops, no range precomputation. Written
// independently of the production kernel so the two can disagree.
Tensor conv2d_oracle(const Tensor& in, const ConvSpec& spec) {
  const int oh = (in.height + 2 * spec.padding - spec.kh) / spec.stride + 1;
  const int ow = (in.width + 2 * spec.padding - spec.kw) / spec.stride + 1;
  Tensor out(spec.out_channels, oh, ow);
  for (int oc = 0; oc < spec.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = spec.bias[oc];
        for (int ic = 0; ic < spec.in_channels; ++ic)
          for (int ky = 0; ky < spec.kh; ++ky)
            for (int kx = 0; kx < spec.kw; ++kx) {
              const int iy = oy * spec.stride - spec.padding + ky;
              const int ix = ox * spec.stride - spec.padding + kx;
              if (iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) continue;
              acc += spec.weight(oc, ic, ky, kx) * in(ic, iy, ix);
            }
        out(oc, oy, ox) = acc;
      }
  return out;
}

// Reference transposed convolution written gather-style: for each output
// pixel, sum the input positions that project onto it.
Tensor conv_transpose2d_oracle(const Tensor& in, const ConvSpec& spec, int opad) {
  const int oh = (in.height - 1) * spec.stride - 2 * spec.padding + spec.kh + opad;
  const int ow = (in.width - 1) * spec.stride - 2 * spec.padding + spec.kw + opad;
  Tensor out(spec.out_channels, oh, ow);
  for (int oc = 0; oc < spec.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = spec.bias[oc];
        for (int ic = 0; ic < spec.in_channels; ++ic)
          for (int y = 0; y < in.height; ++y)
            for (int ky = 0; ky < spec.kh; ++ky) {
              if (y * spec.stride - spec.padding + ky != oy) continue;
              for (int x = 0; x < in.width; ++x)
                for (int kx = 0; kx < spec.kw; ++kx) {
                  if (x * spec.stride - spec.padding + kx != ox) continue;
                  acc += in(ic, y, x) * spec.weight(oc, ic, ky, kx);
                }
            }
        out(oc, oy, ox) = acc;
      }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  return (a.data - b.data).abs().maxCoeff();
}

}  // namespace

TEST_CASE("conv2d zero input stays zero with zero bias") {
  Tensor in(2, 6, 6);
  ConvSpec s = make_conv_spec<double>(3, 2, 3, 3, 1, 1, Rng(1), BiasInit::kZero);
  Tensor out = conv2d(in, s);
  CHECK(out.channels == 3);
  CHECK(out.height == 6);
  CHECK(out.width == 6);
  CHECK(out.data.abs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d 1x1 identity kernel reproduces the input") {
  Tensor in = random_tensor(1, 5, 7, 2);
  ConvSpec s;
  s.out_channels = s.in_channels = 1;
  s.kh = s.kw = 1;
  s.stride = 1;
  s.padding = 0;
  s.weights.resize(1);
  s.weights[0] = 1.0;
  s.bias = Eigen::ArrayXd::Zero(1);
  Tensor out = conv2d(in, s);
  CHECK(max_abs_diff(out, in) == 0.0);
}

TEST_CASE("conv2d all-ones 3x3 kernel sums the padded neighborhood") {
  Tensor in = random_tensor(1, 5, 5, 7);
  ConvSpec s;
  s.out_channels = s.in_channels = 1;
  s.kh = s.kw = 3;
  s.stride = 1;
  s.padding = 1;
  s.weights = Eigen::ArrayXd::Ones(9);
  s.bias = Eigen::ArrayXd::Zero(1);
  Tensor out = conv2d(in, s);
  // interior pixel: plain 3x3 sum
  double want = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) want += in(0, 2 + dy, 2 + dx);
  CHECK(out(0, 2, 2) == doctest::Approx(want).epsilon(1e-12));
  // corner pixel: zero padding contributes nothing
  double corner = in(0, 0, 0) + in(0, 0, 1) + in(0, 1, 0) + in(0, 1, 1);
  CHECK(out(0, 0, 0) == doctest::Approx(corner).epsilon(1e-12));
  CHECK(max_abs_diff(out, conv2d_oracle(in, s)) <= 1e-9);
}

TEST_CASE("conv2d matches the six-loop oracle across shapes and strides") {
  struct Case {
    int in_c, h, w, out_c, k, stride, pad;
  };
  const Case cases[] = {
      {3, 8, 8, 4, 3, 1, 1}, {3, 8, 8, 2, 5, 1, 2}, {2, 9, 7, 3, 3, 2, 1},
      {4, 8, 8, 4, 1, 1, 0}, {1, 6, 10, 2, 3, 2, 0}, {2, 16, 16, 2, 16, 16, 0},
  };
  std::uint64_t seed = 100;
  for (const Case& c : cases) {
    Tensor in = random_tensor(c.in_c, c.h, c.w, seed++);
    ConvSpec s = make_conv_spec<double>(c.out_c, c.in_c, c.k, c.k, c.stride, c.pad,
                                        Rng(seed++));
    CHECK(max_abs_diff(conv2d(in, s), conv2d_oracle(in, s)) <= 1e-9);
  }
}

TEST_CASE("conv2d is linear in the input when biases are zero") {
  Tensor x = random_tensor(2, 7, 7, 21);
  Tensor y = random_tensor(2, 7, 7, 22);
  ConvSpec s = make_conv_spec<double>(3, 2, 3, 3, 1, 1, Rng(23), BiasInit::kZero);
  Tensor lhs = conv2d(2.5 * x + (-1.25) * y, s);
  Tensor rhs = 2.5 * conv2d(x, s) + (-1.25) * conv2d(y, s);
  CHECK(max_abs_diff(lhs, rhs) <= 1e-9);
}

TEST_CASE("conv2d rejects mismatched channels and oversized kernels") {
  Tensor in(2, 4, 4);
  ConvSpec s = make_conv_spec<double>(1, 3, 3, 3, 1, 1, Rng(3));
  CHECK_THROWS_AS(conv2d(in, s), std::invalid_argument);
  ConvSpec big = make_conv_spec<double>(1, 2, 7, 7, 1, 0, Rng(4));
  CHECK_THROWS_AS(conv2d(in, big), std::invalid_argument);
}

TEST_CASE("conv_transpose2d matches the gather oracle") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    Tensor in = random_tensor(3, 5, 6, seed);
    ConvSpec s = make_conv_spec<double>(2, 3, 3, 3, 2, 1, Rng(seed + 100));
    Tensor got = conv_transpose2d(in, s, 1);
    Tensor want = conv_transpose2d_oracle(in, s, 1);
    CHECK(max_abs_diff(got, want) <= 1e-9);
    CHECK(got.height == 2 * in.height);
    CHECK(got.width == 2 * in.width);
  }
}

TEST_CASE("conv_transpose2d with a one-hot kernel performs exact nearest-neighbor x2") {
  // separable kernel outer((0,1,1),(0,1,1)) at stride 2, pad 1, opad 1
  Tensor in = random_tensor(1, 4, 4, 50);
  ConvSpec s;
  s.out_channels = s.in_channels = 1;
  s.kh = s.kw = 3;
  s.stride = 2;
  s.padding = 1;
  s.weights.resize(9);
  const double col[3] = {0, 1, 1};
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx) s.weights[ky * 3 + kx] = col[ky] * col[kx];
  s.bias = Eigen::ArrayXd::Zero(1);
  Tensor up = conv_transpose2d(in, s, 1);
  REQUIRE(up.height == 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(up(0, y, x) == in(0, y / 2, x / 2));
}

TEST_CASE("avg_pool2 inverts nearest-neighbor upsampling exactly") {
  Tensor in = random_tensor(2, 4, 6, 60);
  Tensor up(2, 8, 12);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 12; ++x) up(c, y, x) = in(c, y / 2, x / 2);
  Tensor back = avg_pool2(up);
  CHECK(max_abs_diff(back, in) == 0.0);
  Tensor odd(1, 3, 4);
  CHECK_THROWS_AS(avg_pool2(odd), std::invalid_argument);
}

TEST_CASE("global_avg_pool matches a reversed-order summation oracle") {
  Tensor t = random_tensor(4, 8, 8, 11);
  Eigen::VectorXd got = global_avg_pool(t);
  for (int c = 0; c < 4; ++c) {
    double acc = 0;
    for (int y = 7; y >= 0; --y)
      for (int x = 7; x >= 0; --x) acc += t(c, y, x);
    CHECK(got[c] == doctest::Approx(acc / 64.0).epsilon(1e-12));
  }
  Tensor k = Tensor::constant(3, 5, 5, 3.5);
  Eigen::VectorXd m = global_avg_pool(k);
  for (int c = 0; c < 3; ++c) CHECK(m[c] == 3.5);
}

TEST_CASE("resize_bilinear doubles a 2-wide row to the hand-derived values") {
  Tensor in(1, 1, 2);
  in(0, 0, 0) = 0.0;
  in(0, 0, 1) = 2.0;
  Tensor out = resize_bilinear(in, 1, 4);
  // src = (dst + 0.5) / 2 - 0.5, clamped: -0.25->0, 0.25, 0.75, 1.25->1
  CHECK(out(0, 0, 0) == 0.0);
  CHECK(out(0, 0, 1) == 0.5);
  CHECK(out(0, 0, 2) == 1.5);
  CHECK(out(0, 0, 3) == 2.0);
}

TEST_CASE("resize_bilinear at equal size is exact and constants are preserved") {
  Tensor in = random_tensor(3, 6, 9, 70);
  Tensor same = resize_bilinear(in, 6, 9);
  CHECK(max_abs_diff(same, in) == 0.0);
  Tensor k = Tensor::constant(2, 5, 4, -1.75);
  Tensor out = resize_bilinear(k, 13, 7);
  CHECK((out.data + 1.75).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("resize_bilinear interpolates interior points against direct evaluation") {
  Tensor in = random_tensor(1, 4, 4, 71);
  Tensor out = resize_bilinear(in, 8, 8);
  // dst (3,5): src y = (3.5)*0.5-0.5 = 1.25, x = (5.5)*0.5-0.5 = 2.25
  const double y0 = in(0, 1, 2), y0x1 = in(0, 1, 3), y1 = in(0, 2, 2),
               y1x1 = in(0, 2, 3);
  const double top = y0 * 0.75 + y0x1 * 0.25;
  const double bot = y1 * 0.75 + y1x1 * 0.25;
  CHECK(out(0, 3, 5) == doctest::Approx(top * 0.75 + bot * 0.25).epsilon(1e-12));
}

TEST_CASE("l2_normalize handles the 3-4-5 triple and rejects zero with zero epsilon") {
  Eigen::VectorXd v(2);
  v << 3, 4;
  Eigen::VectorXd n = l2_normalize(v, 0.0);
  CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-15));

  Eigen::VectorXd e1(3);
  e1 << 1, 0, 0;
  CHECK((l2_normalize(e1, 0.0) - e1).norm() == 0.0);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(l2_normalize(z, 0.0), std::invalid_argument);
  CHECK(l2_normalize(z, 1e-12).norm() == 0.0);
}

TEST_CASE("l2_normalize gives unit norm and positive-scale invariance") {
  Rng rng(3);
  Eigen::VectorXd v(64);
  for (int i = 0; i < 64; ++i) v[i] = rng.uniform(-1, 1);
  Eigen::VectorXd n = l2_normalize(v, 1e-12);
  CHECK(std::abs(n.norm() - 1.0) <= 1e-6);
  Eigen::VectorXd n2 = l2_normalize((4.0 * v).eval(), 0.0);
  Eigen::VectorXd n0 = l2_normalize(v, 0.0);
  CHECK((n2 - n0).norm() <= 1e-9);
}

TEST_CASE("rng streams are deterministic, split-independent, and in range") {
  Rng a(9, 1), b(9, 1), c(9, 2);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  Rng parent(5);
  Rng s1 = parent.split(1);
  (void)parent.next_double();
  Rng s1_again = Rng(5).split(1);
  for (int i = 0; i < 16; ++i) CHECK(s1.next_u64() == s1_again.next_u64());
  Rng u(77);
  for (int i = 0; i < 1000; ++i) {
    const double d = u.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("make_conv_spec respects the fan-in bound and sign constraints") {
  ConvSpec s = make_conv_spec<double>(8, 4, 3, 3, 1, 1, Rng(31));
  const double bound = 1.0 / std::sqrt(4.0 * 9.0);
  CHECK(s.weights.abs().maxCoeff() <= bound);
  CHECK(s.weights.minCoeff() < 0.0);
  ConvSpec pos = make_conv_spec<double>(4, 4, 3, 3, 1, 1, Rng(32), BiasInit::kZero,
                                        WeightSign::kNonNegative);
  CHECK(pos.weights.minCoeff() >= 0.0);
  CHECK(pos.bias.abs().maxCoeff() == 0.0);
  ConvSpec neg = make_conv_spec<double>(4, 4, 3, 3, 1, 1, Rng(33), BiasInit::kZero,
                                        WeightSign::kNonPositive);
  CHECK(neg.weights.maxCoeff() <= 0.0);
}
