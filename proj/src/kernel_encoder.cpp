// SPDX-License-Identifier: Apache-2.0
#include "dktrack/kernel_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace dktrack {

IlluminationEstimator make_illumination_estimator(int channels, const Rng& rng) {
  IlluminationEstimator ie;
  ie.conv_a = make_conv_spec<double>(channels, channels, 3, 3, 1, 1, rng.split(0),
                                     BiasInit::kZero, WeightSign::kNonNegative);
  ie.conv_b = make_conv_spec<double>(channels, channels, 3, 3, 1, 1, rng.split(1),
                                     BiasInit::kZero, WeightSign::kNonPositive);
  return ie;
}

Tensor illumination_gain(const Tensor& f, const IlluminationEstimator& ie) {
  if (ie.conv_a.in_channels != f.channels)
    throw std::invalid_argument("illumination: channel mismatch");
  Tensor g = conv2d(relu(conv2d(f, ie.conv_a)), ie.conv_b);
  for (Eigen::Index i = 0; i < g.data.size(); ++i) g.data[i] = logistic(g.data[i]);
  return g;
}

Tensor illumination_apply(const Tensor& f, const IlluminationEstimator& ie) {
  Tensor out = hadamard(f, illumination_gain(f, ie));
  ensure_finite(out, "illumination_apply");
  return out;
}

namespace {

ProjectionStage make_stage(int channels, bool upsample, const Rng& rng) {
  ProjectionStage s;
  s.upsample = upsample;
  s.resample = make_conv_spec<double>(channels, channels, 3, 3, 2, 1, rng.split(0));
  s.refine1 = make_conv_spec<double>(channels, channels, 3, 3, 1, 1, rng.split(1));
  s.refine2 = make_conv_spec<double>(channels, channels, 3, 3, 1, 1, rng.split(2));
  return s;
}

}  // namespace

ProjectionStage make_upsample_stage(int channels, const Rng& rng) {
  return make_stage(channels, true, rng);
}

ProjectionStage make_downsample_stage(int channels, const Rng& rng) {
  return make_stage(channels, false, rng);
}

Tensor projection_apply(const Tensor& f, const ProjectionStage& stage) {
  Tensor t = stage.upsample ? conv_transpose2d(f, stage.resample, 1)
                            : conv2d(f, stage.resample);
  t = relu(t);
  t = relu(conv2d(t, stage.refine1));
  t = relu(conv2d(t, stage.refine2));
  return t;
}

BackProjection make_back_projection(int channels, int gain_count, const Rng& rng) {
  if (gain_count < 0 || gain_count > 3)
    throw std::invalid_argument("back projection: gain_count must be in [0,3]");
  BackProjection p;
  p.up1 = make_upsample_stage(channels, rng.split(1));
  p.down1 = make_downsample_stage(channels, rng.split(2));
  p.up2 = make_upsample_stage(channels, rng.split(3));
  p.ie1 = make_illumination_estimator(channels, rng.split(4));
  p.ie2 = make_illumination_estimator(channels, rng.split(5));
  p.ie3 = make_illumination_estimator(channels, rng.split(6));
  p.gain_count = gain_count;
  return p;
}

Tensor back_project(const Tensor& f, const BackProjection& p) {
  if (p.up1.resample.in_channels != f.channels)
    throw std::invalid_argument("back projection: channel mismatch");
  if (f.height % 2 != 0 || f.width % 2 != 0)
    throw std::invalid_argument("back projection: spatial dims must be even");
  if (p.gain_count < 0 || p.gain_count > 3)
    throw std::invalid_argument("back projection: gain_count must be in [0,3]");

  Tensor a = projection_apply(f, p.up1);
  if (p.gain_count >= 1) a = illumination_apply(a, p.ie1);

  Tensor r = projection_apply(a, p.down1) - p.beta * f;
  if (p.gain_count >= 2) r = illumination_apply(r, p.ie2);

  Tensor u = projection_apply(r, p.up2);
  if (p.gain_count >= 3) u = illumination_apply(u, p.ie3);

  Tensor out = p.alpha * a + u;
  ensure_finite(out, "back_project");
  return out;
}

int TruncationMask::passed() const {
  int n = 0;
  for (std::uint8_t b : bits) n += b;
  return n;
}

TruncationMask truncation_mask(const Tensor& f) {
  const Eigen::VectorXd means = global_avg_pool(f);
  const double mu = means.mean();
  const double sigma =
      std::sqrt((means.array() - mu).square().sum() / means.size());
  TruncationMask m;
  m.bits.resize(means.size());
  for (int c = 0; c < means.size(); ++c)
    m.bits[c] = std::abs(means[c] - mu) <= 3.0 * sigma ? 1 : 0;
  return m;
}

DirectionalKernel make_directional_kernel(const Tensor& f) {
  DirectionalKernel dk;
  dk.mask = truncation_mask(f);
  dk.values = f;
  for (int c = 0; c < f.channels; ++c)
    if (!dk.mask.bits[c]) dk.values.channel(c).setZero();
  return dk;
}

}  // namespace dktrack
