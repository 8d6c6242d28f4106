// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dktrack/tensor.hpp"

namespace dktrack {

// Two-layer multiplicative gain in (0,1). conv_a is initialized nonnegative
// and conv_b nonpositive (zero biases), so the estimated gain decreases
// monotonically with local brightness: bright regions are suppressed harder.
struct IlluminationEstimator {
  ConvSpec conv_a;
  ConvSpec conv_b;
};

IlluminationEstimator make_illumination_estimator(int channels, const Rng& rng);

// gain = logistic(conv_b(relu(conv_a(f)))); output = f * gain.
Tensor illumination_gain(const Tensor& f, const IlluminationEstimator& ie);
Tensor illumination_apply(const Tensor& f, const IlluminationEstimator& ie);

// One projection stage: a resampling conv (transposed x2 up, or strided /2
// down) followed by two same-size 3x3 convs, rectification after each layer.
struct ProjectionStage {
  ConvSpec resample;
  ConvSpec refine1;
  ConvSpec refine2;
  bool upsample = true;
};

ProjectionStage make_upsample_stage(int channels, const Rng& rng);
ProjectionStage make_downsample_stage(int channels, const Rng& rng);
Tensor projection_apply(const Tensor& f, const ProjectionStage& stage);

// Back-projection parameters. Three gain slots in pipeline order; gain_count
// in [0,3] activates a prefix of them, everything else stays fixed so gain
// ablations share identical conv weights.
struct BackProjection {
  ProjectionStage up1;
  ProjectionStage down1;
  ProjectionStage up2;
  IlluminationEstimator ie1;  // on the first upsample output
  IlluminationEstimator ie2;  // on the residual before the second upsample
  IlluminationEstimator ie3;  // on the second upsample output
  double alpha = 1.0;
  double beta = 0.5;
  int gain_count = 2;
};

BackProjection make_back_projection(int channels, int gain_count, const Rng& rng);

// C x H x W -> C x 2H x 2W high-resolution features:
//   a = gain1(up1(f)); r = gain2(down1(a) - beta * f); out = alpha * a + gain3(up2(r)).
Tensor back_project(const Tensor& f, const BackProjection& p);

// Per-channel keep bits from the three-sigma rule over channel means.
struct TruncationMask {
  std::vector<std::uint8_t> bits;
  int passed() const;
};

// Population statistics over global-average channel means; channels within
// three sigma of the mean (ties kept) pass.
TruncationMask truncation_mask(const Tensor& f);

// Template-side directional kernel: masked channels zeroed, survivors copied
// bit-identically.
struct DirectionalKernel {
  Tensor values;
  TruncationMask mask;
};

DirectionalKernel make_directional_kernel(const Tensor& f);

}  // namespace dktrack
