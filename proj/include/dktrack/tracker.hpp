// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "dktrack/bbox.hpp"
#include "dktrack/config.hpp"
#include "dktrack/kernel_encoder.hpp"
#include "dktrack/perceptor.hpp"
#include "dktrack/prompt.hpp"
#include "dktrack/tensor.hpp"

namespace dktrack {

// Residual unit over the token grid: x + b(relu(a(x))).
struct BackboneBlock {
  ConvSpec a;
  ConvSpec b;
};

// Two independent heatmap branches, one per box corner.
struct CornerHead {
  ConvSpec tl_a, tl_b;
  ConvSpec br_a, br_b;
};

// Every learnable weight, a pure function of the config. Equal configs give
// bit-identical models; each component draws from its own fixed stream, so
// toggling one leaves the others' weights untouched.
struct TrackerModel {
  ModelConfig cfg;
  PerceptorStack macro_stack;
  PerceptorStack micro_stack;
  PatchEmbed embed;
  std::vector<BackboneBlock> blocks;
  BackProjection projection;
  GateBank gates;
  CornerHead corner;
};

TrackerModel build_model(const ModelConfig& cfg);

// Square window of the given side centered at (cx, cy), resampled to
// out x out by bilinear interpolation with zero padding outside the frame.
Tensor crop_patch(const Tensor& frame, double cx, double cy, double side, int out);

// Token features for one stream: association matrix (when enabled) plus the
// shared patch embedding.
Tensor encode_stream(const Tensor& img, const TrackerModel& model);

// High-resolution refinement folded back to token resolution.
Tensor refine_tokens(const Tensor& tokens, const TrackerModel& model);

struct TrackerState {
  std::shared_ptr<const TrackerModel> model;
  DirectionalKernel dk;  // unset while the encoder pathway is disabled
  Tensor template_tokens;
  BBox box;
  long frame_index = 0;
};

TrackerState init_tracker(const Tensor& frame, const BBox& box,
                          const ModelConfig& cfg);

struct TrackResult {
  BBox box;
  Tensor tl_map;
  Tensor br_map;
  Eigen::VectorXd last_prompt;  // empty unless the prompt path ran
};

TrackResult track_frame(TrackerState& state, const Tensor& frame);

// Corner heatmaps to a box in token-map coordinates: softmax over all
// positions then the expected coordinate, corners reordered if inverted,
// sides at least two map units.
BBox decode_corners(const Tensor& tl_map, const Tensor& br_map);

struct LossBreakdown {
  double total = 0;
  double l1_term = 0;
  double giou_term = 0;
};

// lambda_l1 * mean absolute corner delta / search_size
//   + lambda_giou * (1 - giou).
LossBreakdown locate_loss(const BBox& pred, const BBox& gt,
                          const ModelConfig& cfg);

}  // namespace dktrack
