// SPDX-License-Identifier: Apache-2.0
#include "dktrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dktrack/metrics.hpp"

namespace dktrack {

void ModelConfig::validate() const {
  if (patch <= 0) throw std::invalid_argument("config: patch must be positive");
  if (template_size <= 0 || template_size % patch != 0)
    throw std::invalid_argument("config: template_size must be a positive multiple of patch");
  if (search_size <= 0 || search_size % patch != 0)
    throw std::invalid_argument("config: search_size must be a positive multiple of patch");
  // The refinement path halves and doubles the token grid, so it must be even.
  if ((template_size / patch) % 2 != 0 || (search_size / patch) % 2 != 0)
    throw std::invalid_argument("config: token grids must have even sides");
  if (embed_ch <= 0) throw std::invalid_argument("config: embed_ch must be positive");
  if (backbone_blocks < 0)
    throw std::invalid_argument("config: backbone_blocks must be non-negative");
  int prev = -1;
  for (int idx : inject_after) {
    if (idx < 0 || idx >= backbone_blocks)
      throw std::invalid_argument("config: inject_after index out of range");
    if (idx <= prev)
      throw std::invalid_argument("config: inject_after must be strictly increasing");
    prev = idx;
  }
  if (gate_groups < 1 || gate_groups > embed_ch)
    throw std::invalid_argument("config: gate_groups must be in [1, embed_ch]");
  if (gain_count < 0 || gain_count > 3)
    throw std::invalid_argument("config: gain_count must be in [0, 3]");
  if (!(lambda_l1 >= 0) || !(lambda_giou >= 0))
    throw std::invalid_argument("config: loss weights must be non-negative");
  if (!(epsilon >= 0)) throw std::invalid_argument("config: epsilon must be non-negative");
  if (!(tau > 0)) throw std::invalid_argument("config: tau must be positive");
  if (!(rho_floor > 0)) throw std::invalid_argument("config: rho_floor must be positive");
  if (!(context_factor > 0))
    throw std::invalid_argument("config: context_factor must be positive");
  if (use_prompt && !use_encoder)
    throw std::invalid_argument("config: the prompt path requires the encoder");
}

namespace {

// Fixed weight streams. New components get new indices; existing ones never
// move, so a config toggle cannot shift another component's draws.
constexpr std::uint64_t kStreamMacro = 1;
constexpr std::uint64_t kStreamMicro = 2;
constexpr std::uint64_t kStreamEmbed = 3;
constexpr std::uint64_t kStreamProjection = 4;
constexpr std::uint64_t kStreamGates = 5;
constexpr std::uint64_t kStreamCorner = 6;
constexpr std::uint64_t kStreamBlockBase = 16;

constexpr int kCornerHidden = 16;

}  // namespace

TrackerModel build_model(const ModelConfig& cfg) {
  cfg.validate();
  TrackerModel m;
  m.cfg = cfg;
  const Rng root(cfg.seed);
  m.macro_stack = make_perceptor_stack(3, 5, root.split(kStreamMacro));
  m.micro_stack = make_perceptor_stack(3, 3, root.split(kStreamMicro));
  m.embed = make_patch_embed(3, cfg.embed_ch, cfg.patch, root.split(kStreamEmbed));
  m.projection =
      make_back_projection(cfg.embed_ch, cfg.gain_count, root.split(kStreamProjection));
  m.gates = make_gate_bank(cfg.embed_ch, cfg.gate_groups, root.split(kStreamGates));
  const Rng head = root.split(kStreamCorner);
  m.corner.tl_a = make_conv_spec<double>(kCornerHidden, cfg.embed_ch, 3, 3, 1, 1,
                                         head.split(0));
  m.corner.tl_b = make_conv_spec<double>(1, kCornerHidden, 3, 3, 1, 1, head.split(1),
                                         BiasInit::kZero);
  m.corner.br_a = make_conv_spec<double>(kCornerHidden, cfg.embed_ch, 3, 3, 1, 1,
                                         head.split(2));
  m.corner.br_b = make_conv_spec<double>(1, kCornerHidden, 3, 3, 1, 1, head.split(3),
                                         BiasInit::kZero);
  m.blocks.reserve(cfg.backbone_blocks);
  for (int i = 0; i < cfg.backbone_blocks; ++i) {
    const Rng blk = root.split(kStreamBlockBase + static_cast<std::uint64_t>(i));
    BackboneBlock b;
    b.a = make_conv_spec<double>(cfg.embed_ch, cfg.embed_ch, 3, 3, 1, 1, blk.split(0));
    b.b = make_conv_spec<double>(cfg.embed_ch, cfg.embed_ch, 3, 3, 1, 1, blk.split(1));
    m.blocks.push_back(std::move(b));
  }
  return m;
}

Tensor crop_patch(const Tensor& frame, double cx, double cy, double side, int out) {
  if (!(side > 0)) throw std::invalid_argument("crop_patch: side must be positive");
  if (out <= 0) throw std::invalid_argument("crop_patch: output size must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw std::domain_error("crop_patch: non-finite center");

  Tensor patch(frame.channels, out, out);
  const double scale = side / out;
  const double x0 = cx - side / 2;
  const double y0 = cy - side / 2;
  auto sample = [&frame](int c, int y, int x) -> double {
    if (y < 0 || y >= frame.height || x < 0 || x >= frame.width) return 0.0;
    return frame(c, y, x);
  };
  for (int j = 0; j < out; ++j) {
    const double sy = y0 + (j + 0.5) * scale - 0.5;
    const int iy = static_cast<int>(std::floor(sy));
    const double ty = sy - iy;
    for (int i = 0; i < out; ++i) {
      const double sx = x0 + (i + 0.5) * scale - 0.5;
      const int ix = static_cast<int>(std::floor(sx));
      const double tx = sx - ix;
      for (int c = 0; c < frame.channels; ++c) {
        const double top =
            (1 - tx) * sample(c, iy, ix) + tx * sample(c, iy, ix + 1);
        const double bot =
            (1 - tx) * sample(c, iy + 1, ix) + tx * sample(c, iy + 1, ix + 1);
        patch(c, j, i) = (1 - ty) * top + ty * bot;
      }
    }
  }
  ensure_finite(patch, "crop_patch");
  return patch;
}

Tensor encode_stream(const Tensor& img, const TrackerModel& model) {
  AssociationMatrix assoc;
  if (model.cfg.use_perceptor) {
    assoc = association_forward(img, model.macro_stack, model.micro_stack);
  } else {
    assoc.values = Tensor(img.channels, img.height, img.width);
  }
  return patch_embed_apply(img, assoc, model.embed);
}

Tensor refine_tokens(const Tensor& tokens, const TrackerModel& model) {
  return avg_pool2(back_project(tokens, model.projection));
}

namespace {

Tensor residual_block(const Tensor& f, const BackboneBlock& blk) {
  return f + conv2d(relu(conv2d(f, blk.a)), blk.b);
}

// One injection site: refine, then either fuse additively (encoder only) or
// run the full prompt + gate path against the template kernel.
Tensor inject_site(const Tensor& f, const TrackerModel& model,
                   const DirectionalKernel& dk, Eigen::VectorXd* last_prompt) {
  const Tensor hr = refine_tokens(f, model);
  if (!model.cfg.use_prompt) return f + hr;
  const Eigen::VectorXd sim = channel_descriptor(dk, hr);
  const Eigen::VectorXd p =
      prompt_from_descriptor(sim, model.cfg.norm_mode, model.cfg.epsilon);
  if (last_prompt) *last_prompt = p;
  const Tensor enhanced = apply_prompt(p, hr, f);
  return spatial_gate(enhanced, hr, model.gates);
}

}  // namespace

TrackerState init_tracker(const Tensor& frame, const BBox& box,
                          const ModelConfig& cfg) {
  if (!(box.w > 0) || !(box.h > 0))
    throw std::invalid_argument("init_tracker: box sides must be positive");
  TrackerState st;
  st.model = std::make_shared<const TrackerModel>(build_model(cfg));
  const double side = cfg.context_factor * std::sqrt(box.w * box.h);
  const Tensor crop =
      crop_patch(frame, box.cx(), box.cy(), side, cfg.template_size);
  st.template_tokens = encode_stream(crop, *st.model);
  if (cfg.use_encoder)
    st.dk = make_directional_kernel(refine_tokens(st.template_tokens, *st.model));
  st.box = box;
  st.frame_index = 0;
  return st;
}

namespace {

// Expected coordinate under the softmax of the map. Max-shifted, so any
// finite map is safe; a constant map gives the grid centroid exactly.
std::pair<double, double> soft_argmax(const Tensor& map) {
  if (map.channels != 1)
    throw std::invalid_argument("decode_corners: maps must have one channel");
  double hi = map(0, 0, 0);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) hi = std::max(hi, map(0, y, x));
  double mass = 0, ex = 0, ey = 0;
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const double m = std::exp(map(0, y, x) - hi);
      mass += m;
      ex += m * x;
      ey += m * y;
    }
  return {ex / mass, ey / mass};
}

}  // namespace

BBox decode_corners(const Tensor& tl_map, const Tensor& br_map) {
  require_same_shape(tl_map, br_map, "decode_corners");
  auto [x1, y1] = soft_argmax(tl_map);
  auto [x2, y2] = soft_argmax(br_map);
  if (x2 < x1) std::swap(x1, x2);
  if (y2 < y1) std::swap(y1, y2);
  double w = x2 - x1;
  double h = y2 - y1;
  if (w < 2) {
    x1 = (x1 + x2) / 2 - 1;
    w = 2;
  }
  if (h < 2) {
    y1 = (y1 + y2) / 2 - 1;
    h = 2;
  }
  return {x1, y1, w, h};
}

TrackResult track_frame(TrackerState& state, const Tensor& frame) {
  if (!state.model) throw std::invalid_argument("track_frame: uninitialized state");
  const TrackerModel& model = *state.model;
  const ModelConfig& cfg = model.cfg;

  const double side = cfg.context_factor * std::sqrt(state.box.w * state.box.h);
  const double cx = state.box.cx();
  const double cy = state.box.cy();
  const Tensor crop = crop_patch(frame, cx, cy, side, cfg.search_size);

  Tensor f = encode_stream(crop, model);
  TrackResult res;
  for (int i = 0; i < cfg.backbone_blocks; ++i) {
    f = residual_block(f, model.blocks[i]);
    if (cfg.use_encoder &&
        std::find(cfg.inject_after.begin(), cfg.inject_after.end(), i) !=
            cfg.inject_after.end())
      f = inject_site(f, model, state.dk, &res.last_prompt);
  }

  res.tl_map = conv2d(relu(conv2d(f, model.corner.tl_a)), model.corner.tl_b);
  res.br_map = conv2d(relu(conv2d(f, model.corner.br_a)), model.corner.br_b);
  const BBox map_box = decode_corners(res.tl_map, res.br_map);

  // Token map -> crop pixels (token t is centered at (t + 0.5) * patch) ->
  // frame coordinates through the crop window.
  const double to_frame = side / cfg.search_size;
  const double ox = cx - side / 2;
  const double oy = cy - side / 2;
  const double fx1 = ox + (map_box.x + 0.5) * cfg.patch * to_frame;
  const double fy1 = oy + (map_box.y + 0.5) * cfg.patch * to_frame;
  const double fx2 = ox + (map_box.x2() + 0.5) * cfg.patch * to_frame;
  const double fy2 = oy + (map_box.y2() + 0.5) * cfg.patch * to_frame;

  // The center moves freely; the size is damped to suppress frame-to-frame
  // scale jitter.
  double nw = 0.7 * state.box.w + 0.3 * (fx2 - fx1);
  double nh = 0.7 * state.box.h + 0.3 * (fy2 - fy1);
  nw = std::min(std::max(nw, 2.0), static_cast<double>(frame.width));
  nh = std::min(std::max(nh, 2.0), static_cast<double>(frame.height));
  BBox out;
  out.w = nw;
  out.h = nh;
  out.x = std::min(std::max((fx1 + fx2) / 2 - nw / 2, 0.0), frame.width - nw);
  out.y = std::min(std::max((fy1 + fy2) / 2 - nh / 2, 0.0), frame.height - nh);

  state.box = out;
  state.frame_index += 1;
  res.box = out;
  return res;
}

LossBreakdown locate_loss(const BBox& pred, const BBox& gt, const ModelConfig& cfg) {
  LossBreakdown lb;
  const double delta = std::abs(pred.x - gt.x) + std::abs(pred.y - gt.y) +
                       std::abs(pred.x2() - gt.x2()) + std::abs(pred.y2() - gt.y2());
  lb.l1_term = cfg.lambda_l1 * delta / (4.0 * cfg.search_size);
  lb.giou_term = cfg.lambda_giou * (1.0 - giou(pred, gt));
  lb.total = lb.l1_term + lb.giou_term;
  return lb;
}

}  // namespace dktrack
