// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <utility>

#include "dktrack/tensor.hpp"

namespace dktrack {

// One perceptor branch: three channel-preserving Conv-ReLU layers of a single
// kernel size. The macro branch uses 5x5 kernels, the micro branch 3x3.
struct PerceptorStack {
  std::array<ConvSpec, 3> layers;
  int kernel_size = 0;
};

PerceptorStack make_perceptor_stack(int channels, int kernel_size, const Rng& rng);

Tensor perceptor_apply(const Tensor& img, const PerceptorStack& stack);

// Pixel-level association matrix produced by the dual perceptor. Same shape
// as the input image.
struct AssociationMatrix {
  Tensor values;
};

// macro(img) + micro(img + macro(img)); the micro branch refines the
// macro-residual composite.
AssociationMatrix association_forward(const Tensor& img, const PerceptorStack& macro_stack,
                                      const PerceptorStack& micro_stack);

// Strided projection with kernel = stride = patch: one token per patch.
struct PatchEmbed {
  ConvSpec proj;
  int patch = 0;
};

PatchEmbed make_patch_embed(int in_channels, int embed_channels, int patch,
                            const Rng& rng);

// Embeds (association + image) into a token grid of embed_channels x H/patch
// x W/patch.
Tensor patch_embed_apply(const Tensor& img, const AssociationMatrix& assoc,
                         const PatchEmbed& embed);

// Both streams through one shared embedding weight set.
std::pair<Tensor, Tensor> fuse_embed(const Tensor& z_img, const AssociationMatrix& m_z,
                                     const Tensor& x_img, const AssociationMatrix& m_x,
                                     const PatchEmbed& embed);

}  // namespace dktrack
