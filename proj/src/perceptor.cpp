// SPDX-License-Identifier: Apache-2.0
#include "dktrack/perceptor.hpp"

#include <stdexcept>

namespace dktrack {

PerceptorStack make_perceptor_stack(int channels, int kernel_size, const Rng& rng) {
  if (channels <= 0) throw std::invalid_argument("perceptor: channels must be positive");
  if (kernel_size <= 0 || kernel_size % 2 == 0)
    throw std::invalid_argument("perceptor: kernel size must be odd and positive");
  PerceptorStack s;
  s.kernel_size = kernel_size;
  const int pad = (kernel_size - 1) / 2;
  for (int i = 0; i < 3; ++i)
    s.layers[i] = make_conv_spec<double>(channels, channels, kernel_size, kernel_size,
                                         1, pad, rng.split(i));
  return s;
}

Tensor perceptor_apply(const Tensor& img, const PerceptorStack& stack) {
  if (stack.layers[0].in_channels != img.channels)
    throw std::invalid_argument("perceptor: channel mismatch");
  Tensor f = img;
  for (const ConvSpec& layer : stack.layers) {
    if (layer.out_channels != layer.in_channels)
      throw std::invalid_argument("perceptor: layers must be channel-preserving");
    f = relu(conv2d(f, layer));
  }
  return f;
}

AssociationMatrix association_forward(const Tensor& img, const PerceptorStack& macro_stack,
                                      const PerceptorStack& micro_stack) {
  if (macro_stack.kernel_size != 5 || micro_stack.kernel_size != 3)
    throw std::invalid_argument(
        "association_forward: expects a 5x5 macro stack and a 3x3 micro stack");
  const Tensor coarse = perceptor_apply(img, macro_stack);
  const Tensor fine = perceptor_apply(img + coarse, micro_stack);
  AssociationMatrix m{coarse + fine};
  ensure_finite(m.values, "association_forward");
  return m;
}

PatchEmbed make_patch_embed(int in_channels, int embed_channels, int patch,
                            const Rng& rng) {
  if (patch <= 0) throw std::invalid_argument("patch embed: patch must be positive");
  PatchEmbed e;
  e.patch = patch;
  e.proj = make_conv_spec<double>(embed_channels, in_channels, patch, patch, patch, 0,
                                  rng.split(0));
  return e;
}

Tensor patch_embed_apply(const Tensor& img, const AssociationMatrix& assoc,
                         const PatchEmbed& embed) {
  require_same_shape(img, assoc.values, "patch embed");
  if (img.height % embed.patch != 0 || img.width % embed.patch != 0)
    throw std::invalid_argument("patch embed: dims must be divisible by patch");
  return conv2d(img + assoc.values, embed.proj);
}

std::pair<Tensor, Tensor> fuse_embed(const Tensor& z_img, const AssociationMatrix& m_z,
                                     const Tensor& x_img, const AssociationMatrix& m_x,
                                     const PatchEmbed& embed) {
  return {patch_embed_apply(z_img, m_z, embed), patch_embed_apply(x_img, m_x, embed)};
}

}  // namespace dktrack
