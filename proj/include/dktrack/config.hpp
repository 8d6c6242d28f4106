// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dktrack/prompt.hpp"

namespace dktrack {

// Full parameterization of the tracker. Weights are a pure function of the
// seed, so two configs with equal fields produce bit-identical models.
struct ModelConfig {
  std::uint64_t seed = 42;
  int template_size = 128;
  int search_size = 256;
  int patch = 16;
  int embed_ch = 64;
  int backbone_blocks = 4;
  std::vector<int> inject_after = {0, 1, 2, 3};  // block indices; empty disables injection
  int gate_groups = 4;
  NormMode norm_mode = NormMode::kL2;
  double lambda_l1 = 2.0;
  double lambda_giou = 5.0;
  int gain_count = 2;       // active illumination-gain sites in the back projection
  double epsilon = 1e-12;   // prompt normalization epsilon
  double tau = 0.05;        // softmin temperature for analysis tooling
  double rho_floor = 1e-8;
  double context_factor = 2.0;  // crop side = context_factor * sqrt(w * h)
  bool use_perceptor = true;    // association matrices on both streams
  bool use_encoder = true;      // directional kernel pathway
  bool use_prompt = true;       // prompt + gate fusion (requires the encoder)

  void validate() const;
};

}  // namespace dktrack
