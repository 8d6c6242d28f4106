// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "dktrack/kernel_encoder.hpp"
#include "dktrack/tensor.hpp"

namespace dktrack {

// Per-channel affinity between the directional kernel and the search-stream
// features: sim_c = sum_{h,w} dk(c,h,w) * f(c,h,w). The kernel is bilinearly
// resized to the feature dims first when they differ.
Eigen::VectorXd channel_descriptor(const DirectionalKernel& dk, const Tensor& f);

enum class NormMode { kL2, kL1, kSoftmax, kSigmoid, kMinMax };

NormMode parse_norm_mode(const std::string& name);
std::string norm_mode_name(NormMode mode);

// Normalized channel prompt. All five modes preserve the argmax channel of
// the descriptor; min-max rejects constant descriptors at zero epsilon.
Eigen::VectorXd prompt_from_descriptor(const Eigen::VectorXd& sim, NormMode mode,
                                       double epsilon);

// (prompt + 1) scales each channel of (refined + tokens).
Tensor apply_prompt(const Eigen::VectorXd& prompt, const Tensor& refined,
                    const Tensor& tokens);

// Per-group convex blend coefficients over a contiguous channel partition.
struct GateBank {
  std::vector<double> raw;                   // pre-squash parameters
  std::vector<std::pair<int, int>> groups;   // [begin, end) channel ranges
  double gate(int g) const { return logistic(raw[g]); }
};

GateBank make_gate_bank(int channels, int group_count, const Rng& rng);

// out_c = g * enhanced_c + (1 - g) * refined_c with one g per channel group.
// Every output entry lies between the two inputs at its position.
Tensor spatial_gate(const Tensor& enhanced, const Tensor& refined, const GateBank& bank);

}  // namespace dktrack
