// SPDX-License-Identifier: Apache-2.0
#include "dktrack/prompt.hpp"

#include <cmath>
#include <stdexcept>

namespace dktrack {

Eigen::VectorXd channel_descriptor(const DirectionalKernel& dk, const Tensor& f) {
  if (dk.values.channels != f.channels)
    throw std::invalid_argument("channel_descriptor: channel mismatch");
  const Tensor aligned =
      (dk.values.height == f.height && dk.values.width == f.width)
          ? dk.values
          : resize_bilinear(dk.values, f.height, f.width);
  Eigen::VectorXd sim(f.channels);
  for (int c = 0; c < f.channels; ++c)
    sim[c] = (aligned.channel(c) * f.channel(c)).sum();
  return sim;
}

NormMode parse_norm_mode(const std::string& name) {
  if (name == "l2") return NormMode::kL2;
  if (name == "l1") return NormMode::kL1;
  if (name == "softmax") return NormMode::kSoftmax;
  if (name == "sigmoid") return NormMode::kSigmoid;
  if (name == "minmax") return NormMode::kMinMax;
  throw std::invalid_argument("unknown norm mode: " + name);
}

std::string norm_mode_name(NormMode mode) {
  switch (mode) {
    case NormMode::kL2: return "l2";
    case NormMode::kL1: return "l1";
    case NormMode::kSoftmax: return "softmax";
    case NormMode::kSigmoid: return "sigmoid";
    case NormMode::kMinMax: return "minmax";
  }
  throw std::invalid_argument("unknown norm mode value");
}

Eigen::VectorXd prompt_from_descriptor(const Eigen::VectorXd& sim, NormMode mode,
                                       double epsilon) {
  if (sim.size() == 0) throw std::invalid_argument("prompt: empty descriptor");
  if (epsilon < 0) throw std::invalid_argument("prompt: negative epsilon");
  switch (mode) {
    case NormMode::kL2:
      return l2_normalize(sim, epsilon);
    case NormMode::kL1: {
      const double denom = sim.array().abs().sum() + epsilon;
      if (denom <= 0)
        throw std::invalid_argument("prompt: zero descriptor with zero epsilon");
      return sim / denom;
    }
    case NormMode::kSoftmax: {
      const Eigen::ArrayXd shifted = sim.array() - sim.maxCoeff();
      const Eigen::ArrayXd e = shifted.exp();
      return (e / e.sum()).matrix();
    }
    case NormMode::kSigmoid: {
      Eigen::VectorXd out(sim.size());
      for (int i = 0; i < sim.size(); ++i) out[i] = logistic(sim[i]);
      return out;
    }
    case NormMode::kMinMax: {
      const double lo = sim.minCoeff(), hi = sim.maxCoeff();
      const double denom = hi - lo + epsilon;
      if (denom <= 0)
        throw std::invalid_argument("prompt: constant descriptor with zero epsilon");
      return ((sim.array() - lo) / denom).matrix();
    }
  }
  throw std::invalid_argument("prompt: unknown norm mode");
}

Tensor apply_prompt(const Eigen::VectorXd& prompt, const Tensor& refined,
                    const Tensor& tokens) {
  require_same_shape(refined, tokens, "apply_prompt");
  if (prompt.size() != refined.channels)
    throw std::invalid_argument("apply_prompt: prompt length must equal channels");
  Tensor out = refined + tokens;
  for (int c = 0; c < out.channels; ++c) out.channel(c) *= (prompt[c] + 1.0);
  ensure_finite(out, "apply_prompt");
  return out;
}

GateBank make_gate_bank(int channels, int group_count, const Rng& rng) {
  if (group_count <= 0 || group_count > channels)
    throw std::invalid_argument("gate bank: group count must be in [1, channels]");
  GateBank bank;
  Rng r = rng.split(0);
  const int base = channels / group_count;
  const int extra = channels % group_count;
  int begin = 0;
  for (int g = 0; g < group_count; ++g) {
    const int len = base + (g < extra ? 1 : 0);
    bank.groups.emplace_back(begin, begin + len);
    bank.raw.push_back(r.uniform(-1.0, 1.0));
    begin += len;
  }
  return bank;
}

Tensor spatial_gate(const Tensor& enhanced, const Tensor& refined, const GateBank& bank) {
  require_same_shape(enhanced, refined, "spatial_gate");
  if (bank.raw.size() != bank.groups.size())
    throw std::invalid_argument("spatial_gate: one coefficient per group required");
  if (bank.groups.empty())
    throw std::invalid_argument("spatial_gate: empty gate bank");
  int expect = 0;
  for (const auto& [begin, end] : bank.groups) {
    if (begin != expect || end <= begin)
      throw std::invalid_argument("spatial_gate: groups must partition the channels");
    expect = end;
  }
  if (expect != enhanced.channels)
    throw std::invalid_argument("spatial_gate: groups must cover every channel");

  Tensor out(enhanced.channels, enhanced.height, enhanced.width);
  for (std::size_t g = 0; g < bank.groups.size(); ++g) {
    const double gate = bank.gate(static_cast<int>(g));
    for (int c = bank.groups[g].first; c < bank.groups[g].second; ++c)
      out.channel(c) = gate * enhanced.channel(c) + (1.0 - gate) * refined.channel(c);
  }
  ensure_finite(out, "spatial_gate");
  return out;
}

}  // namespace dktrack
