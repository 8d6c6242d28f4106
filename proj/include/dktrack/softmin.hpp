// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dktrack/rng.hpp"

namespace dktrack {

// Prototype bank for the smoothed nearest-prototype score
//   S(y) = exp(-softmin_tau(rho_1..rho_K)),  rho_k = max(floor, |L (y - p_k)|).
struct PrototypeSet {
  std::vector<Eigen::VectorXd> prototypes;
  Eigen::MatrixXd metric;       // L, full column rank
  double temperature = 0.3;     // softmin sharpness, > 0
  double rho_floor = 1e-8;      // lower clamp on distances

  int dim() const { return static_cast<int>(metric.cols()); }
  int count() const { return static_cast<int>(prototypes.size()); }
  void validate() const;
};

struct ScoreReport {
  double score = 0.0;
  double softmin = 0.0;          // -tau * logsumexp(-rho/tau)
  Eigen::VectorXd gradient;      // analytic d score / d y
  Eigen::VectorXd weights;       // softmin responsibilities, a simplex
  bool floor_engaged = false;    // some raw distance fell below the floor
};

// Max-shifted logsumexp throughout; no exp of large positives ever occurs.
// Floored distances contribute zero gradient (locally flat clamp).
ScoreReport soft_min_score(const Eigen::VectorXd& y, const PrototypeSet& set);

// Central differences, per coordinate. Step must lie in [1e-7, 1e-3].
Eigen::VectorXd fd_gradient(const Eigen::VectorXd& y, const PrototypeSet& set,
                            double step);

struct AscentTrace {
  Eigen::VectorXd start;
  Eigen::VectorXd end;
  int target = -1;               // nearest prototype at the start, exhaustive scan
  int iterations = 0;
  double final_distance = 0.0;   // Euclidean distance from end to target
  bool success = false;          // final_distance < 1e-3
};

struct SelectivityReport {
  int trials = 0;
  int successes = 0;
  double success_fraction = 0.0;
  double min_alignment = 1.0;    // worst cosine between gradient and the
                                 // responsibility-weighted pull direction
  int alignment_violations = 0;  // iterates with cosine < 1 - 1e-9
  std::vector<AscentTrace> traces;
};

// Gradient ascent with normalized steps (initial 0.05, halved on rejection,
// at most 2000 iterations per trial). Requires the sharp regime
// (temperature <= 0.05) and pairwise prototype separation of at least
// 10 * rho_floor in the metric norm.
SelectivityReport check_directional_selectivity(const PrototypeSet& set, int trials,
                                                Rng rng);

}  // namespace dktrack
