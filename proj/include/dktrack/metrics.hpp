// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dktrack/bbox.hpp"

namespace dktrack {

// Intersection-over-union in [0,1]. Degenerate (non-positive size) boxes are
// rejected.
double iou(const BBox& a, const BBox& b);

// Generalized IoU in [-1,1]: iou minus the enclosing-box penalty.
double giou(const BBox& a, const BBox& b);

enum class CurveKind { kSuccess, kPrecision, kNormPrecision };

struct EvalCurve {
  CurveKind kind = CurveKind::kSuccess;
  std::vector<double> thresholds;
  std::vector<double> scores;
};

// Success curve over the 21-point overlap grid {0.00, 0.05, ..., 1.00} with a
// strict > comparison; returns the curve and its mean (the AUC).
std::pair<EvalCurve, double> success_auc(const std::vector<double>& ious);

struct PrecisionCurves {
  EvalCurve pixel;       // center error vs 0..50 px, inclusive comparison
  EvalCurve normalized;  // gt-size-normalized error vs 0.00..0.50
  double prec20 = 0;     // pixel curve at 20 px
  double nprec02 = 0;    // normalized curve at 0.2
};

PrecisionCurves precision_curves(const std::vector<BBox>& pred,
                                 const std::vector<BBox>& gt);

struct SequenceResult {
  std::string name;
  std::vector<double> ious;
  std::vector<double> cles;
  std::vector<double> norm_cles;
  double auc = 0;
  double prec20 = 0;
  double nprec02 = 0;
};

SequenceResult evaluate_sequence(const std::string& name, const std::vector<BBox>& pred,
                                 const std::vector<BBox>& gt);

// Aggregates pool every frame across sequences before computing curves, so
// they equal the curves of one concatenated run by construction.
struct BenchmarkReport {
  std::vector<SequenceResult> sequences;  // sorted by name
  std::vector<std::string> skipped;       // unmatched or inconsistent pairs
  EvalCurve success;
  EvalCurve precision;
  EvalCurve norm_precision;
  double auc = 0;
  double prec20 = 0;
  double nprec02 = 0;
  long total_frames = 0;

  bool partial() const { return !skipped.empty(); }
};

// Pairs *.txt annotation files by name across the two directories.
BenchmarkReport run_benchmark(const std::filesystem::path& gt_dir,
                              const std::filesystem::path& pred_dir);

}  // namespace dktrack
