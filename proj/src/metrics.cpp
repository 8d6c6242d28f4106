// SPDX-License-Identifier: Apache-2.0
#include "dktrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "dktrack/io.hpp"

namespace dktrack {

namespace {

void require_valid(const BBox& b, const char* what) {
  if (!(b.w > 0) || !(b.h > 0))
    throw std::invalid_argument(std::string(what) + ": box sides must be positive");
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) ||
      !std::isfinite(b.h))
    throw std::invalid_argument(std::string(what) + ": non-finite box");
}

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0;
  return iw * ih;
}

// Area from the same corner differences the intersection uses. (x + w) - x
// need not equal w in floating point; mixing the two forms lets identical
// boxes score above 1, so every area here comes from corners.
double corner_area(const BBox& b) { return (b.x2() - b.x) * (b.y2() - b.y); }

}  // namespace

double iou(const BBox& a, const BBox& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double inter = intersection_area(a, b);
  const double uni = corner_area(a) + corner_area(b) - inter;
  return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
  require_valid(a, "giou");
  require_valid(b, "giou");
  const double inter = intersection_area(a, b);
  const double uni = corner_area(a) + corner_area(b) - inter;
  const double ew = std::max(a.x2(), b.x2()) - std::min(a.x, b.x);
  const double eh = std::max(a.y2(), b.y2()) - std::min(a.y, b.y);
  const double enclose = ew * eh;
  return inter / uni - (enclose - uni) / enclose;
}

std::pair<EvalCurve, double> success_auc(const std::vector<double>& ious) {
  if (ious.empty()) throw std::invalid_argument("success_auc: empty overlap list");
  EvalCurve curve;
  curve.kind = CurveKind::kSuccess;
  curve.thresholds.resize(21);
  curve.scores.resize(21);
  double total = 0;
  for (int i = 0; i <= 20; ++i) {
    const double zeta = static_cast<double>(i) / 20.0;
    int hits = 0;
    for (double v : ious) hits += v > zeta ? 1 : 0;
    curve.thresholds[i] = zeta;
    curve.scores[i] = static_cast<double>(hits) / ious.size();
    total += curve.scores[i];
  }
  return {curve, total / 21.0};
}

PrecisionCurves precision_curves(const std::vector<BBox>& pred,
                                 const std::vector<BBox>& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("precision_curves: length mismatch");
  if (pred.empty()) throw std::invalid_argument("precision_curves: empty sequence");

  std::vector<double> cle(pred.size()), ncle(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require_valid(gt[i], "precision_curves");
    require_valid(pred[i], "precision_curves");
    const double dx = pred[i].cx() - gt[i].cx();
    const double dy = pred[i].cy() - gt[i].cy();
    cle[i] = std::hypot(dx, dy);
    ncle[i] = std::hypot(dx / gt[i].w, dy / gt[i].h);
  }

  PrecisionCurves out;
  out.pixel.kind = CurveKind::kPrecision;
  out.normalized.kind = CurveKind::kNormPrecision;
  for (int i = 0; i <= 50; ++i) {
    const double phi = static_cast<double>(i);
    const double nphi = static_cast<double>(i) / 100.0;
    int hit = 0, nhit = 0;
    for (std::size_t f = 0; f < cle.size(); ++f) {
      hit += cle[f] <= phi ? 1 : 0;
      nhit += ncle[f] <= nphi ? 1 : 0;
    }
    out.pixel.thresholds.push_back(phi);
    out.pixel.scores.push_back(static_cast<double>(hit) / cle.size());
    out.normalized.thresholds.push_back(nphi);
    out.normalized.scores.push_back(static_cast<double>(nhit) / ncle.size());
  }
  out.prec20 = out.pixel.scores[20];
  out.nprec02 = out.normalized.scores[20];
  return out;
}

SequenceResult evaluate_sequence(const std::string& name, const std::vector<BBox>& pred,
                                 const std::vector<BBox>& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("evaluate_sequence: length mismatch");
  SequenceResult r;
  r.name = name;
  r.ious.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) r.ious.push_back(iou(pred[i], gt[i]));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i].cx() - gt[i].cx();
    const double dy = pred[i].cy() - gt[i].cy();
    r.cles.push_back(std::hypot(dx, dy));
    r.norm_cles.push_back(std::hypot(dx / gt[i].w, dy / gt[i].h));
  }
  r.auc = success_auc(r.ious).second;
  const PrecisionCurves pc = precision_curves(pred, gt);
  r.prec20 = pc.prec20;
  r.nprec02 = pc.nprec02;
  return r;
}

BenchmarkReport run_benchmark(const std::filesystem::path& gt_dir,
                              const std::filesystem::path& pred_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(gt_dir))
    throw std::runtime_error("run_benchmark: not a directory: " + gt_dir.string());
  if (!fs::is_directory(pred_dir))
    throw std::runtime_error("run_benchmark: not a directory: " + pred_dir.string());

  std::map<std::string, fs::path> gt_files, pred_files;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt")
      gt_files[e.path().stem().string()] = e.path();
  for (const auto& e : fs::directory_iterator(pred_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt")
      pred_files[e.path().stem().string()] = e.path();

  BenchmarkReport report;
  std::vector<double> all_ious;
  std::vector<BBox> all_pred, all_gt;
  for (const auto& [name, gt_path] : gt_files) {
    const auto it = pred_files.find(name);
    if (it == pred_files.end()) {
      report.skipped.push_back(name + " (prediction missing)");
      continue;
    }
    const std::vector<BBox> gt = load_annotation_file(gt_path);
    const std::vector<BBox> pred = load_annotation_file(it->second);
    if (gt.size() != pred.size()) {
      report.skipped.push_back(name + " (frame count mismatch)");
      continue;
    }
    if (gt.empty()) {
      report.skipped.push_back(name + " (empty sequence)");
      continue;
    }
    report.sequences.push_back(evaluate_sequence(name, pred, gt));
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_gt.insert(all_gt.end(), gt.begin(), gt.end());
    const SequenceResult& r = report.sequences.back();
    all_ious.insert(all_ious.end(), r.ious.begin(), r.ious.end());
  }
  for (const auto& [name, path] : pred_files)
    if (!gt_files.count(name)) report.skipped.push_back(name + " (ground truth missing)");
  std::sort(report.skipped.begin(), report.skipped.end());

  report.total_frames = static_cast<long>(all_ious.size());
  if (!all_ious.empty()) {
    auto [curve, auc] = success_auc(all_ious);
    report.success = std::move(curve);
    report.auc = auc;
    const PrecisionCurves pc = precision_curves(all_pred, all_gt);
    report.precision = pc.pixel;
    report.norm_precision = pc.normalized;
    report.prec20 = pc.prec20;
    report.nprec02 = pc.nprec02;
  }
  return report;
}

}  // namespace dktrack
