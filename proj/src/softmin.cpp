// SPDX-License-Identifier: Apache-2.0
#include "dktrack/softmin.hpp"

#include <cmath>
#include <stdexcept>

namespace dktrack {

void PrototypeSet::validate() const {
  if (prototypes.empty())
    throw std::invalid_argument("prototype set: needs at least one prototype");
  if (temperature <= 0.0)
    throw std::invalid_argument("prototype set: temperature must be positive");
  if (rho_floor <= 0.0)
    throw std::invalid_argument("prototype set: rho floor must be positive");
  if (metric.rows() < metric.cols() || metric.cols() == 0)
    throw std::invalid_argument("prototype set: metric must be square-or-tall");
  for (const Eigen::VectorXd& p : prototypes)
    if (p.size() != metric.cols())
      throw std::invalid_argument("prototype set: prototype dimension mismatch");
  const Eigen::MatrixXd gram = metric.transpose() * metric;
  if (gram.determinant() <= 1e-12)
    throw std::invalid_argument("prototype set: metric is rank deficient");
}

namespace {

struct Distances {
  Eigen::VectorXd rho;          // clamped
  std::vector<Eigen::VectorXd> diff;  // y - p_k
  std::vector<bool> floored;
  bool any_floored = false;
};

Distances distances(const Eigen::VectorXd& y, const PrototypeSet& set) {
  Distances d;
  const int K = set.count();
  d.rho.resize(K);
  d.diff.resize(K);
  d.floored.resize(K);
  for (int k = 0; k < K; ++k) {
    d.diff[k] = y - set.prototypes[k];
    const double raw = (set.metric * d.diff[k]).norm();
    d.floored[k] = raw < set.rho_floor;
    d.any_floored = d.any_floored || d.floored[k];
    d.rho[k] = std::max(raw, set.rho_floor);
  }
  return d;
}

Eigen::VectorXd responsibilities(const Eigen::VectorXd& rho, double tau,
                                 double* softmin_out) {
  const double rho_min = rho.minCoeff();
  Eigen::VectorXd w = ((rho_min - rho.array()) / tau).exp();
  const double total = w.sum();  // >= 1: the minimum contributes exp(0)
  if (softmin_out) *softmin_out = rho_min - tau * std::log(total);
  return w / total;
}

}  // namespace

ScoreReport soft_min_score(const Eigen::VectorXd& y, const PrototypeSet& set) {
  set.validate();
  if (y.size() != set.dim())
    throw std::invalid_argument("soft_min_score: query dimension mismatch");

  const Distances d = distances(y, set);
  ScoreReport r;
  r.floor_engaged = d.any_floored;
  r.weights = responsibilities(d.rho, set.temperature, &r.softmin);
  r.score = std::exp(-r.softmin);

  const Eigen::MatrixXd gram = set.metric.transpose() * set.metric;
  Eigen::VectorXd pull = Eigen::VectorXd::Zero(set.dim());
  for (int k = 0; k < set.count(); ++k) {
    if (d.floored[k]) continue;  // clamp region is locally flat
    pull += (r.weights[k] / d.rho[k]) * (gram * d.diff[k]);
  }
  r.gradient = -r.score * pull;
  return r;
}

Eigen::VectorXd fd_gradient(const Eigen::VectorXd& y, const PrototypeSet& set,
                            double step) {
  if (step < 1e-7 || step > 1e-3)
    throw std::invalid_argument("fd_gradient: step must lie in [1e-7, 1e-3]");
  set.validate();
  Eigen::VectorXd g(y.size());
  Eigen::VectorXd probe = y;
  for (int i = 0; i < y.size(); ++i) {
    probe[i] = y[i] + step;
    const double hi = soft_min_score(probe, set).score;
    probe[i] = y[i] - step;
    const double lo = soft_min_score(probe, set).score;
    probe[i] = y[i];
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

SelectivityReport check_directional_selectivity(const PrototypeSet& set, int trials,
                                                Rng rng) {
  set.validate();
  if (set.temperature > 0.05)
    throw std::invalid_argument(
        "selectivity check: sharp regime requires temperature <= 0.05");
  if (trials <= 0) throw std::invalid_argument("selectivity check: trials must be positive");
  const int K = set.count();
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) {
      const double sep = (set.metric * (set.prototypes[i] - set.prototypes[j])).norm();
      if (sep < 10.0 * set.rho_floor)
        throw std::invalid_argument(
            "selectivity check: prototypes not separated (basin ambiguity)");
    }

  const int d = set.dim();
  Eigen::VectorXd lo = set.prototypes[0], hi = set.prototypes[0];
  for (const Eigen::VectorXd& p : set.prototypes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::MatrixXd gram = set.metric.transpose() * set.metric;

  SelectivityReport rep;
  rep.trials = trials;
  rep.traces.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng = rng.split(t);
    AscentTrace trace;
    trace.start.resize(d);
    for (int i = 0; i < d; ++i) trace.start[i] = trial_rng.uniform(lo[i], hi[i]);

    // nearest prototype at the start, by exhaustive scan over raw distances
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double rho = (set.metric * (trace.start - set.prototypes[k])).norm();
      if (rho < best) {
        best = rho;
        trace.target = k;
      }
    }

    Eigen::VectorXd y = trace.start;
    ScoreReport cur = soft_min_score(y, set);
    double step = 0.05;
    for (int it = 0; it < 2000; ++it) {
      ++trace.iterations;

      // local alignment claim: the gradient must point along the
      // responsibility-weighted pull toward the prototypes
      Eigen::VectorXd pull = Eigen::VectorXd::Zero(d);
      double softmin_unused;
      Eigen::VectorXd rho(K);
      std::vector<Eigen::VectorXd> diff(K);
      bool usable = true;
      for (int k = 0; k < K; ++k) {
        diff[k] = y - set.prototypes[k];
        const double raw = (set.metric * diff[k]).norm();
        if (raw < set.rho_floor) usable = false;
        rho[k] = std::max(raw, set.rho_floor);
      }
      if (usable) {
        const Eigen::VectorXd w = responsibilities(rho, set.temperature, &softmin_unused);
        for (int k = 0; k < K; ++k) pull -= (w[k] / rho[k]) * (gram * diff[k]);
        const double gn = cur.gradient.norm();
        const double pn = pull.norm();
        if (gn > 1e-300 && pn > 1e-300) {
          const double cosine = cur.gradient.dot(pull) / (gn * pn);
          rep.min_alignment = std::min(rep.min_alignment, cosine);
          if (cosine < 1.0 - 1e-9) ++rep.alignment_violations;
        }
      }

      const double gn = cur.gradient.norm();
      if (gn < 1e-300) break;
      const Eigen::VectorXd y_try = y + (step / gn) * cur.gradient;
      const ScoreReport next = soft_min_score(y_try, set);
      if (next.score > cur.score) {
        y = y_try;
        cur = next;
      } else {
        step *= 0.5;
        if (step < 1e-12) break;
      }
    }

    trace.end = y;
    trace.final_distance = (y - set.prototypes[trace.target]).norm();
    trace.success = trace.final_distance < 1e-3;
    rep.successes += trace.success ? 1 : 0;
    rep.traces.push_back(std::move(trace));
  }
  rep.success_fraction = static_cast<double>(rep.successes) / rep.trials;
  return rep;
}

}  // namespace dktrack
