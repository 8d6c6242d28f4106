// SPDX-License-Identifier: Apache-2.0
#include "dktrack/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "dktrack/softmin.hpp"
#include "dktrack/tracker.hpp"

namespace dktrack {

namespace fs = std::filesystem;

Tensor synthetic_frame(int height, int width, const BBox& target) {
  Tensor frame = Tensor::constant(3, height, width, 0.08);
  const int y0 = std::max(0, static_cast<int>(std::floor(target.y)));
  const int y1 = std::min(height, static_cast<int>(std::ceil(target.y2())));
  const int x0 = std::max(0, static_cast<int>(std::floor(target.x)));
  const int x1 = std::min(width, static_cast<int>(std::ceil(target.x2())));
  for (int c = 0; c < 3; ++c)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) frame(c, y, x) = 0.85;
  return frame;
}

namespace {

std::string percent(double fraction) { return format_fixed(100.0 * fraction, 2); }

std::string curve_polyline(const EvalCurve& curve, double x_lo, double x_hi,
                           double px_x0, double px_y0, double px_w, double px_h) {
  std::string pts;
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    const double fx = (curve.thresholds[i] - x_lo) / (x_hi - x_lo);
    const double x = px_x0 + fx * px_w;
    const double y = px_y0 + (1.0 - curve.scores[i]) * px_h;
    if (i) pts += " ";
    pts += format_fixed(x, 2) + "," + format_fixed(y, 2);
  }
  return pts;
}

std::string render_curves_svg(const BenchmarkReport& report) {
  // Fixed 800x600 canvas, one plot area, three polylines on normalized axes:
  // success over overlap 0..1, precision over 0..50 px, norm precision over
  // 0..0.5. Byte-stable by construction (fixed precision, fixed order).
  const double x0 = 80, y0 = 60, w = 660, h = 460;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<rect x=\"80\" y=\"60\" width=\"660\" height=\"460\" fill=\"none\" "
         "stroke=\"black\"/>\n";
  svg += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">"
         "threshold-swept tracking curves (normalized axes)</text>\n";
  svg += "<text x=\"400\" y=\"560\" text-anchor=\"middle\" font-size=\"14\">"
         "threshold (fraction of each curve's range)</text>\n";
  struct Row {
    const EvalCurve* curve;
    double lo, hi;
    const char* color;
    const char* label;
  };
  const Row rows[] = {
      {&report.success, 0.0, 1.0, "#1f77b4", "success (overlap 0..1)"},
      {&report.precision, 0.0, 50.0, "#d62728", "precision (0..50 px)"},
      {&report.norm_precision, 0.0, 0.5, "#2ca02c", "norm precision (0..0.5)"},
  };
  double ly = 90;
  for (const Row& r : rows) {
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(r.color) +
           "\" stroke-width=\"2\" points=\"" +
           curve_polyline(*r.curve, r.lo, r.hi, x0, y0, w, h) + "\"/>\n";
    svg += "<text x=\"100\" y=\"" + format_fixed(ly, 0) +
           "\" font-size=\"13\" fill=\"" + r.color + "\">" + r.label +
           "</text>\n";
    ly += 20;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

void emit_report(const BenchmarkReport& report, const fs::path& out_dir, bool svg) {
  fs::create_directories(out_dir);
  std::string metrics = "sequence,frames,auc,prec20,nprec02\n";
  for (const SequenceResult& s : report.sequences) {
    metrics += s.name + "," + std::to_string(s.ious.size()) + "," +
               percent(s.auc) + "," + percent(s.prec20) + "," +
               percent(s.nprec02) + "\n";
  }
  if (report.total_frames > 0) {
    metrics += "ALL," + std::to_string(report.total_frames) + "," +
               percent(report.auc) + "," + percent(report.prec20) + "," +
               percent(report.nprec02) + "\n";
  }
  atomic_write(out_dir / "metrics.csv", metrics);

  for (const SequenceResult& s : report.sequences) {
    std::string cle = "frame,cle,norm_cle\n";
    for (std::size_t f = 0; f < s.cles.size(); ++f)
      cle += std::to_string(f) + "," + format_fixed(s.cles[f], 6) + "," +
             format_fixed(s.norm_cles[f], 6) + "\n";
    atomic_write(out_dir / ("cle_" + s.name + ".csv"), cle);
  }

  if (svg && report.total_frames > 0)
    atomic_write(out_dir / "curves.svg", render_curves_svg(report));
}

namespace {

struct SequenceChecks {
  bool in_bounds = true;
  bool finite_maps = true;
  double max_drift_after_first = 0;  // frames 2.. of the tracked run
};

// Tracks a straight-line target and writes one CSV row per frame. Frame 0 is
// the init frame (prediction equals the given box by definition).
SequenceChecks run_synthetic(const ModelConfig& model_cfg, const BBox& start,
                             double vx, double vy, int frames, int height,
                             int width, const fs::path& csv_path) {
  SequenceChecks checks;
  std::string csv = "frame,x,y,w,h,gt_x,gt_y,gt_w,gt_h,cle\n";
  auto row = [&csv](int t, const BBox& p, const BBox& g) {
    const double cle = std::hypot(p.cx() - g.cx(), p.cy() - g.cy());
    csv += std::to_string(t) + "," + format_fixed(p.x, 6) + "," +
           format_fixed(p.y, 6) + "," + format_fixed(p.w, 6) + "," +
           format_fixed(p.h, 6) + "," + format_fixed(g.x, 6) + "," +
           format_fixed(g.y, 6) + "," + format_fixed(g.w, 6) + "," +
           format_fixed(g.h, 6) + "," + format_fixed(cle, 6) + "\n";
  };

  TrackerState state =
      init_tracker(synthetic_frame(height, width, start), start, model_cfg);
  row(0, start, start);
  for (int t = 1; t < frames; ++t) {
    BBox gt = start;
    gt.x += vx * t;
    gt.y += vy * t;
    const TrackResult r = track_frame(state, synthetic_frame(height, width, gt));
    row(t, r.box, gt);
    if (r.box.x < 0 || r.box.y < 0 || r.box.x2() > width || r.box.y2() > height)
      checks.in_bounds = false;
    if (!r.tl_map.data.isFinite().all() || !r.br_map.data.isFinite().all())
      checks.finite_maps = false;
    if (t >= 2) {
      const double drift = std::hypot(r.box.cx() - gt.cx(), r.box.cy() - gt.cy());
      checks.max_drift_after_first = std::max(checks.max_drift_after_first, drift);
    }
  }
  atomic_write(csv_path, csv);
  return checks;
}

int cmd_demo(const RunConfig& cfg) {
  cfg.model.validate();
  const fs::path out_dir = cfg.out_dir.empty() ? "demo_out" : cfg.out_dir;
  fs::create_directories(out_dir);
  const BBox start{60, 70, 36, 36};
  const int frames = cfg.frames;
  if (frames < 2) throw std::invalid_argument("demo: needs at least 2 frames");

  const SequenceChecks moving = run_synthetic(cfg.model, start, 2.0, 1.0, frames,
                                              240, 320, out_dir / "demo_moving.csv");
  const SequenceChecks still = run_synthetic(cfg.model, start, 0.0, 0.0,
                                             std::min(frames, 10), 240, 320,
                                             out_dir / "demo_static.csv");

  bool ok = true;
  auto verdict = [&ok](bool pass, const std::string& what) {
    std::printf("  [%s] %s\n", pass ? "ok" : "FAIL", what.c_str());
    ok = ok && pass;
  };
  std::printf("demo: %d moving frames + %d static frames -> %s\n", frames,
              std::min(frames, 10), out_dir.string().c_str());
  verdict(moving.in_bounds && still.in_bounds, "every box inside the frame");
  verdict(moving.finite_maps && still.finite_maps, "score maps free of NaN/Inf");
  verdict(still.max_drift_after_first <= 8.0,
          "static center within 8 px from frame 2 on (max " +
              format_fixed(still.max_drift_after_first, 3) + ")");
  return ok ? 0 : 1;
}

int cmd_eval(const RunConfig& cfg, const std::string& gt_dir,
             const std::string& pred_dir, const std::string& out_dir, bool svg) {
  const BenchmarkReport report = run_benchmark(gt_dir, pred_dir);
  emit_report(report, out_dir, svg || cfg.svg);
  for (const std::string& s : report.skipped)
    std::printf("  skipped: %s\n", s.c_str());
  if (report.total_frames == 0) {
    std::printf("eval: no usable sequence pairs\n");
    return 1;
  }
  std::printf("eval: %zu sequences, %ld frames, auc %s%%, prec20 %s%%, nprec02 %s%%\n",
              report.sequences.size(), report.total_frames, percent(report.auc).c_str(),
              percent(report.prec20).c_str(), percent(report.nprec02).c_str());
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, int trials, double tau_override) {
  const int dims[] = {2, 8, 32};
  const int counts[] = {1, 3, 5};
  const double taus[] = {0.3, 0.05};
  struct Combo {
    int d, k;
    double tau;
    double worst = 0;
    int n = 0;
  };
  std::vector<Combo> combos;
  for (int d : dims)
    for (int k : counts)
      for (double tau : taus)
        combos.push_back({d, k, tau_override > 0 ? tau_override : tau, 0, 0});

  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    Combo& c = combos[t % combos.size()];
    Rng rng(cfg.model.seed, 1000 + static_cast<std::uint64_t>(t));
    PrototypeSet set;
    set.temperature = c.tau;
    for (int k = 0; k < c.k; ++k) {
      Eigen::VectorXd p(c.d);
      for (int i = 0; i < c.d; ++i) p[i] = rng.uniform(0, 2);
      set.prototypes.push_back(p);
    }
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(c.d, c.d);
    for (int i = 0; i < c.d; ++i)
      for (int j = 0; j < c.d; ++j) L(i, j) += 0.2 * rng.uniform(-1, 1);
    set.metric = L;
    Eigen::VectorXd y(c.d);
    for (int i = 0; i < c.d; ++i) y[i] = rng.uniform(0, 2);

    const ScoreReport report = soft_min_score(y, set);
    const Eigen::VectorXd fd = fd_gradient(y, set, 1e-5);
    const double rel = (report.gradient - fd).norm() /
                       std::max(report.gradient.norm(), 1e-12);
    c.worst = std::max(c.worst, rel);
    c.n += 1;
    worst = std::max(worst, rel);
  }

  std::printf("%6s %6s %8s %8s %14s\n", "dim", "protos", "tau", "trials",
              "max_rel_err");
  for (const Combo& c : combos)
    std::printf("%6d %6d %8s %8d %14.3e\n", c.d, c.k,
                format_shortest(c.tau).c_str(), c.n, c.worst);
  std::printf("max relative gradient error: %.3e over %d trials\n", worst, trials);
  return worst < 1e-6 ? 0 : 1;
}

int cmd_ablate_norm(const RunConfig& cfg, std::uint64_t seed,
                    const std::string& out_dir) {
  // Fixed seeded pipeline: one synthetic template kernel and one search
  // feature map; only the normalization mode varies.
  const Rng root(seed);
  Rng proto_rng = root.split(0);
  Rng feature_rng = root.split(1);
  Tensor proto(16, 8, 8);
  fill_uniform(proto, proto_rng, -1.0, 1.0);
  const DirectionalKernel dk = make_directional_kernel(proto);
  Tensor f(16, 8, 8);
  fill_uniform(f, feature_rng, -1.0, 1.0);
  const Eigen::VectorXd sim = channel_descriptor(dk, f);

  const NormMode modes[] = {NormMode::kL2, NormMode::kL1, NormMode::kSoftmax,
                            NormMode::kSigmoid, NormMode::kMinMax};
  std::string csv = "mode,argmax,entropy,checksum\n";
  std::printf("%8s %7s %10s %18s\n", "mode", "argmax", "entropy", "checksum");
  long first_argmax = -1;
  bool argmax_stable = true;
  for (NormMode mode : modes) {
    const Eigen::VectorXd p = prompt_from_descriptor(sim, mode, cfg.model.epsilon);
    long argmax = 0;
    p.maxCoeff(&argmax);
    if (first_argmax < 0) first_argmax = argmax;
    argmax_stable = argmax_stable && argmax == first_argmax;

    const double total = p.cwiseAbs().sum();
    double entropy = 0;
    if (total > 0)
      for (long i = 0; i < p.size(); ++i) {
        const double q = std::abs(p[i]) / total;
        if (q > 0) entropy -= q * std::log(q);
      }
    const std::uint64_t sum =
        fnv1a64(p.data(), static_cast<std::size_t>(p.size()) * sizeof(double));
    char sum_hex[17];
    std::snprintf(sum_hex, sizeof(sum_hex), "%016llx",
                  static_cast<unsigned long long>(sum));
    csv += norm_mode_name(mode) + "," + std::to_string(argmax) + "," +
           format_fixed(entropy, 6) + "," + sum_hex + "\n";
    std::printf("%8s %7ld %10s %18s\n", norm_mode_name(mode).c_str(), argmax,
                format_fixed(entropy, 6).c_str(), sum_hex);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "ablate_norm.csv", csv);
  }
  std::printf("argmax channel identical across modes: %s\n",
              argmax_stable ? "yes" : "NO");
  return argmax_stable ? 0 : 1;
}

int cmd_inspect(const RunConfig& cfg, const std::string& frame_path,
                const std::string& out_dir) {
  cfg.model.validate();
  if (!cfg.model.use_encoder)
    throw std::invalid_argument("inspect: requires the encoder pathway");
  if (!(cfg.init_box.w > 0) || !(cfg.init_box.h > 0))
    throw std::invalid_argument("inspect: config must set init_w and init_h");
  const Tensor frame = load_image(frame_path);
  TrackerState state = init_tracker(frame, cfg.init_box, cfg.model);
  fs::create_directories(out_dir);

  const Eigen::VectorXd means = global_avg_pool(state.dk.values);
  std::string means_csv = "channel,mean\n";
  for (long c = 0; c < means.size(); ++c)
    means_csv += std::to_string(c) + "," + format_shortest(means[c]) + "\n";
  atomic_write(fs::path(out_dir) / "dk_channel_means.csv", means_csv);

  std::string mask_csv = "channel,kept\n";
  for (std::size_t c = 0; c < state.dk.mask.bits.size(); ++c)
    mask_csv += std::to_string(c) + "," + std::to_string(state.dk.mask.bits[c]) + "\n";
  atomic_write(fs::path(out_dir) / "mask_bits.csv", mask_csv);

  const TrackResult r = track_frame(state, frame);
  std::string prompt_csv = "channel,value\n";
  for (long c = 0; c < r.last_prompt.size(); ++c)
    prompt_csv += std::to_string(c) + "," + format_shortest(r.last_prompt[c]) + "\n";
  atomic_write(fs::path(out_dir) / "prompt.csv", prompt_csv);

  std::printf("inspect: %d of %zu kernel channels kept, prompt length %ld -> %s\n",
              state.dk.mask.passed(), state.dk.mask.bits.size(),
              static_cast<long>(r.last_prompt.size()), out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"desk-scale nighttime tracking reference harness"};
  app.require_subcommand(1);

  std::string demo_config, eval_config, grad_config, ablate_config, inspect_config;

  CLI::App* demo = app.add_subcommand("demo", "track synthetic sequences, write CSVs");
  std::string demo_out;
  demo->add_option("--config", demo_config, "key = value config file");
  demo->add_option("--out", demo_out, "output directory (default demo_out)");

  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string gt_dir, pred_dir, eval_out;
  bool eval_svg = false;
  eval->add_option("--config", eval_config, "key = value config file");
  eval->add_option("--gt", gt_dir, "ground-truth annotation directory")->required();
  eval->add_option("--pred", pred_dir, "prediction annotation directory")->required();
  eval->add_option("--out", eval_out, "report output directory")->required();
  eval->add_flag("--svg", eval_svg, "also render curves.svg");

  CLI::App* grad = app.add_subcommand("gradcheck", "verify the analytic score gradient");
  int trials = 200;
  double tau_override = 0;
  grad->add_option("--config", grad_config, "key = value config file");
  grad->add_option("--trials", trials, "number of random instances")
      ->check(CLI::PositiveNumber);
  grad->add_option("--tau", tau_override, "fix the temperature instead of the grid")
      ->check(CLI::PositiveNumber);

  CLI::App* ablate = app.add_subcommand("ablate-norm",
                                        "compare prompt normalization modes");
  std::uint64_t ablate_seed = 42;
  std::string ablate_out;
  ablate->add_option("--config", ablate_config, "key = value config file");
  ablate->add_option("--seed", ablate_seed, "fixture seed");
  ablate->add_option("--out", ablate_out, "directory for ablate_norm.csv");

  CLI::App* inspect = app.add_subcommand("inspect", "dump kernel internals for one frame");
  std::string frame_path, inspect_out;
  inspect->add_option("--config", inspect_config, "key = value config file")->required();
  inspect->add_option("--frame", frame_path, "PPM/PGM frame to initialize on")->required();
  inspect->add_option("--out", inspect_out, "dump directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto load = [](const std::string& path) {
      RunConfig cfg;
      if (!path.empty()) cfg = load_config_file(path);
      apply_env_overrides(cfg);
      return cfg;
    };
    if (demo->parsed()) {
      RunConfig cfg = load(demo_config);
      if (!demo_out.empty()) cfg.out_dir = demo_out;
      return cmd_demo(cfg);
    }
    if (eval->parsed())
      return cmd_eval(load(eval_config), gt_dir, pred_dir, eval_out, eval_svg);
    if (grad->parsed()) return cmd_gradcheck(load(grad_config), trials, tau_override);
    if (ablate->parsed()) {
      RunConfig cfg = load(ablate_config);
      const bool seed_given = ablate->count("--seed") > 0;
      return cmd_ablate_norm(cfg, seed_given ? ablate_seed : cfg.model.seed,
                             ablate_out);
    }
    if (inspect->parsed())
      return cmd_inspect(load(inspect_config), frame_path, inspect_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace dktrack
