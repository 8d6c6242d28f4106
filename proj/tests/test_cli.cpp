// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dktrack/cli.hpp"

using namespace dktrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / (tag + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// The reduced geometry keeps CLI runs in the tens of milliseconds per frame.
RunConfig small_run_config() {
  RunConfig cfg;
  cfg.model.template_size = 32;
  cfg.model.search_size = 64;
  cfg.model.patch = 8;
  cfg.model.embed_ch = 16;
  cfg.model.backbone_blocks = 2;
  cfg.model.inject_after = {0, 1};
  cfg.model.gate_groups = 4;
  cfg.frames = 6;
  return cfg;
}

fs::path write_config(const TempDir& dir, const RunConfig& cfg,
                      const std::string& name = "run.cfg") {
  const fs::path p = dir.path / name;
  atomic_write(p, serialize_config(cfg));
  return p;
}

BenchmarkReport perfect_report(int frames) {
  TempDir gt("dktrack_cli_gt_");
  TempDir pred("dktrack_cli_pred_");
  std::vector<BBox> boxes;
  for (int i = 0; i < frames; ++i)
    boxes.push_back({10.0 + i, 20.0 + i, 30, 40});
  atomic_write(gt.path / "seq.txt", serialize_annotations(boxes));
  atomic_write(pred.path / "seq.txt", serialize_annotations(boxes));
  return run_benchmark(gt.path, pred.path);
}

}  // namespace

TEST_CASE("synthetic frames hold one bright square on a dark background") {
  const Tensor frame = synthetic_frame(40, 60, BBox{10, 12, 8, 8});
  CHECK(frame(0, 0, 0) == 0.08);
  CHECK(frame(1, 15, 13) == 0.85);
  CHECK(frame(2, 12, 10) == 0.85);
  CHECK(frame(0, 11, 10) == 0.08);
  CHECK(frame(0, 39, 59) == 0.08);
}

TEST_CASE("a perfect sequence reports the strict-grid ceiling in percent") {
  TempDir out("dktrack_cli_rep_");
  const BenchmarkReport report = perfect_report(4);
  emit_report(report, out.path, false);
  const std::string metrics = slurp(out.path / "metrics.csv");
  CHECK(metrics ==
        "sequence,frames,auc,prec20,nprec02\n"
        "seq,4,95.24,100.00,100.00\n"
        "ALL,4,95.24,100.00,100.00\n");
  const std::string cle = slurp(out.path / "cle_seq.csv");
  CHECK(count_lines(cle) == 5);
  CHECK(cle.substr(0, 19) == "frame,cle,norm_cle\n");
  CHECK_FALSE(fs::exists(out.path / "curves.svg"));
}

TEST_CASE("an empty report emits a header-only CSV and no plot") {
  TempDir gt("dktrack_cli_egt_");
  TempDir pred("dktrack_cli_epred_");
  TempDir out("dktrack_cli_eout_");
  const BenchmarkReport report = run_benchmark(gt.path, pred.path);
  emit_report(report, out.path, true);
  CHECK(slurp(out.path / "metrics.csv") == "sequence,frames,auc,prec20,nprec02\n");
  CHECK_FALSE(fs::exists(out.path / "curves.svg"));
}

TEST_CASE("report emission is byte-stable and the plot holds three curves") {
  TempDir out_a("dktrack_cli_ra_");
  TempDir out_b("dktrack_cli_rb_");
  const BenchmarkReport report = perfect_report(3);
  emit_report(report, out_a.path, true);
  emit_report(report, out_b.path, true);
  CHECK(slurp(out_a.path / "metrics.csv") == slurp(out_b.path / "metrics.csv"));
  CHECK(slurp(out_a.path / "cle_seq.csv") == slurp(out_b.path / "cle_seq.csv"));
  const std::string svg = slurp(out_a.path / "curves.svg");
  CHECK(svg == slurp(out_b.path / "curves.svg"));
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 3);
  CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
}

TEST_CASE("usage errors exit with status 2") {
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"demo", "--bogus-flag"}) == 2);
  CHECK(run_cli({"eval", "--gt", "x"}) == 2);          // missing required flags
  CHECK(run_cli({"gradcheck", "--trials", "0"}) == 2); // rejected by validator
  CHECK(run_cli({"demo", "--config", "/no/such/file.cfg"}) == 2);
}

TEST_CASE("gradient verification passes well under the tolerance") {
  CHECK(run_cli({"gradcheck", "--trials", "36"}) == 0);
  CHECK(run_cli({"gradcheck", "--trials", "18", "--tau", "0.3"}) == 0);
}

TEST_CASE("evaluation writes reports and flags empty fixture sets") {
  TempDir gt("dktrack_cli_vgt_");
  TempDir pred("dktrack_cli_vpred_");
  TempDir out("dktrack_cli_vout_");
  std::vector<BBox> boxes(3, BBox{5, 6, 7, 8});
  atomic_write(gt.path / "a.txt", serialize_annotations(boxes));
  atomic_write(pred.path / "a.txt", serialize_annotations(boxes));
  CHECK(run_cli({"eval", "--gt", gt.path.string(), "--pred", pred.path.string(),
                 "--out", out.path.string(), "--svg"}) == 0);
  CHECK(fs::exists(out.path / "metrics.csv"));
  CHECK(fs::exists(out.path / "cle_a.csv"));
  CHECK(fs::exists(out.path / "curves.svg"));

  TempDir empty_gt("dktrack_cli_zgt_");
  TempDir empty_pred("dktrack_cli_zpred_");
  CHECK(run_cli({"eval", "--gt", empty_gt.path.string(), "--pred",
                 empty_pred.path.string(), "--out", out.path.string()}) == 1);
}

TEST_CASE("normalization ablation keeps one argmax across modes") {
  TempDir out("dktrack_cli_ab_");
  CHECK(run_cli({"ablate-norm", "--seed", "42", "--out", out.path.string()}) == 0);
  const std::string csv = slurp(out.path / "ablate_norm.csv");
  CHECK(count_lines(csv) == 6);

  // All five rows carry the same argmax channel.
  std::string argmax;
  std::size_t pos = csv.find('\n') + 1;
  bool same = true;
  while (pos < csv.size()) {
    const std::size_t c1 = csv.find(',', pos);
    const std::size_t c2 = csv.find(',', c1 + 1);
    const std::string a = csv.substr(c1 + 1, c2 - c1 - 1);
    if (argmax.empty()) argmax = a;
    same = same && a == argmax;
    pos = csv.find('\n', pos) + 1;
  }
  CHECK(same);

  // A different seed produces a different fixture and different checksums.
  TempDir out2("dktrack_cli_ab2_");
  CHECK(run_cli({"ablate-norm", "--seed", "43", "--out", out2.path.string()}) == 0);
  CHECK(slurp(out2.path / "ablate_norm.csv") != csv);
}

TEST_CASE("the demo is deterministic at the reduced geometry") {
  TempDir dir("dktrack_cli_demo_");
  const RunConfig cfg = small_run_config();
  const fs::path cfg_path = write_config(dir, cfg);

  const fs::path out_a = dir.path / "a";
  const fs::path out_b = dir.path / "b";
  CHECK(run_cli({"demo", "--config", cfg_path.string(), "--out",
                 out_a.string()}) == 0);
  CHECK(run_cli({"demo", "--config", cfg_path.string(), "--out",
                 out_b.string()}) == 0);

  const std::string moving = slurp(out_a / "demo_moving.csv");
  CHECK(moving == slurp(out_b / "demo_moving.csv"));
  CHECK(slurp(out_a / "demo_static.csv") == slurp(out_b / "demo_static.csv"));
  CHECK(count_lines(moving) == cfg.frames + 1);
  CHECK(moving.substr(0, 42) == "frame,x,y,w,h,gt_x,gt_y,gt_w,gt_h,cle\n0,60");
}

TEST_CASE("the seed env override changes the ablation fixture") {
  TempDir out("dktrack_cli_env_");
  ::setenv("DKTRACK_SEED", "1234", 1);
  const int rc = run_cli({"ablate-norm", "--out", out.path.string()});
  ::unsetenv("DKTRACK_SEED");
  CHECK(rc == 0);
  TempDir out_def("dktrack_cli_envd_");
  CHECK(run_cli({"ablate-norm", "--out", out_def.path.string()}) == 0);
  CHECK(slurp(out.path / "ablate_norm.csv") !=
        slurp(out_def.path / "ablate_norm.csv"));
}

TEST_CASE("inspect dumps kernel internals for a stored frame") {
  TempDir dir("dktrack_cli_ins_");
  RunConfig cfg = small_run_config();
  cfg.init_box = {40, 36, 24, 24};
  const fs::path cfg_path = write_config(dir, cfg);
  const fs::path frame_path = dir.path / "frame.ppm";
  save_image_ppm(frame_path, synthetic_frame(96, 96, cfg.init_box));
  const fs::path out = dir.path / "dump";

  CHECK(run_cli({"inspect", "--config", cfg_path.string(), "--frame",
                 frame_path.string(), "--out", out.string()}) == 0);
  const std::string means = slurp(out / "dk_channel_means.csv");
  CHECK(count_lines(means) == cfg.model.embed_ch + 1);
  CHECK(count_lines(slurp(out / "mask_bits.csv")) == cfg.model.embed_ch + 1);
  CHECK(count_lines(slurp(out / "prompt.csv")) == cfg.model.embed_ch + 1);

  // Without the encoder pathway there is no kernel to dump.
  RunConfig no_enc = cfg;
  no_enc.model.use_encoder = false;
  no_enc.model.use_prompt = false;
  const fs::path cfg2 = write_config(dir, no_enc, "no_enc.cfg");
  CHECK(run_cli({"inspect", "--config", cfg2.string(), "--frame",
                 frame_path.string(), "--out", out.string()}) == 2);
}
