// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dktrack/bbox.hpp"
#include "dktrack/config.hpp"
#include "dktrack/tensor.hpp"

namespace dktrack {

// One box per line, four comma/tab/space separated numbers (x, y, w, h).
// Malformed lines are rejected with their 1-based line number.
std::vector<BBox> parse_annotations(const std::string& text,
                                    const std::string& source_name);
std::vector<BBox> load_annotation_file(const std::filesystem::path& path);
std::string serialize_annotations(const std::vector<BBox>& boxes);

// Binary PPM (P6) and PGM (P5), 8- or 16-bit samples, values scaled to [0,1].
// Grayscale input is replicated to three channels.
Tensor load_image(const std::filesystem::path& path);
void save_image_ppm(const std::filesystem::path& path, const Tensor& img);

// Flat key = value configuration. Unknown keys are rejected; serialization is
// canonical, so parse -> serialize -> parse is the identity.
struct RunConfig {
  ModelConfig model;
  BBox init_box{0, 0, 0, 0};  // w,h zero means "not set"
  int frames = 20;
  std::string gt_dir;
  std::string pred_dir;
  std::string out_dir;
  std::string frame_path;
  bool svg = false;
  int trials = 200;
};

RunConfig parse_config_text(const std::string& text, const std::string& source_name);
RunConfig load_config_file(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

// $DKTRACK_SEED, when set, overrides the configured seed. The only
// environment knob the artifact reads.
void apply_env_overrides(RunConfig& cfg);

// Write-to-temp then rename; interrupted runs never leave truncated output.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Locale-independent fixed-precision formatting for report files.
std::string format_fixed(double v, int precision);
// Shortest round-trip formatting; parsing the result recovers the exact value.
std::string format_shortest(double v);

std::uint64_t fnv1a64(const void* data, std::size_t n);

}  // namespace dktrack
