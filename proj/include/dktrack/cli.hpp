// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dktrack/io.hpp"
#include "dktrack/metrics.hpp"

namespace dktrack {

// Writes metrics.csv (one percent-formatted row per sequence plus a pooled
// ALL row), one cle_<name>.csv per sequence, and, when svg is set and the
// report holds frames, curves.svg with the three aggregate curves. Every
// file goes through the atomic writer.
void emit_report(const BenchmarkReport& report,
                 const std::filesystem::path& out_dir, bool svg);

// Synthetic night scene: dark background with one bright square at the
// target box. Shared by the demo subcommand and the test fixtures.
Tensor synthetic_frame(int height, int width, const BBox& target);

// Entry point behind main(). args excludes argv[0].
// Exit codes: 0 all checks pass, 1 tolerance failure, 2 usage or input error.
int run_cli(const std::vector<std::string>& args);

}  // namespace dktrack
