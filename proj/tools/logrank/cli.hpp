#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "logrank/keyvalue.hpp"
#include "logrank/lvm.hpp"

namespace logrank::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kCapacity = 4 };

// Maps a thrown exception to the documented exit code.
int exit_code_for(const std::exception& e);

struct ScanConfig {
  LvmSpec spec;
  std::vector<double> epsilons;      // ascending
  std::vector<std::size_t> n_values;  // ascending
  std::size_t draws = 1;
  std::uint64_t master_seed = 0;
};

struct ScanRecord {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t draw = 0;  // ignored when is_max
  bool is_max = false;
  std::size_t rank_upper_bound = 0;
  // Time for the draw's generation, SVD and μ scan; shared by its ε rows.
  // Max rows carry the slowest draw.
  double wall_time_seconds = 0.0;
};

// Model keys plus epsilons, n_values, draws_per_cell, master_seed.
ScanConfig parse_scan_config(const KeyValueMap& kv);
ScanConfig load_scan_config(const std::filesystem::path& path);

// RBF on the unit sphere in ℝ^1000, ε from 1e-4 to 0.03, n from 300 to 3000.
ScanConfig full_scale_config(std::uint64_t master_seed);

// Seed of draw d at size n. Independent of ε, so every ε in a cell reads the
// same matrix, and adding cells leaves other cells' draws untouched.
std::uint64_t scan_seed(std::uint64_t master_seed, std::size_t n, std::size_t draw);

using ScanProgress = std::function<void(std::size_t n, std::size_t draw, double seconds)>;

// Rows sorted by (ε, n, draw) with each cell's max row after its draws.
std::vector<ScanRecord> run_scan(const ScanConfig& config, const ScanProgress& progress = {});

std::string scan_csv(const std::vector<ScanRecord>& records);
// Standalone 900x600 SVG: max rank upper bound against n (log axis), one line per ε.
std::string scan_svg(const std::vector<ScanRecord>& records);

// Shortest round-trip decimal form.
std::string shortest(double v);

// Full command-line entry point; writes results to out and diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logrank::cli
