// Copyright 2026 The phop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHOP_COMMANDS_HPP
#define PHOP_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "phop/analysis.hpp"
#include "phop/run_config.hpp"

namespace phop {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2 };

// ---- validate ---------------------------------------------------------------

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int cases = 0;
  bool passed = true;
};

/// Deliberate defects for negative controls.
enum class Fault { None, FastPathSign };

struct ValidateOptions {
  int min_modes = 1;
  int min_photons = 1;
  int max_modes = 7;
  int max_photons = 3;
  int cases = 20;
  std::uint64_t seed = 1;
  Fault fault = Fault::None;
};

/// Cross-checks of the independent probability routes on random instances:
/// fast vs exact, normalization, DFT amplitudes, flip updates and the
/// two-photon coupling expansion.
std::vector<CheckResult> run_validation(const ValidateOptions& options);

// ---- bench-scaling ----------------------------------------------------------

struct BenchOptions {
  int num_modes = 50;
  int num_photons = 2;
  std::vector<int> sizes{1, 5, 10, 25, 50};
  /// Sizes below this are reported but left out of the fit.
  int fit_min = 5;
  std::int64_t proposals = 1'000'000;
  int repeats = 10;
  std::uint64_t seed = 1;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct BenchResult {
  std::vector<int> sizes;
  /// Fastest of the repeats, in nanoseconds per accepted flip.
  std::vector<double> ns_per_flip;
  LinearFit fit;
};

BenchResult bench_scaling(const BenchOptions& options);

// ---- run artifacts ----------------------------------------------------------

/// A run directory with its manifest checked against every declared file.
struct RunArtifacts {
  std::filesystem::path dir;
  nlohmann::json manifest;
  RunConfig config;

  /// Verifies checksums and refuses undeclared files in the directory.
  static RunArtifacts open(const std::filesystem::path& dir);

  /// Trajectories of one disorder sample, rebuilt from disk.
  EmcResult load_sample(int sample) const;
};

/// Per-temperature cells of every sample, pooled across samples.
std::vector<CellSummary> summarize_run(const RunArtifacts& run);

/// Tables shared by run, analyze and phase-diagram.
std::string summary_csv(std::span<const CellSummary> cells, const PhaseThresholds& thresholds,
                        std::int64_t n_exp);
std::string histograms_csv(std::span<const CellSummary> cells);
std::string noise_window_csv(std::span<const CellSummary> cells, std::int64_t n_exp);

// ---- commands (return an ExitCode) ------------------------------------------

int cmd_validate(const ValidateOptions& options, std::ostream& out);
int cmd_run(const RunConfig& config, std::ostream& log);
int cmd_analyze(const std::filesystem::path& run_dir, std::optional<std::filesystem::path> out_dir,
                std::ostream& log);
int cmd_selfcorr(const std::filesystem::path& run_dir, std::optional<std::vector<int>> taus,
                 std::optional<std::filesystem::path> out_dir, std::ostream& log);
int cmd_phase_diagram(const RunConfig& config, std::ostream& log);
int cmd_bench_scaling(const BenchOptions& options, std::optional<std::filesystem::path> out_dir,
                      std::ostream& log);

}  // namespace phop

#endif  // PHOP_COMMANDS_HPP
