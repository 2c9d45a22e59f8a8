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

// phop: photonic Hopfield simulator command line.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phop/commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)");
  cmd->add_option("--preset", f.preset, "Base configuration: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", f.seed, "Master seed (overrides master_seed)");
  cmd->add_option("--workers", f.workers, "Worker threads (overrides workers)");
}

/// Preset first, then the config file on top, then flag overrides.
phop::RunConfig resolve(const CommonFlags& f) {
  phop::RunConfig cfg = f.preset.empty() ? phop::RunConfig{} : phop::preset_config(f.preset);
  if (!f.config.empty()) cfg = phop::load_config(f.config, cfg);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phop: photonic generalized-Hopfield simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", phop::kVersion);

  phop::ValidateOptions vopt;
  std::string fault = "none";
  auto* validate = app.add_subcommand("validate", "Cross-check the probability routes");
  validate->add_option("--max-modes", vopt.max_modes, "Largest M")->capture_default_str();
  validate->add_option("--max-photons", vopt.max_photons, "Largest photon number")->capture_default_str();
  validate->add_option("--cases", vopt.cases, "Random cases per (M, N)")->capture_default_str();
  validate->add_option("--seed", vopt.seed, "Seed")->capture_default_str();
  validate->add_option("--inject-fault", fault, "Negative control: none or fast-path-sign")
      ->check(CLI::IsMember({"none", "fast-path-sign"}));

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Exchange Monte Carlo over disorder samples");
  add_common(run, run_flags);

  CommonFlags pd_flags;
  auto* pd = app.add_subcommand("phase-diagram", "Sweep the storage ratio over the ladder");
  add_common(pd, pd_flags);

  std::string run_dir;
  std::string analysis_out;
  auto* analyze = app.add_subcommand("analyze", "Recompute tables from a finished run");
  analyze->add_option("--run", run_dir, "Run directory")->required();
  analyze->add_option("--out", analysis_out, "Output directory (default RUN/analysis)");

  std::vector<int> taus;
  auto* selfcorr = app.add_subcommand("selfcorr", "Spin self-correlation F(tau) per temperature");
  selfcorr->add_option("--run", run_dir, "Run directory")->required();
  selfcorr->add_option("--tau", taus, "Lags in MC steps (default from the run config)");
  selfcorr->add_option("--out", analysis_out, "Output directory (default RUN/analysis)");

  phop::BenchOptions bopt;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-scaling", "Per-flip cost against |Lambda|");
  bench->add_option("--modes", bopt.num_modes, "M")->capture_default_str();
  bench->add_option("--photons", bopt.num_photons, "Photon number")->capture_default_str();
  bench->add_option("--sizes", bopt.sizes, "Channel counts")->capture_default_str();
  bench->add_option("--fit-min", bopt.fit_min, "Smallest size in the fit")->capture_default_str();
  bench->add_option("--proposals", bopt.proposals, "Proposals per timing")->capture_default_str();
  bench->add_option("--repeats", bopt.repeats, "Timings per size (fastest kept)")->capture_default_str();
  bench->add_option("--seed", bopt.seed, "Seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Write CSV tables here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : phop::kExitConfigError;
  }

  try {
    if (*validate) {
      vopt.fault = fault == "fast-path-sign" ? phop::Fault::FastPathSign : phop::Fault::None;
      return phop::cmd_validate(vopt, std::cout);
    }
    if (*run) return phop::cmd_run(resolve(run_flags), std::cout);
    if (*pd) return phop::cmd_phase_diagram(resolve(pd_flags), std::cout);
    std::optional<std::filesystem::path> out;
    if (!analysis_out.empty()) out = analysis_out;
    if (*analyze) return phop::cmd_analyze(run_dir, out, std::cout);
    if (*selfcorr) {
      std::optional<std::vector<int>> lags;
      if (!taus.empty()) lags = taus;
      return phop::cmd_selfcorr(run_dir, lags, out, std::cout);
    }
    if (*bench) {
      std::optional<std::filesystem::path> dir;
      if (!bench_out.empty()) dir = bench_out;
      return phop::cmd_bench_scaling(bopt, dir, std::cout);
    }
  } catch (const phop::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return phop::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return phop::kExitCheckFailed;
  }
  return phop::kExitOk;
}
