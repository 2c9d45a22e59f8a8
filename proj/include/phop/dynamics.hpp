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

#ifndef PHOP_DYNAMICS_HPP
#define PHOP_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "phop/model.hpp"
#include "phop/spin.hpp"

namespace phop {

using Rng = std::mt19937_64;

/// Deterministic seed derivation. Each index is folded into the running
/// state with a splitmix64 finalizer:
///   s ← mix(s ⊕ (index + 0x9e3779b97f4a7c15)), starting from s = master.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices);

/// Stream tags used with derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t kMatrix = 1;
inline constexpr std::uint64_t kLambda = 2;
inline constexpr std::uint64_t kReplica = 3;
inline constexpr std::uint64_t kExchange = 4;
inline constexpr std::uint64_t kDynamics = 5;
}  // namespace seed_tag

/// Monte Carlo protocol. One MC step is M single-spin proposals.
struct Schedule {
  int n_therm = 200000;
  int n_measure = 10000;
  int exchange_interval = 200;
  /// Record a spin snapshot every this many measured steps.
  int snapshot_stride = 1;
  /// When false every temperature runs independent Metropolis.
  bool exchange = true;
  std::vector<double> temperatures;

  /// Throws std::invalid_argument on bad counts or a non-increasing ladder.
  void validate() const;
};

std::vector<double> geometric_ladder(double t_min, double t_max, int count);
std::vector<double> linear_ladder(double t_min, double t_max, int count);

/// One replica: spins, cached probability and its own random stream.
struct MCState {
  SpinConfig sigma;
  Evaluator cache;
  double pr = 0.0;
  double temperature = 1.0;
  Rng rng;
  std::int64_t step_count = 0;

  MCState() = default;
  MCState(const ModelInstance& inst, SpinConfig initial, double temperature, std::uint64_t seed);

  double energy() const { return -static_cast<double>(sigma.size()) * pr; }
};

/// Metropolis rule: accept if ΔH < 0, else with probability exp(-ΔH/T).
/// T <= 0 accepts downhill moves only.
bool metropolis_accept(double delta_h, double temperature, double uniform);

/// Propose σ_i → -σ_i. Rejected moves leave the state untouched.
bool metropolis_flip(MCState& state, const ModelInstance& inst, int i);

/// M proposals at uniformly random sites (with replacement). Returns the
/// number accepted.
int mc_step(MCState& state, const ModelInstance& inst);

/// min(1, exp((1/T_a - 1/T_b)(E_a - E_b))).
double swap_probability(double t_a, double t_b, double e_a, double e_b);

struct SwapStats {
  std::int64_t attempts = 0;
  std::int64_t accepted = 0;
  double rate() const { return attempts ? static_cast<double>(accepted) / attempts : 0.0; }
};

/// One exchange sweep over a temperature-sorted ladder. Pairs (0,1),(2,3),...
/// when `odd` is false, (1,2),(3,4),... otherwise. Configurations move,
/// temperatures and random streams stay with their slot.
void exchange_sweep(std::span<MCState> ladder, bool odd, Rng& rng,
                    std::span<SwapStats> stats = {});

/// Measured history of one temperature slot of one replica group.
struct Trajectory {
  int replica_group = 0;
  int temperature_index = 0;
  double temperature = 0.0;
  int num_modes = 0;
  int snapshot_stride = 1;
  /// Snapshots, row-major: snapshot t occupies [t*M, (t+1)*M).
  std::vector<std::int8_t> spins;
  std::vector<double> pr;
  std::vector<double> energy;

  std::size_t length() const { return pr.size(); }
  std::size_t snapshot_count() const {
    return num_modes ? spins.size() / static_cast<std::size_t>(num_modes) : 0;
  }
  std::span<const std::int8_t> snapshot(std::size_t t) const {
    return std::span<const std::int8_t>(spins).subspan(t * static_cast<std::size_t>(num_modes),
                                                        static_cast<std::size_t>(num_modes));
  }
};

enum class InitMode { Random, Planted };

/// Spins aligned with the first channel of Λ: σ_j = sign Re(e^{-iθ} S_{μj})
/// at the θ (of 256 grid angles) maximizing |f_μ|.
SpinConfig planted_spins(const ModelInstance& inst);

struct LadderRecord {
  std::vector<Trajectory> trajectories;
  /// Energies sampled every exchange_interval steps during thermalization.
  std::vector<std::vector<double>> therm_energy;
  std::vector<SwapStats> swaps;
};

struct EmcResult {
  /// groups[g] is replica group g, a full temperature ladder.
  std::vector<LadderRecord> groups;

  /// Trajectories of every group at one ladder slot.
  std::vector<const Trajectory*> at_temperature(int temperature_index) const;
};

struct EmcOptions {
  InitMode init = InitMode::Random;
  int workers = 1;
  /// Invoked after each group finishes (thread-safe by serialization).
  std::function<void(int group)> on_group_done;
};

/// Exchange Monte Carlo for `n_groups` independent replica groups, each a
/// full ladder. Group g uses streams derived from (seed, g); the result does
/// not depend on the worker count.
EmcResult run_emc(const ModelInstance& inst, const Schedule& schedule, int n_groups,
                  std::uint64_t seed, const EmcOptions& options = {});

/// F(τ) = (1/(N_valid M)) Σ_t Σ_i σ_i(t) σ_i(t+τ), τ in MC steps (a multiple
/// of the snapshot stride).
double self_correlation(const Trajectory& traj, int tau);

/// sqrt(pr (1 - pr) / n_exp).
double measurement_noise(double pr, std::int64_t n_exp);

/// Empirical standard deviation of k/n_exp with k ~ Binomial(n_exp, pr),
/// over `trials` draws.
double simulated_frequency_sd(double pr, std::int64_t n_exp, int trials, std::uint64_t seed);

/// Standard deviation of successive-step differences of Pr.
double thermal_fluctuation(const Trajectory& traj);

/// Run T = 0 dynamics until a full step accepts nothing or `max_steps`.
/// Returns the energy after every step.
std::vector<double> zero_temperature_quench(MCState& state, const ModelInstance& inst,
                                            int max_steps);

}  // namespace phop

#endif  // PHOP_DYNAMICS_HPP
