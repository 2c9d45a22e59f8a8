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

#ifndef PHOP_ANALYSIS_HPP
#define PHOP_ANALYSIS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phop/dynamics.hpp"
#include "phop/model.hpp"

namespace phop {

/// q_ab = (1/M) Σ_j σ_j^a σ_j^b.
double overlap_q(const SpinConfig& a, const SpinConfig& b);
double overlap_q(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

/// Uniform-bin histogram. Weights are stored as mass fractions after
/// pooling, as raw counts otherwise.
class Histogram {
 public:
  explicit Histogram(int bins = 51, double lo = -1.0, double hi = 1.0);

  void add(double x, double weight = 1.0);

  int bins() const { return static_cast<int>(weights_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double bin_width() const { return (hi_ - lo_) / bins(); }
  double bin_center(int i) const { return lo_ + (i + 0.5) * bin_width(); }
  double total() const { return total_; }
  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }

  /// Probability density in bin i; Σ density·width = 1 for a non-empty
  /// histogram.
  double density(int i) const;
  double mass(int i) const { return total_ > 0.0 ? weight(i) / total_ : 0.0; }

  /// Mass-weighted mean of bin centers.
  double mean() const;

  /// Equal-weight average of the normalized inputs. Empty inputs are skipped.
  static Histogram pool(std::span<const Histogram> parts);

 private:
  double lo_, hi_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// Replica-overlap statistics at one (α, T) point.
struct OverlapStats {
  Histogram hist{51, -1.0, 1.0};
  std::vector<double> samples;
  double mean_abs = 0.0;
  /// Fraction of samples with |q| > 0.5.
  double frac_strong = 0.0;
};

/// q over every distinct replica pair, using snapshots every `stride` MC
/// steps (stride a multiple of the snapshot stride).
OverlapStats collect_pq(std::span<const Trajectory* const> replicas, int stride);

/// Memory-overlap statistics over the channels of Λ.
struct MemoryStats {
  Histogram re{51, -1.0, 1.0};
  Histogram abs{50, 0.0, 1.0};
  double mean_abs = 0.0;
  /// Per-snapshot max over k ∈ Λ of |m̂_k|, averaged.
  double mean_max_abs = 0.0;
  std::size_t snapshots = 0;
};

MemoryStats collect_pm(std::span<const Trajectory* const> replicas, const ModelInstance& inst,
                       int stride);

enum class Phase { Retrieval, SpinGlass, Paramagnet };
std::string to_string(Phase p);

struct PhaseThresholds {
  double memory = 0.5;
  double overlap = 0.3;
  friend bool operator==(const PhaseThresholds&, const PhaseThresholds&) = default;
};

/// Aggregated observables at one (α, T) grid point.
struct CellSummary {
  double alpha = 0.0;
  int channels = 0;
  double temperature = 0.0;
  int num_modes = 0;
  Histogram pq{51, -1.0, 1.0};
  Histogram pm_re{51, -1.0, 1.0};
  Histogram pm_abs{50, 0.0, 1.0};
  double mean_abs_q = 0.0;
  double frac_strong_q = 0.0;
  double mean_abs_m = 0.0;
  double mean_max_abs_m = 0.0;
  /// Standard error of mean_max_abs_m across disorder samples.
  double mean_max_abs_m_err = 0.0;
  double energy_mean = 0.0;
  double energy_sd = 0.0;
  double pr_mean = 0.0;
  double sigma_t = 0.0;
  double swap_rate = 0.0;
  std::size_t replica_pairs = 0;
  int samples = 0;
};

/// Retrieval if mean max |m̂| > θ_m, else SpinGlass if mean |q| > θ_q, else
/// Paramagnet. Throws on a cell without samples.
Phase classify_phase(const CellSummary& cell, const PhaseThresholds& thresholds = {});

/// Everything needed to build and simulate one disorder ensemble.
struct EnsembleSpec {
  int num_modes = 50;
  int num_photons = 2;
  Schedule schedule;
  int replica_groups = 12;
  int samples = 4;
  std::uint64_t seed = 1;
  int workers = 1;
  InitMode init = InitMode::Random;
  /// Snapshot stride for overlap sampling, in MC steps.
  int overlap_stride = 200;
};

/// P = round(α M^N). Throws if P < 1 or, for bunched sets, P > M.
int channel_count(double alpha, int num_modes, int num_photons);

std::uint64_t matrix_seed(std::uint64_t master, int sample);
std::uint64_t lambda_seed(std::uint64_t master, int sample);
/// Dynamics stream for (|Λ|, sample); independent of the rest of the α grid.
std::uint64_t dynamics_seed(std::uint64_t master, int channels, int sample);

/// Haar S and a random bunched Λ of P channels for disorder sample `sample`.
ModelInstance build_instance(const EnsembleSpec& spec, double alpha, int sample);

/// Per-sample observables at one ladder slot.
CellSummary summarize_cell(const EmcResult& run, const ModelInstance& inst, int temperature_index,
                           int overlap_stride);

/// Equal-weight pooling over disorder samples.
CellSummary pool_cells(std::span<const CellSummary> per_sample);

struct SweepResult {
  std::vector<double> alphas;
  std::vector<double> temperatures;
  /// cells[a * temperatures.size() + t]
  std::vector<CellSummary> cells;

  const CellSummary& at(std::size_t alpha_index, std::size_t temperature_index) const {
    return cells.at(alpha_index * temperatures.size() + temperature_index);
  }
};

/// For each α, run EMC over the ladder spec.schedule.temperatures on every
/// disorder sample and pool the per-temperature observables.
SweepResult phase_sweep(const EnsembleSpec& spec, std::span<const double> alphas,
                        const std::function<void(const std::string&)>& progress = {});

/// The cell nearest to `temperature` for each M in `sizes`, at fixed α.
std::vector<CellSummary> finite_size_study(const EnsembleSpec& base, std::span<const int> sizes,
                                           double alpha, double temperature,
                                           const std::function<void(const std::string&)>& progress = {});

/// Two-sample Kolmogorov-Smirnov statistic D.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic p-value of D for sample sizes n and m.
double ks_pvalue(double d, std::size_t n, std::size_t m);

}  // namespace phop

#endif  // PHOP_ANALYSIS_HPP
