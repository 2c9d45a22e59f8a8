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

#include "phop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace phop {

double overlap_q(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("overlap_q: length mismatch");
  if (a.empty()) throw std::invalid_argument("overlap_q: empty configuration");
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return static_cast<double>(sum) / static_cast<double>(a.size());
}

double overlap_q(const SpinConfig& a, const SpinConfig& b) { return overlap_q(a.raw(), b.raw()); }

Histogram::Histogram(int bins, double lo, double hi) : lo_(lo), hi_(hi) {
  if (bins < 1) throw std::invalid_argument("Histogram: bins must be >= 1");
  if (!(hi > lo)) throw std::invalid_argument("Histogram: empty range");
  weights_.assign(static_cast<std::size_t>(bins), 0.0);
}

void Histogram::add(double x, double weight) {
  if (!std::isfinite(x)) throw std::invalid_argument("Histogram: non-finite sample");
  // Samples on the closed upper edge land in the last bin.
  int i = static_cast<int>(std::floor((x - lo_) / bin_width()));
  if (x < lo_ || x > hi_) throw std::out_of_range("Histogram: sample outside range");
  i = std::clamp(i, 0, bins() - 1);
  weights_[static_cast<std::size_t>(i)] += weight;
  total_ += weight;
}

double Histogram::density(int i) const { return mass(i) / bin_width(); }

double Histogram::mean() const {
  if (total_ <= 0.0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < bins(); ++i) s += weight(i) * bin_center(i);
  return s / total_;
}

Histogram Histogram::pool(std::span<const Histogram> parts) {
  if (parts.empty()) throw std::invalid_argument("Histogram::pool: nothing to pool");
  Histogram out(parts.front().bins(), parts.front().lo(), parts.front().hi());
  int used = 0;
  for (const auto& h : parts) {
    if (h.bins() != out.bins() || h.lo() != out.lo() || h.hi() != out.hi()) {
      throw std::invalid_argument("Histogram::pool: incompatible binning");
    }
    if (h.total() <= 0.0) continue;
    for (int i = 0; i < out.bins(); ++i) out.weights_[static_cast<std::size_t>(i)] += h.mass(i);
    ++used;
  }
  if (used == 0) return out;
  for (auto& w : out.weights_) w /= used;
  out.total_ = std::accumulate(out.weights_.begin(), out.weights_.end(), 0.0);
  return out;
}

namespace {

void check_stride(std::span<const Trajectory* const> replicas, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  for (const auto* t : replicas) {
    if (t == nullptr) throw std::invalid_argument("null trajectory");
    if (stride % t->snapshot_stride != 0) {
      throw std::invalid_argument("stride must be a multiple of the snapshot stride");
    }
  }
}

}  // namespace

OverlapStats collect_pq(std::span<const Trajectory* const> replicas, int stride) {
  if (replicas.size() < 2) throw std::invalid_argument("collect_pq: need at least 2 replicas");
  check_stride(replicas, stride);
  OverlapStats out;
  std::size_t strong = 0;
  double abs_sum = 0.0;
  for (std::size_t a = 0; a < replicas.size(); ++a) {
    for (std::size_t b = a + 1; b < replicas.size(); ++b) {
      const Trajectory& ta = *replicas[a];
      const Trajectory& tb = *replicas[b];
      if (ta.num_modes != tb.num_modes) throw std::invalid_argument("collect_pq: size mismatch");
      const std::size_t step_a = static_cast<std::size_t>(stride / ta.snapshot_stride);
      const std::size_t step_b = static_cast<std::size_t>(stride / tb.snapshot_stride);
      for (std::size_t ia = 0, ib = 0; ia < ta.snapshot_count() && ib < tb.snapshot_count();
           ia += step_a, ib += step_b) {
        const double q = overlap_q(ta.snapshot(ia), tb.snapshot(ib));
        out.hist.add(q);
        out.samples.push_back(q);
        abs_sum += std::abs(q);
        if (std::abs(q) > 0.5) ++strong;
      }
    }
  }
  if (!out.samples.empty()) {
    out.mean_abs = abs_sum / static_cast<double>(out.samples.size());
    out.frac_strong = static_cast<double>(strong) / static_cast<double>(out.samples.size());
  }
  return out;
}

MemoryStats collect_pm(std::span<const Trajectory* const> replicas, const ModelInstance& inst,
                       int stride) {
  if (inst.num_photons() != 2) throw std::invalid_argument("collect_pm: requires two photons");
  check_stride(replicas, stride);
  std::vector<std::pair<int, int>> channels;
  for (const auto& k : inst.lambda().configs(inst.num_photons(), inst.num_modes())) {
    channels.emplace_back(k[0], k[1]);
  }
  MemoryStats out;
  if (channels.empty()) return out;
  double abs_sum = 0.0, max_sum = 0.0;
  std::size_t abs_count = 0;
  for (const auto* traj : replicas) {
    const std::size_t step = static_cast<std::size_t>(stride / traj->snapshot_stride);
    for (std::size_t t = 0; t < traj->snapshot_count(); t += step) {
      const auto snap = traj->snapshot(t);
      const SpinConfig sigma(std::vector<std::int8_t>(snap.begin(), snap.end()));
      const auto fields = output_fields(inst.scattering(), sigma);
      double best = 0.0;
      for (const auto& [k1, k2] : channels) {
        const Complex m = normalized_overlap_from_fields(fields, k1, k2);
        out.re.add(std::clamp(m.real(), -1.0, 1.0));
        const double a = std::abs(m);
        out.abs.add(std::min(a, 1.0));
        abs_sum += a;
        ++abs_count;
        best = std::max(best, a);
      }
      max_sum += best;
      ++out.snapshots;
    }
  }
  if (out.snapshots > 0) {
    out.mean_abs = abs_sum / static_cast<double>(abs_count);
    out.mean_max_abs = max_sum / static_cast<double>(out.snapshots);
  }
  return out;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Retrieval: return "retrieval";
    case Phase::SpinGlass: return "spin-glass";
    case Phase::Paramagnet: return "paramagnet";
  }
  return "unknown";
}

Phase classify_phase(const CellSummary& cell, const PhaseThresholds& thresholds) {
  if (cell.samples < 1 || cell.pq.total() <= 0.0) {
    throw std::invalid_argument("classify_phase: empty cell");
  }
  if (cell.mean_max_abs_m > thresholds.memory) return Phase::Retrieval;
  if (cell.mean_abs_q > thresholds.overlap) return Phase::SpinGlass;
  return Phase::Paramagnet;
}

int channel_count(double alpha, int num_modes, int num_photons) {
  if (!(alpha > 0.0)) throw std::invalid_argument("channel_count: alpha must be positive");
  const double p = std::round(alpha * std::pow(static_cast<double>(num_modes), num_photons));
  if (p < 1.0) throw std::invalid_argument("channel_count: alpha gives fewer than one channel");
  if (p > num_modes) {
    throw std::invalid_argument("channel_count: more bunched channels than modes");
  }
  return static_cast<int>(p);
}

std::uint64_t matrix_seed(std::uint64_t master, int sample) {
  return derive_seed(master, {seed_tag::kMatrix, static_cast<std::uint64_t>(sample)});
}

std::uint64_t lambda_seed(std::uint64_t master, int sample) {
  return derive_seed(master, {seed_tag::kLambda, static_cast<std::uint64_t>(sample)});
}

ModelInstance build_instance(const EnsembleSpec& spec, double alpha, int sample) {
  const int p = channel_count(alpha, spec.num_modes, spec.num_photons);
  auto s = haar_random_unitary(spec.num_modes, matrix_seed(spec.seed, sample));
  // A fixed permutation per sample: smaller α uses a prefix of larger α's Λ.
  std::vector<int> order(static_cast<std::size_t>(spec.num_modes));
  {
    Rng rng(lambda_seed(spec.seed, sample));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<int> modes(order.begin(), order.begin() + p);
  std::sort(modes.begin(), modes.end());
  return ModelInstance(std::move(s), OutputSet::bunched_subset(std::move(modes), spec.num_modes),
                       spec.num_photons);
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

CellSummary summarize_cell(const EmcResult& run, const ModelInstance& inst, int temperature_index,
                           int overlap_stride) {
  const auto replicas = run.at_temperature(temperature_index);
  if (replicas.empty()) throw std::invalid_argument("summarize_cell: no replicas");
  CellSummary cell;
  cell.alpha = inst.alpha();
  cell.channels = static_cast<int>(inst.lambda().size());
  cell.temperature = replicas.front()->temperature;
  cell.num_modes = inst.num_modes();
  cell.samples = 1;

  if (replicas.size() >= 2) {
    auto pq = collect_pq(replicas, overlap_stride);
    cell.pq = std::move(pq.hist);
    cell.mean_abs_q = pq.mean_abs;
    cell.frac_strong_q = pq.frac_strong;
    cell.replica_pairs = replicas.size() * (replicas.size() - 1) / 2;
  }
  if (inst.num_photons() == 2) {
    auto pm = collect_pm(replicas, inst, overlap_stride);
    cell.pm_re = std::move(pm.re);
    cell.pm_abs = std::move(pm.abs);
    cell.mean_abs_m = pm.mean_abs;
    cell.mean_max_abs_m = pm.mean_max_abs;
  }

  double e_sum = 0.0, e2_sum = 0.0, pr_sum = 0.0;
  std::size_t n = 0;
  std::vector<double> sigma_t;
  for (const auto* traj : replicas) {
    for (std::size_t t = 0; t < traj->length(); ++t) {
      e_sum += traj->energy[t];
      e2_sum += traj->energy[t] * traj->energy[t];
      pr_sum += traj->pr[t];
    }
    n += traj->length();
    if (traj->length() >= 2) sigma_t.push_back(thermal_fluctuation(*traj));
  }
  if (n > 0) {
    cell.energy_mean = e_sum / static_cast<double>(n);
    cell.energy_sd = std::sqrt(std::max(0.0, e2_sum / static_cast<double>(n) -
                                                 cell.energy_mean * cell.energy_mean));
    cell.pr_mean = pr_sum / static_cast<double>(n);
  }
  cell.sigma_t = mean_of(sigma_t);

  // Swap rate of the pair above this slot (below for the top slot).
  std::int64_t attempts = 0, accepted = 0;
  for (const auto& g : run.groups) {
    if (g.swaps.empty()) continue;
    const std::size_t pair = std::min(static_cast<std::size_t>(temperature_index), g.swaps.size() - 1);
    attempts += g.swaps[pair].attempts;
    accepted += g.swaps[pair].accepted;
  }
  cell.swap_rate = attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
  return cell;
}

CellSummary pool_cells(std::span<const CellSummary> per_sample) {
  if (per_sample.empty()) throw std::invalid_argument("pool_cells: nothing to pool");
  CellSummary out;
  const auto& first = per_sample.front();
  out.alpha = first.alpha;
  out.channels = first.channels;
  out.temperature = first.temperature;
  out.num_modes = first.num_modes;
  std::vector<Histogram> pq, pm_re, pm_abs;
  std::vector<double> max_m;
  const double n = static_cast<double>(per_sample.size());
  for (const auto& c : per_sample) {
    pq.push_back(c.pq);
    pm_re.push_back(c.pm_re);
    pm_abs.push_back(c.pm_abs);
    out.mean_abs_q += c.mean_abs_q / n;
    out.frac_strong_q += c.frac_strong_q / n;
    out.mean_abs_m += c.mean_abs_m / n;
    out.energy_mean += c.energy_mean / n;
    out.energy_sd += c.energy_sd / n;
    out.pr_mean += c.pr_mean / n;
    out.sigma_t += c.sigma_t / n;
    out.swap_rate += c.swap_rate / n;
    out.replica_pairs += c.replica_pairs;
    out.samples += c.samples;
    max_m.push_back(c.mean_max_abs_m);
  }
  out.pq = Histogram::pool(pq);
  out.pm_re = Histogram::pool(pm_re);
  out.pm_abs = Histogram::pool(pm_abs);
  out.mean_max_abs_m = mean_of(max_m);
  if (max_m.size() >= 2) {
    double var = 0.0;
    for (double x : max_m) var += (x - out.mean_max_abs_m) * (x - out.mean_max_abs_m);
    var /= static_cast<double>(max_m.size() - 1);
    out.mean_max_abs_m_err = std::sqrt(var / static_cast<double>(max_m.size()));
  }
  return out;
}

std::uint64_t dynamics_seed(std::uint64_t master, int channels, int sample) {
  return derive_seed(master, {seed_tag::kDynamics, static_cast<std::uint64_t>(channels),
                              static_cast<std::uint64_t>(sample)});
}

namespace {

std::vector<CellSummary> run_sample(const EnsembleSpec& spec, double alpha, int sample) {
  const ModelInstance inst = build_instance(spec, alpha, sample);
  EmcOptions opts;
  opts.init = spec.init;
  opts.workers = spec.workers;
  const EmcResult run =
      run_emc(inst, spec.schedule, spec.replica_groups,
              dynamics_seed(spec.seed, static_cast<int>(inst.lambda().size()), sample), opts);
  std::vector<CellSummary> cells;
  for (int t = 0; t < static_cast<int>(spec.schedule.temperatures.size()); ++t) {
    cells.push_back(summarize_cell(run, inst, t, spec.overlap_stride));
  }
  return cells;
}

}  // namespace

SweepResult phase_sweep(const EnsembleSpec& spec, std::span<const double> alphas,
                        const std::function<void(const std::string&)>& progress) {
  if (alphas.empty()) throw std::invalid_argument("phase_sweep: empty alpha grid");
  spec.schedule.validate();
  if (spec.samples < 1) throw std::invalid_argument("phase_sweep: samples must be >= 1");
  // Fail before any compute if a grid point is infeasible.
  for (double a : alphas) channel_count(a, spec.num_modes, spec.num_photons);

  SweepResult out;
  out.alphas.assign(alphas.begin(), alphas.end());
  out.temperatures = spec.schedule.temperatures;
  const std::size_t nt = out.temperatures.size();
  for (double alpha : alphas) {
    std::vector<std::vector<CellSummary>> by_t(nt);
    for (int s = 0; s < spec.samples; ++s) {
      auto cells = run_sample(spec, alpha, s);
      for (std::size_t t = 0; t < nt; ++t) by_t[t].push_back(std::move(cells[t]));
      if (progress) {
        progress("alpha=" + std::to_string(alpha) + " sample " + std::to_string(s + 1) + "/" +
                 std::to_string(spec.samples));
      }
    }
    for (std::size_t t = 0; t < nt; ++t) out.cells.push_back(pool_cells(by_t[t]));
  }
  return out;
}

std::vector<CellSummary> finite_size_study(const EnsembleSpec& base, std::span<const int> sizes,
                                           double alpha, double temperature,
                                           const std::function<void(const std::string&)>& progress) {
  if (sizes.empty()) throw std::invalid_argument("finite_size_study: empty size list");
  base.schedule.validate();
  for (int m : sizes) channel_count(alpha, m, base.num_photons);
  const auto& ladder = base.schedule.temperatures;
  std::size_t slot = 0;
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (std::abs(ladder[i] - temperature) < std::abs(ladder[slot] - temperature)) slot = i;
  }
  std::vector<CellSummary> out;
  for (int m : sizes) {
    EnsembleSpec spec = base;
    spec.num_modes = m;
    std::vector<CellSummary> cells;
    for (int s = 0; s < spec.samples; ++s) {
      cells.push_back(std::move(run_sample(spec, alpha, s)[slot]));
      if (progress) {
        progress("M=" + std::to_string(m) + " sample " + std::to_string(s + 1) + "/" +
                 std::to_string(spec.samples));
      }
    }
    out.push_back(pool_cells(cells));
  }
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw std::invalid_argument("ks_pvalue: empty sample");
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  if (lambda < 1e-3) return 1.0;
  // Q_KS(λ) = 2 Σ (-1)^{j-1} exp(-2 j² λ²)
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace phop
