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

#include "phop/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace phop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(Rng& rng) {
  // 53 random bits; identical on every platform, unlike the distributions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_site(Rng& rng, int m) {
  // Multiply-shift maps a 64-bit draw onto [0, m) without a division.
  return static_cast<int>((static_cast<unsigned __int128>(rng()) * static_cast<unsigned>(m)) >> 64);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices) {
  std::uint64_t s = splitmix64(master);
  for (auto idx : indices) s = splitmix64(s ^ (idx + 0x9e3779b97f4a7c15ULL));
  return s;
}

void Schedule::validate() const {
  if (n_therm < 0) throw std::invalid_argument("schedule: n_therm must be >= 0");
  if (n_measure < 0) throw std::invalid_argument("schedule: n_measure must be >= 0");
  if (exchange_interval < 1) throw std::invalid_argument("schedule: exchange_interval must be >= 1");
  if (snapshot_stride < 1) throw std::invalid_argument("schedule: snapshot_stride must be >= 1");
  if (temperatures.empty()) throw std::invalid_argument("schedule: empty temperature ladder");
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    if (!(temperatures[i] > 0.0)) {
      throw std::invalid_argument("schedule: temperatures must be strictly positive");
    }
    if (i > 0 && !(temperatures[i] > temperatures[i - 1])) {
      throw std::invalid_argument("schedule: temperatures must be strictly increasing");
    }
  }
}

std::vector<double> geometric_ladder(double t_min, double t_max, int count) {
  if (count < 1 || !(t_min > 0.0) || (count > 1 && !(t_max > t_min))) {
    throw std::invalid_argument("geometric_ladder: need 0 < t_min < t_max and count >= 1");
  }
  if (count == 1) return {t_min};
  std::vector<double> ladder(static_cast<std::size_t>(count));
  const double ratio = std::pow(t_max / t_min, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) ladder[static_cast<std::size_t>(i)] = t_min * std::pow(ratio, i);
  ladder.back() = t_max;
  return ladder;
}

std::vector<double> linear_ladder(double t_min, double t_max, int count) {
  if (count < 1 || !(t_min > 0.0) || (count > 1 && !(t_max > t_min))) {
    throw std::invalid_argument("linear_ladder: need 0 < t_min < t_max and count >= 1");
  }
  if (count == 1) return {t_min};
  std::vector<double> ladder(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ladder[static_cast<std::size_t>(i)] = t_min + (t_max - t_min) * i / (count - 1);
  }
  return ladder;
}

MCState::MCState(const ModelInstance& inst, SpinConfig initial, double temp, std::uint64_t seed)
    : sigma(std::move(initial)), cache(inst, sigma), temperature(temp), rng(seed) {
  pr = cache.probability();
}

bool metropolis_accept(double delta_h, double temperature, double uniform) {
  if (delta_h < 0.0) return true;
  if (temperature <= 0.0) return false;
  return uniform < std::exp(-delta_h / temperature);
}

bool metropolis_flip(MCState& state, const ModelInstance& inst, int i) {
  const int m = inst.num_modes();
  if (i < 0 || i >= m) throw std::out_of_range("metropolis_flip: spin index out of range");
  const int spin = state.sigma[i];
  const double delta_pr = state.cache.propose(i, spin);
  const double delta_h = -static_cast<double>(m) * delta_pr;
  // The uniform is drawn for every proposal so the stream does not depend on
  // the sign of ΔH.
  const double u = uniform01(state.rng);
  if (!metropolis_accept(delta_h, state.temperature, u)) return false;
  state.cache.apply(i, spin);
  state.sigma.flip(i);
  state.pr = state.cache.probability();
  return true;
}

int mc_step(MCState& state, const ModelInstance& inst) {
  const int m = inst.num_modes();
  int accepted = 0;
  for (int n = 0; n < m; ++n) {
    if (metropolis_flip(state, inst, uniform_site(state.rng, m))) ++accepted;
  }
  ++state.step_count;
  return accepted;
}

double swap_probability(double t_a, double t_b, double e_a, double e_b) {
  const double exponent = (1.0 / t_a - 1.0 / t_b) * (e_a - e_b);
  return exponent >= 0.0 ? 1.0 : std::exp(exponent);
}

void exchange_sweep(std::span<MCState> ladder, bool odd, Rng& rng, std::span<SwapStats> stats) {
  if (ladder.size() < 2) return;
  for (std::size_t a = odd ? 1 : 0; a + 1 < ladder.size(); a += 2) {
    MCState& lo = ladder[a];
    MCState& hi = ladder[a + 1];
    const double p = swap_probability(lo.temperature, hi.temperature, lo.energy(), hi.energy());
    const bool accept = uniform01(rng) < p;
    if (a < stats.size()) {
      ++stats[a].attempts;
      if (accept) ++stats[a].accepted;
    }
    if (accept) {
      std::swap(lo.sigma, hi.sigma);
      std::swap(lo.cache, hi.cache);
      std::swap(lo.pr, hi.pr);
    }
  }
}

SpinConfig planted_spins(const ModelInstance& inst) {
  const int m = inst.num_modes();
  const auto configs = inst.lambda().configs(inst.num_photons(), m);
  if (configs.empty()) throw std::invalid_argument("planted_spins: empty output set");
  const int mu = configs.front()[0];
  const auto& s = inst.scattering();
  std::vector<std::int8_t> best(static_cast<std::size_t>(m), 1);
  double best_norm = -1.0;
  std::vector<std::int8_t> trial(static_cast<std::size_t>(m));
  constexpr int kAngles = 256;
  for (int a = 0; a < kAngles; ++a) {
    const Complex rot = std::polar(1.0, -std::numbers::pi * a / kAngles);
    Complex f{};
    for (int j = 0; j < m; ++j) {
      const std::int8_t sj = (rot * s(mu, j)).real() >= 0.0 ? 1 : -1;
      trial[static_cast<std::size_t>(j)] = sj;
      f += s(mu, j) * static_cast<double>(sj);
    }
    if (std::norm(f) > best_norm) {
      best_norm = std::norm(f);
      best = trial;
    }
  }
  return SpinConfig(std::move(best));
}

std::vector<const Trajectory*> EmcResult::at_temperature(int temperature_index) const {
  std::vector<const Trajectory*> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    out.push_back(&g.trajectories.at(static_cast<std::size_t>(temperature_index)));
  }
  return out;
}

namespace {

LadderRecord run_group(const ModelInstance& inst, const Schedule& schedule, int group,
                       std::uint64_t seed, InitMode init) {
  const std::size_t nt = schedule.temperatures.size();
  const int m = inst.num_modes();
  std::vector<MCState> ladder;
  ladder.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::uint64_t replica_seed =
        derive_seed(seed, {seed_tag::kReplica, static_cast<std::uint64_t>(group), t});
    SpinConfig start;
    if (init == InitMode::Planted) {
      start = planted_spins(inst);
    } else {
      // One top bit per spin; bernoulli_distribution is implementation-defined.
      Rng init_rng(replica_seed ^ 0x5851f42d4c957f2dULL);
      std::vector<std::int8_t> raw(static_cast<std::size_t>(m));
      for (auto& s : raw) s = (init_rng() >> 63) ? 1 : -1;
      start = SpinConfig(std::move(raw));
    }
    ladder.emplace_back(inst, std::move(start), schedule.temperatures[t], replica_seed);
  }
  Rng exchange_rng(derive_seed(seed, {seed_tag::kExchange, static_cast<std::uint64_t>(group)}));

  LadderRecord record;
  record.swaps.resize(nt > 1 ? nt - 1 : 0);
  record.therm_energy.resize(nt);
  record.trajectories.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    auto& traj = record.trajectories[t];
    traj.replica_group = group;
    traj.temperature_index = static_cast<int>(t);
    traj.temperature = schedule.temperatures[t];
    traj.num_modes = m;
    traj.snapshot_stride = schedule.snapshot_stride;
    traj.pr.reserve(static_cast<std::size_t>(schedule.n_measure));
    traj.energy.reserve(static_cast<std::size_t>(schedule.n_measure));
    traj.spins.reserve(static_cast<std::size_t>(schedule.n_measure / schedule.snapshot_stride + 1) *
                       static_cast<std::size_t>(m));
  }

  std::int64_t sweeps = 0;
  auto exchange_point = [&]() {
    for (auto& st : ladder) {
      // Discard accumulated round-off in the cached fields.
      st.cache.rebuild(st.sigma);
      st.pr = st.cache.probability();
    }
    if (schedule.exchange) {
      exchange_sweep(ladder, sweeps % 2 == 1, exchange_rng, record.swaps);
      ++sweeps;
    }
  };

  for (int step = 1; step <= schedule.n_therm; ++step) {
    for (auto& st : ladder) mc_step(st, inst);
    if (step % schedule.exchange_interval == 0) {
      exchange_point();
      for (std::size_t t = 0; t < nt; ++t) record.therm_energy[t].push_back(ladder[t].energy());
    }
  }
  for (int step = 1; step <= schedule.n_measure; ++step) {
    for (auto& st : ladder) mc_step(st, inst);
    for (std::size_t t = 0; t < nt; ++t) {
      auto& traj = record.trajectories[t];
      traj.pr.push_back(ladder[t].pr);
      traj.energy.push_back(ladder[t].energy());
      if ((step - 1) % schedule.snapshot_stride == 0) {
        const auto raw = ladder[t].sigma.raw();
        traj.spins.insert(traj.spins.end(), raw.begin(), raw.end());
      }
    }
    if (step % schedule.exchange_interval == 0) exchange_point();
  }
  return record;
}

}  // namespace

EmcResult run_emc(const ModelInstance& inst, const Schedule& schedule, int n_groups,
                  std::uint64_t seed, const EmcOptions& options) {
  schedule.validate();
  if (n_groups < 1) throw std::invalid_argument("run_emc: need at least one replica group");
  EmcResult result;
  result.groups.resize(static_cast<std::size_t>(n_groups));
  std::atomic<int> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    while (true) {
      const int g = next.fetch_add(1);
      if (g >= n_groups) return;
      try {
        result.groups[static_cast<std::size_t>(g)] = run_group(inst, schedule, g, seed, options.init);
        if (options.on_group_done) {
          std::lock_guard lock(callback_mutex);
          options.on_group_done(g);
        }
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_groups);
        return;
      }
    }
  };
  const int workers = std::clamp(options.workers, 1, n_groups);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

double self_correlation(const Trajectory& traj, int tau) {
  const std::size_t length = traj.length();
  if (tau < 0 || static_cast<std::size_t>(tau) >= std::max<std::size_t>(length, 1) ||
      traj.snapshot_count() == 0) {
    throw std::out_of_range("self_correlation: tau outside [0, length)");
  }
  if (tau % traj.snapshot_stride != 0) {
    throw std::invalid_argument("self_correlation: tau must be a multiple of the snapshot stride");
  }
  const std::size_t lag = static_cast<std::size_t>(tau / traj.snapshot_stride);
  const std::size_t count = traj.snapshot_count();
  if (lag >= count) throw std::out_of_range("self_correlation: tau beyond recorded snapshots");
  const std::size_t valid = count - lag;
  const auto m = static_cast<std::size_t>(traj.num_modes);
  std::int64_t sum = 0;
  for (std::size_t t = 0; t < valid; ++t) {
    const std::int8_t* a = &traj.spins[t * m];
    const std::int8_t* b = &traj.spins[(t + lag) * m];
    for (std::size_t i = 0; i < m; ++i) sum += a[i] * b[i];
  }
  return static_cast<double>(sum) / (static_cast<double>(valid) * static_cast<double>(m));
}

double measurement_noise(double pr, std::int64_t n_exp) {
  if (pr < 0.0 || pr > 1.0) throw std::invalid_argument("measurement_noise: pr outside [0, 1]");
  if (n_exp < 1) throw std::invalid_argument("measurement_noise: n_exp must be >= 1");
  return std::sqrt(pr * (1.0 - pr) / static_cast<double>(n_exp));
}

double simulated_frequency_sd(double pr, std::int64_t n_exp, int trials, std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("simulated_frequency_sd: need at least two trials");
  measurement_noise(pr, n_exp);
  Rng rng(seed);
  std::binomial_distribution<std::int64_t> counts(n_exp, pr);
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double f = static_cast<double>(counts(rng)) / static_cast<double>(n_exp);
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / trials;
  return std::sqrt(std::max(0.0, (sum2 - trials * mean * mean) / (trials - 1)));
}

double thermal_fluctuation(const Trajectory& traj) {
  if (traj.pr.size() < 2) throw std::invalid_argument("thermal_fluctuation: trajectory too short");
  const std::size_t n = traj.pr.size() - 1;
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) mean += traj.pr[t + 1] - traj.pr[t];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = traj.pr[t + 1] - traj.pr[t] - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(n));
}

std::vector<double> zero_temperature_quench(MCState& state, const ModelInstance& inst,
                                            int max_steps) {
  const double saved = state.temperature;
  state.temperature = 0.0;
  std::vector<double> energies;
  for (int step = 0; step < max_steps; ++step) {
    const int accepted = mc_step(state, inst);
    energies.push_back(state.energy());
    if (accepted == 0) break;
  }
  state.temperature = saved;
  return energies;
}

}  // namespace phop
