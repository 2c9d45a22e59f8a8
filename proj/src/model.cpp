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

#include "phop/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace phop {

namespace {

double pow_int(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

double factorial(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// OutputSet

OutputSet OutputSet::explicit_set(std::vector<ModeConfig> configs) {
  std::set<ModeConfig> seen;
  for (const auto& c : configs) {
    if (!seen.insert(c).second) {
      throw std::invalid_argument("OutputSet: duplicate configuration " + c.to_string());
    }
    if (c.num_photons() != configs.front().num_photons() ||
        c.num_modes() != configs.front().num_modes()) {
      throw std::invalid_argument("OutputSet: configurations disagree on M or N_ph");
    }
  }
  OutputSet out;
  out.kind_ = Kind::Explicit;
  out.configs_ = std::move(configs);
  return out;
}

OutputSet OutputSet::bunched_subset(std::vector<int> modes, int num_modes) {
  std::set<int> seen;
  for (int m : modes) {
    if (m < 0 || m >= num_modes) {
      throw std::out_of_range("OutputSet: bunched mode " + std::to_string(m) + " out of range");
    }
    if (!seen.insert(m).second) {
      throw std::invalid_argument("OutputSet: duplicate bunched mode " + std::to_string(m));
    }
  }
  OutputSet out;
  out.kind_ = Kind::BunchedSubset;
  out.bunched_modes_ = std::move(modes);
  return out;
}

std::vector<ModeConfig> OutputSet::configs(int num_photons, int num_modes) const {
  if (kind_ == Kind::Explicit) return configs_;
  std::vector<ModeConfig> out;
  out.reserve(bunched_modes_.size());
  for (int m : bunched_modes_) out.push_back(ModeConfig::bunched(m, num_photons, num_modes));
  return out;
}

std::vector<int> random_bunched_modes(int num_modes, int count, std::uint64_t seed) {
  if (count < 0 || count > num_modes) {
    throw std::invalid_argument("random_bunched_modes: need 0 <= P <= M, got P=" +
                                std::to_string(count));
  }
  std::vector<int> modes(static_cast<std::size_t>(num_modes));
  std::iota(modes.begin(), modes.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with an explicit index draw; std::shuffle's
  // consumption pattern is implementation-defined.
  for (int i = 0; i < count; ++i) {
    const auto span = static_cast<std::uint64_t>(num_modes - i);
    const auto j = i + static_cast<int>(rng() % span);
    std::swap(modes[static_cast<std::size_t>(i)], modes[static_cast<std::size_t>(j)]);
  }
  modes.resize(static_cast<std::size_t>(count));
  std::sort(modes.begin(), modes.end());
  return modes;
}

// ---------------------------------------------------------------------------
// ModelInstance

ModelInstance::ModelInstance(ComplexMatrix scattering, OutputSet lambda, int num_photons,
                             InputState input)
    : lambda_(std::move(lambda)),
      num_modes_(static_cast<int>(scattering.rows())),
      num_photons_(num_photons),
      input_(std::move(input)) {
  if (scattering.rows() != scattering.cols() || scattering.rows() < 1) {
    throw std::invalid_argument("ModelInstance: scattering matrix must be square and non-empty");
  }
  if (num_photons_ < 1) throw std::invalid_argument("ModelInstance: N_ph must be >= 1");
  for (const auto& c : lambda_.explicit_configs()) {
    if (c.num_modes() != num_modes_ || c.num_photons() != num_photons_) {
      throw std::invalid_argument("ModelInstance: output config " + c.to_string() +
                                  " does not match (M, N_ph)");
    }
  }
  for (int m : lambda_.bunched_modes()) {
    if (m >= num_modes_) throw std::out_of_range("ModelInstance: bunched mode out of range");
  }
  if (const auto* psi = std::get_if<FockSuperposition>(&input_)) {
    if (psi->num_modes != num_modes_ || psi->num_photons != num_photons_) {
      throw std::invalid_argument("ModelInstance: input state does not match (M, N_ph)");
    }
  }
  scattering_ = std::make_shared<const ComplexMatrix>(std::move(scattering));
}

double ModelInstance::alpha() const {
  return static_cast<double>(lambda_.size()) / pow_int(num_modes_, num_photons_);
}

Complex ModelInstance::input_amplitude(const ModeConfig& x) const {
  if (const auto* psi = std::get_if<FockSuperposition>(&input_)) return psi->amplitude(x);
  const double a = std::sqrt(factorial(num_photons_) / pow_int(num_modes_, num_photons_) /
                             static_cast<double>(multiplicity(x)));
  return {a, 0.0};
}

FockSuperposition ModelInstance::input_superposition(std::uint64_t cap) const {
  if (const auto* psi = std::get_if<FockSuperposition>(&input_)) return *psi;
  return dft_input_amplitudes(num_modes_, num_photons_, cap);
}

// ---------------------------------------------------------------------------
// Couplings and probabilities

Complex coupling_tensor(const ModelInstance& inst, const ModeConfig& x, const ModeConfig& y) {
  const auto& s = inst.scattering();
  Complex sum{};
  for (const auto& k : inst.lambda().configs(inst.num_photons(), inst.num_modes())) {
    sum += permanent(submatrix(s, k, x)) * std::conj(permanent(submatrix(s, k, y))) /
           static_cast<double>(multiplicity(k));
  }
  const double norm = std::sqrt(static_cast<double>(multiplicity(x)) *
                                static_cast<double>(multiplicity(y)));
  return inst.input_amplitude(x) * std::conj(inst.input_amplitude(y)) / norm * sum;
}

Complex coupling_tensor_two_photon(const ModelInstance& inst, const ModeConfig& x,
                                   const ModeConfig& y) {
  if (inst.num_photons() != 2) {
    throw std::invalid_argument("coupling_tensor_two_photon: requires N_ph = 2");
  }
  const auto& s = inst.scattering();
  const int x1 = x[0], x2 = x[1], y1 = y[0], y2 = y[1];
  Complex sum{};
  for (const auto& k : inst.lambda().configs(2, inst.num_modes())) {
    const int k1 = k[0], k2 = k[1];
    const Complex px = s(k1, x1) * s(k2, x2) + s(k1, x2) * s(k2, x1);
    const Complex py = s(k1, y1) * s(k2, y2) + s(k1, y2) * s(k2, y1);
    sum += px * std::conj(py) / static_cast<double>(multiplicity(k));
  }
  const double norm = std::sqrt(static_cast<double>(multiplicity(x)) *
                                static_cast<double>(multiplicity(y)));
  return inst.input_amplitude(x) * std::conj(inst.input_amplitude(y)) / norm * sum;
}

double output_probability_exact(const ModelInstance& inst, const SpinConfig& sigma,
                                std::uint64_t cap) {
  if (sigma.size() != inst.num_modes()) {
    throw std::invalid_argument("output_probability_exact: spin count does not match M");
  }
  if (inst.lambda().size() == 0) return 0.0;
  const FockSuperposition shifted = apply_phase_layer(inst.input_superposition(cap), sigma);
  double pr = 0.0;
  for (const auto& k : inst.lambda().configs(inst.num_photons(), inst.num_modes())) {
    pr += std::norm(evolve_superposition(inst.scattering(), shifted, k));
  }
  return pr;
}

double output_probability_couplings(const ModelInstance& inst, const SpinConfig& sigma,
                                    std::uint64_t cap) {
  if (sigma.size() != inst.num_modes()) {
    throw std::invalid_argument("output_probability_couplings: spin count does not match M");
  }
  const auto space = enumerate_configs(inst.num_modes(), inst.num_photons(), cap);
  const auto channels = inst.lambda().configs(inst.num_photons(), inst.num_modes());
  const auto& s = inst.scattering();
  const std::size_t nc = space.size();

  // perms[k * nc + x] = Perm(S_{k|x}); J is then assembled pairwise.
  std::vector<Complex> perms(channels.size() * nc);
  for (std::size_t k = 0; k < channels.size(); ++k) {
    for (std::size_t x = 0; x < nc; ++x) {
      perms[k * nc + x] = permanent(submatrix(s, channels[k], space[x]));
    }
  }
  std::vector<Complex> prefactor(nc);
  std::vector<int> sign(nc);
  for (std::size_t x = 0; x < nc; ++x) {
    prefactor[x] = inst.input_amplitude(space[x]) /
                   std::sqrt(static_cast<double>(multiplicity(space[x])));
    int sg = 1;
    for (int m : space[x].modes()) sg *= sigma[m];
    sign[x] = sg;
  }
  Complex total{};
  for (std::size_t x = 0; x < nc; ++x) {
    if (prefactor[x] == Complex{}) continue;
    for (std::size_t y = 0; y < nc; ++y) {
      if (prefactor[y] == Complex{}) continue;
      Complex hebb{};
      for (std::size_t k = 0; k < channels.size(); ++k) {
        hebb += perms[k * nc + x] * std::conj(perms[k * nc + y]) /
                static_cast<double>(multiplicity(channels[k]));
      }
      const Complex j_xy = prefactor[x] * std::conj(prefactor[y]) * hebb;
      total += j_xy * static_cast<double>(sign[x] * sign[y]);
    }
  }
  return total.real();
}

double fully_bunched_probability(const ComplexMatrix& s, const SpinConfig& sigma,
                                 std::span<const int> modes, int num_photons) {
  const int m = static_cast<int>(s.rows());
  if (sigma.size() != m || s.cols() != m) {
    throw std::invalid_argument("fully_bunched_probability: dimension mismatch");
  }
  double sum = 0.0;
  for (int mu : modes) {
    if (mu < 0 || mu >= m) throw std::out_of_range("fully_bunched_probability: mode out of range");
    Complex f{};
    for (int j = 0; j < m; ++j) f += s(mu, j) * static_cast<double>(sigma[j]);
    sum += pow_int(std::norm(f), num_photons);
  }
  return sum / pow_int(m, num_photons);
}

// ---------------------------------------------------------------------------
// FieldCache

FieldCache::FieldCache(const ComplexMatrix& s, std::span<const int> modes, int num_photons,
                       const SpinConfig& sigma)
    : modes_(modes.begin(), modes.end()),
      num_modes_(static_cast<int>(s.rows())),
      num_photons_(num_photons),
      scale_(1.0 / pow_int(static_cast<double>(s.rows()), num_photons)) {
  const std::size_t p = modes_.size();
  rows_.resize(p * static_cast<std::size_t>(num_modes_));
  for (std::size_t k = 0; k < p; ++k) {
    const int mu = modes_[k];
    if (mu < 0 || mu >= num_modes_) throw std::out_of_range("FieldCache: mode out of range");
    for (int j = 0; j < num_modes_; ++j) {
      rows_[static_cast<std::size_t>(j) * p + k] = s(mu, j);
    }
  }
  rebuild(sigma);
}

double FieldCache::term(Complex f) const { return pow_int(std::norm(f), num_photons_); }

void FieldCache::rebuild(const SpinConfig& sigma) {
  if (sigma.size() != num_modes_) throw std::invalid_argument("FieldCache: spin count mismatch");
  const std::size_t p = modes_.size();
  fields_.assign(p, Complex{});
  terms_.assign(p, 0.0);
  for (int j = 0; j < num_modes_; ++j) {
    const double sj = sigma[j];
    const Complex* col = &rows_[static_cast<std::size_t>(j) * p];
    for (std::size_t k = 0; k < p; ++k) fields_[k] += col[k] * sj;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    terms_[k] = term(fields_[k]);
    sum += terms_[k];
  }
  probability_ = sum * scale_;
}

double FieldCache::propose(int i, int spin_i) const {
  if (i < 0 || i >= num_modes_) throw std::out_of_range("FieldCache: spin index out of range");
  const std::size_t p = modes_.size();
  const Complex* col = &rows_[static_cast<std::size_t>(i) * p];
  const double shift = -2.0 * spin_i;
  double sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) sum += term(fields_[k] + col[k] * shift);
  return sum * scale_ - probability_;
}

double FieldCache::apply(int i, int spin_i) {
  if (i < 0 || i >= num_modes_) throw std::out_of_range("FieldCache: spin index out of range");
  const std::size_t p = modes_.size();
  const Complex* col = &rows_[static_cast<std::size_t>(i) * p];
  const double shift = -2.0 * spin_i;
  double sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    fields_[k] += col[k] * shift;
    terms_[k] = term(fields_[k]);
    sum += terms_[k];
  }
  const double previous = probability_;
  probability_ = sum * scale_;
  return probability_ - previous;
}

double flip_update(FieldCache& cache, SpinConfig& sigma, int i) {
  if (i < 0 || i >= sigma.size()) throw std::out_of_range("flip_update: spin index out of range");
  const double delta = cache.apply(i, sigma[i]);
  sigma.flip(i);
  return delta;
}

// ---------------------------------------------------------------------------
// ChannelCache

ChannelCache::ChannelCache(const ModelInstance& inst, const SpinConfig& sigma,
                           std::uint64_t cap) {
  const auto channels = inst.lambda().configs(inst.num_photons(), inst.num_modes());
  num_channels_ = channels.size();
  const FockSuperposition psi = inst.input_superposition(cap);
  const auto& s = inst.scattering();
  odd_in_mode_.resize(static_cast<std::size_t>(inst.num_modes()));
  for (const auto& [c, a] : psi.amplitudes) {
    if (a == Complex{}) continue;
    const std::size_t idx = configs_.size();
    configs_.emplace_back(c.modes().begin(), c.modes().end());
    for (const auto& k : channels) weights_.push_back(a * scattering_amplitude(s, c, k));
    const auto occ = c.occupations();
    for (std::size_t j = 0; j < occ.size(); ++j) {
      if (occ[j] % 2 == 1) odd_in_mode_[j].push_back(idx);
    }
  }
  rebuild(sigma);
}

void ChannelCache::rebuild(const SpinConfig& sigma) {
  config_sign_.assign(configs_.size(), 1);
  amplitudes_.assign(num_channels_, Complex{});
  for (std::size_t c = 0; c < configs_.size(); ++c) {
    int sg = 1;
    for (int m : configs_[c]) sg *= sigma[m];
    config_sign_[c] = sg;
    for (std::size_t k = 0; k < num_channels_; ++k) {
      amplitudes_[k] += weights_[c * num_channels_ + k] * static_cast<double>(sg);
    }
  }
  probability_ = 0.0;
  for (const auto& a : amplitudes_) probability_ += std::norm(a);
}

double ChannelCache::propose(int i, int /*spin_i*/) const {
  if (i < 0 || static_cast<std::size_t>(i) >= odd_in_mode_.size()) {
    throw std::out_of_range("ChannelCache: spin index out of range");
  }
  double pr = 0.0;
  for (std::size_t k = 0; k < num_channels_; ++k) {
    Complex a = amplitudes_[k];
    for (std::size_t c : odd_in_mode_[static_cast<std::size_t>(i)]) {
      a -= 2.0 * static_cast<double>(config_sign_[c]) * weights_[c * num_channels_ + k];
    }
    pr += std::norm(a);
  }
  return pr - probability_;
}

double ChannelCache::apply(int i, int /*spin_i*/) {
  if (i < 0 || static_cast<std::size_t>(i) >= odd_in_mode_.size()) {
    throw std::out_of_range("ChannelCache: spin index out of range");
  }
  for (std::size_t c : odd_in_mode_[static_cast<std::size_t>(i)]) {
    for (std::size_t k = 0; k < num_channels_; ++k) {
      amplitudes_[k] -= 2.0 * static_cast<double>(config_sign_[c]) * weights_[c * num_channels_ + k];
    }
    config_sign_[c] = -config_sign_[c];
  }
  const double previous = probability_;
  probability_ = 0.0;
  for (const auto& a : amplitudes_) probability_ += std::norm(a);
  return probability_ - previous;
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const ModelInstance& inst, const SpinConfig& sigma) {
  if (sigma.size() != inst.num_modes()) {
    throw std::invalid_argument("Evaluator: spin count does not match M");
  }
  if (inst.fast_path()) {
    impl_ = FieldCache(inst.scattering(), inst.lambda().bunched_modes(), inst.num_photons(),
                       sigma);
  } else {
    impl_ = ChannelCache(inst, sigma);
  }
}

double Evaluator::probability() const {
  return std::visit([](const auto& c) { return c.probability(); }, impl_);
}

double Evaluator::propose(int i, int spin_i) const {
  return std::visit([&](const auto& c) { return c.propose(i, spin_i); }, impl_);
}

double Evaluator::apply(int i, int spin_i) {
  return std::visit([&](auto& c) { return c.apply(i, spin_i); }, impl_);
}

void Evaluator::rebuild(const SpinConfig& sigma) {
  std::visit([&](auto& c) { c.rebuild(sigma); }, impl_);
}

double output_probability(const ModelInstance& inst, const SpinConfig& sigma) {
  if (inst.fast_path()) {
    return fully_bunched_probability(inst.scattering(), sigma, inst.lambda().bunched_modes(),
                                     inst.num_photons());
  }
  return output_probability_exact(inst, sigma);
}

double energy(const ModelInstance& inst, const SpinConfig& sigma) {
  return -static_cast<double>(inst.num_modes()) * output_probability(inst, sigma);
}

// ---------------------------------------------------------------------------
// Memory overlaps

std::vector<Complex> output_fields(const ComplexMatrix& s, const SpinConfig& sigma) {
  const int m = static_cast<int>(s.rows());
  if (sigma.size() != s.cols()) throw std::invalid_argument("output_fields: dimension mismatch");
  std::vector<Complex> f(static_cast<std::size_t>(m), Complex{});
  for (int j = 0; j < s.cols(); ++j) {
    const double sj = sigma[j];
    for (int k = 0; k < m; ++k) f[static_cast<std::size_t>(k)] += s(k, j) * sj;
  }
  return f;
}

namespace {

void require_two_photons(const ModeConfig& k) {
  if (k.num_photons() != 2) {
    throw std::invalid_argument("memory overlap is defined for N_ph = 2 only");
  }
}

}  // namespace

Complex memory_overlap(const ComplexMatrix& s, const SpinConfig& sigma, const ModeConfig& k) {
  require_two_photons(k);
  if (sigma.size() != s.cols()) throw std::invalid_argument("memory_overlap: dimension mismatch");
  Complex f1{}, f2{};
  for (int j = 0; j < s.cols(); ++j) {
    f1 += s(k[0], j) * static_cast<double>(sigma[j]);
    f2 += s(k[1], j) * static_cast<double>(sigma[j]);
  }
  return 2.0 / static_cast<double>(s.cols()) * f1 * f2;
}

Complex normalized_overlap_from_fields(std::span<const Complex> fields, int k1, int k2) {
  // Σ_{k1,k2} |(2/M) f_k1 f_k2|² = ((2/M) Σ_k |f_k|²)², so the 2/M cancels.
  double total = 0.0;
  for (const auto& f : fields) total += std::norm(f);
  if (total == 0.0) throw std::domain_error("null overlap field");
  return fields[static_cast<std::size_t>(k1)] * fields[static_cast<std::size_t>(k2)] / total;
}

Complex normalized_memory_overlap(const ComplexMatrix& s, const SpinConfig& sigma,
                                  const ModeConfig& k) {
  require_two_photons(k);
  const auto f = output_fields(s, sigma);
  return normalized_overlap_from_fields(f, k[0], k[1]);
}

}  // namespace phop

namespace phop {

double coupling_rms(const ModelInstance& inst, bool diagonal_only, std::uint64_t cap) {
  const auto space = enumerate_configs(inst.num_modes(), inst.num_photons(), cap);
  const auto channels = inst.lambda().configs(inst.num_photons(), inst.num_modes());
  const auto& s = inst.scattering();
  const std::size_t nc = space.size();
  const std::size_t nk = channels.size();

  // Rows of weighted permanents: w[x][k] = a_x Perm(S_{k|x}) / sqrt(μ(x) μ(k)),
  // so that J(x, y) = Σ_k w[x][k] conj(w[y][k]).
  std::vector<Complex> w(nc * nk);
  for (std::size_t x = 0; x < nc; ++x) {
    const Complex pre = inst.input_amplitude(space[x]) /
                        std::sqrt(static_cast<double>(multiplicity(space[x])));
    for (std::size_t k = 0; k < nk; ++k) {
      w[x * nk + k] = pre * permanent(submatrix(s, channels[k], space[x])) /
                      std::sqrt(static_cast<double>(multiplicity(channels[k])));
    }
  }
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t x = 0; x < nc; ++x) {
    const std::size_t y_begin = diagonal_only ? x : 0;
    const std::size_t y_end = diagonal_only ? x + 1 : nc;
    for (std::size_t y = y_begin; y < y_end; ++y) {
      Complex j{};
      for (std::size_t k = 0; k < nk; ++k) j += w[x * nk + k] * std::conj(w[y * nk + k]);
      sum_sq += std::norm(j);
      ++count;
    }
  }
  return std::sqrt(sum_sq / static_cast<double>(count));
}

}  // namespace phop
