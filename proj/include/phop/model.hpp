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

#ifndef PHOP_MODEL_HPP
#define PHOP_MODEL_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "phop/linops.hpp"
#include "phop/spin.hpp"

namespace phop {

/// The detected output channels Λ. Either an explicit list of configurations
/// or a subset of the fully-bunched channels, given by mode index.
class OutputSet {
 public:
  enum class Kind { Explicit, BunchedSubset };

  OutputSet() = default;

  static OutputSet explicit_set(std::vector<ModeConfig> configs);
  static OutputSet bunched_subset(std::vector<int> modes, int num_modes);

  Kind kind() const { return kind_; }
  std::size_t size() const {
    return kind_ == Kind::Explicit ? configs_.size() : bunched_modes_.size();
  }
  const std::vector<ModeConfig>& explicit_configs() const { return configs_; }
  const std::vector<int>& bunched_modes() const { return bunched_modes_; }

  /// Λ as configurations; bunched modes expand to [μ, μ, ..., μ].
  std::vector<ModeConfig> configs(int num_photons, int num_modes) const;

 private:
  Kind kind_ = Kind::Explicit;
  std::vector<ModeConfig> configs_;
  std::vector<int> bunched_modes_;
};

/// P distinct modes drawn uniformly from [0, M), sorted.
std::vector<int> random_bunched_modes(int num_modes, int count, std::uint64_t seed);

/// Input state: the DFT-prepared uniform superposition, or anything else.
struct DftUniformInput {};
using InputState = std::variant<DftUniformInput, FockSuperposition>;

/// One Hopfield Hamiltonian H[σ|Λ] = -M Pr(Λ|σ) defined by the optics.
class ModelInstance {
 public:
  ModelInstance(ComplexMatrix scattering, OutputSet lambda, int num_photons,
                InputState input = DftUniformInput{});

  const ComplexMatrix& scattering() const { return *scattering_; }
  const OutputSet& lambda() const { return lambda_; }
  int num_modes() const { return num_modes_; }
  int num_photons() const { return num_photons_; }
  const InputState& input() const { return input_; }
  bool dft_input() const { return std::holds_alternative<DftUniformInput>(input_); }

  /// P / M^N.
  double alpha() const;

  /// Whether the O(|Λ|) fully-bunched evaluation applies.
  bool fast_path() const {
    return dft_input() && lambda_.kind() == OutputSet::Kind::BunchedSubset;
  }

  /// Input amplitude a_x (closed form for the DFT input).
  Complex input_amplitude(const ModeConfig& x) const;

  /// Full input superposition; enumerates C_M.
  FockSuperposition input_superposition(std::uint64_t cap = kDefaultConfigCap) const;

 private:
  std::shared_ptr<const ComplexMatrix> scattering_;
  OutputSet lambda_;
  int num_modes_ = 0;
  int num_photons_ = 0;
  InputState input_;
};

/// J_Λ(x, y) = a_x a*_y / sqrt(μ(x)μ(y)) Σ_{k∈Λ} Perm(S_{k|x}) Perm*(S_{k|y}) / μ(k).
Complex coupling_tensor(const ModelInstance& inst, const ModeConfig& x, const ModeConfig& y);

/// The same tensor for two photons, written out as products of S entries.
Complex coupling_tensor_two_photon(const ModelInstance& inst, const ModeConfig& x,
                                   const ModeConfig& y);

/// Root-mean-square |J_Λ(x, y)| over all ordered pairs of C_M, or over the
/// diagonal x = y only.
double coupling_rms(const ModelInstance& inst, bool diagonal_only = false,
                    std::uint64_t cap = kDefaultConfigCap);

/// Pr(Λ|σ) through the phase layer and the permanent amplitudes.
double output_probability_exact(const ModelInstance& inst, const SpinConfig& sigma,
                                std::uint64_t cap = kDefaultConfigCap);

/// Pr(Λ|σ) as the double sum Σ_{x,y} J_Λ(x,y) Π σ_{x_j} σ_{y_j}.
double output_probability_couplings(const ModelInstance& inst, const SpinConfig& sigma,
                                    std::uint64_t cap = kDefaultConfigCap);

/// (1/M^N) Σ_{μ∈modes} |Σ_j S_{μj} σ_j|^{2N}. Assumes the DFT-uniform input.
double fully_bunched_probability(const ComplexMatrix& s, const SpinConfig& sigma,
                                 std::span<const int> modes, int num_photons);

/// Cached output fields f_k = Σ_j S_{kj} σ_j over the bunched channels of Λ,
/// giving O(|Λ|) spin-flip updates of the fully-bunched probability.
class FieldCache {
 public:
  FieldCache() = default;
  FieldCache(const ComplexMatrix& s, std::span<const int> modes, int num_photons,
             const SpinConfig& sigma);

  double probability() const { return probability_; }
  std::span<const Complex> fields() const { return fields_; }
  std::span<const int> modes() const { return modes_; }
  int num_modes() const { return num_modes_; }

  /// ΔPr if spin i (currently `spin_i`) were flipped; the cache is untouched.
  double propose(int i, int spin_i) const;

  /// Flip spin i (currently `spin_i`) in the cache and return ΔPr.
  double apply(int i, int spin_i);

  /// Recompute every field from scratch.
  void rebuild(const SpinConfig& sigma);

 private:
  double term(Complex f) const;

  // Column-major |Λ| x M copy of the Λ rows of S: entry (k, j) at j*|Λ| + k.
  std::vector<Complex> rows_;
  std::vector<int> modes_;
  std::vector<Complex> fields_;
  std::vector<double> terms_;
  int num_modes_ = 0;
  int num_photons_ = 0;
  double scale_ = 0.0;
  double probability_ = 0.0;
};

/// Flip σ_i, update the cache, and return ΔPr.
double flip_update(FieldCache& cache, SpinConfig& sigma, int i);

/// Incremental evaluator for an arbitrary Λ and input state, built on the
/// permanent amplitudes A_k = Σ_c w_{k,c} Π_j σ_{c_j}.
class ChannelCache {
 public:
  ChannelCache() = default;
  ChannelCache(const ModelInstance& inst, const SpinConfig& sigma,
               std::uint64_t cap = kDefaultConfigCap);

  double probability() const { return probability_; }
  double propose(int i, int spin_i) const;
  double apply(int i, int spin_i);
  void rebuild(const SpinConfig& sigma);

 private:
  std::size_t num_channels_ = 0;
  // weights_[c * num_channels_ + k]
  std::vector<Complex> weights_;
  std::vector<std::vector<int>> configs_;
  // Configurations holding an odd number of photons in mode i.
  std::vector<std::vector<std::size_t>> odd_in_mode_;
  std::vector<int> config_sign_;
  std::vector<Complex> amplitudes_;
  double probability_ = 0.0;
};

/// Probability tracker owned by one Monte Carlo replica. Uses the fast
/// fully-bunched cache when the instance allows it.
class Evaluator {
 public:
  Evaluator() = default;
  Evaluator(const ModelInstance& inst, const SpinConfig& sigma);

  double probability() const;
  double propose(int i, int spin_i) const;
  double apply(int i, int spin_i);
  void rebuild(const SpinConfig& sigma);

  const FieldCache* field_cache() const { return std::get_if<FieldCache>(&impl_); }

 private:
  std::variant<FieldCache, ChannelCache> impl_;
};

/// H[σ|Λ] = -M Pr(Λ|σ).
double energy(const ModelInstance& inst, const SpinConfig& sigma);

/// Probability through the fast path when available, else the exact route.
double output_probability(const ModelInstance& inst, const SpinConfig& sigma);

/// Two-photon memory overlap m_k = (1/M) σᵀ X^(k) σ, computed in O(M) as
/// (2/M) f_{k1} f_{k2}.
Complex memory_overlap(const ComplexMatrix& s, const SpinConfig& sigma, const ModeConfig& k);

/// m_k normalized by the root of Σ_{k1,k2} |m_{k1,k2}|² over ordered pairs.
/// Throws std::domain_error when every field vanishes.
Complex normalized_memory_overlap(const ComplexMatrix& s, const SpinConfig& sigma,
                                  const ModeConfig& k);

/// f = S σ for all modes.
std::vector<Complex> output_fields(const ComplexMatrix& s, const SpinConfig& sigma);

/// Normalized overlap of channel (k1, k2) from precomputed fields.
Complex normalized_overlap_from_fields(std::span<const Complex> fields, int k1, int k2);

}  // namespace phop

#endif  // PHOP_MODEL_HPP
