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

#ifndef PHOP_LINOPS_HPP
#define PHOP_LINOPS_HPP

#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phop/spin.hpp"

namespace phop {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Refusal to enumerate a configuration space beyond the configured cap.
class ConfigSpaceTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Default cap on |C_M| for exact enumeration.
inline constexpr std::uint64_t kDefaultConfigCap = 1'000'000;

/// Largest matrix accepted by permanent().
inline constexpr int kDefaultPermanentCap = 20;

/// Fock occupation pattern of N photons over M modes, kept as a
/// non-decreasing list of mode indices. Equality is multiset equality.
class ModeConfig {
 public:
  ModeConfig() = default;
  ModeConfig(std::vector<int> modes, int num_modes);

  /// All photons in `mode`.
  static ModeConfig bunched(int mode, int num_photons, int num_modes);

  std::span<const int> modes() const { return modes_; }
  int operator[](std::size_t i) const { return modes_[i]; }
  int num_modes() const { return num_modes_; }
  int num_photons() const { return static_cast<int>(modes_.size()); }

  /// Occupation number n_j for every mode j.
  std::vector<int> occupations() const;
  bool is_bunched() const { return modes_.front() == modes_.back(); }

  std::string to_string() const;

  friend bool operator==(const ModeConfig&, const ModeConfig&) = default;
  friend auto operator<=>(const ModeConfig&, const ModeConfig&) = default;

 private:
  std::vector<int> modes_;
  int num_modes_ = 0;
};

/// Pure state Σ_c a_c |c⟩ over canonical configurations.
struct FockSuperposition {
  int num_modes = 0;
  int num_photons = 0;
  std::map<ModeConfig, Complex> amplitudes;

  double norm_squared() const;
  Complex amplitude(const ModeConfig& c) const;
};

/// μ(c) = Π_j n_j!.
std::uint64_t multiplicity(const ModeConfig& c);

/// binom(N + M - 1, N), saturating at UINT64_MAX.
std::uint64_t config_space_size(int num_modes, int num_photons);

/// Every canonical configuration in lexicographic order.
std::vector<ModeConfig> enumerate_configs(int num_modes, int num_photons,
                                          std::uint64_t cap = kDefaultConfigCap);

/// Ryser's formula with Gray-code subset ordering; closed forms for n <= 3.
Complex permanent(const ComplexMatrix& a, int cap = kDefaultPermanentCap);

/// Entry (i, j) = U[rows_i, cols_j]; repeated indices duplicate rows/columns.
ComplexMatrix submatrix(const ComplexMatrix& u, const ModeConfig& rows,
                        const ModeConfig& cols);

/// ⟨k|U|c⟩ = Perm(U_{k|c}) / sqrt(μ(c) μ(k)).
Complex scattering_amplitude(const ComplexMatrix& u, const ModeConfig& c,
                             const ModeConfig& k);

double transition_probability(const ComplexMatrix& u, const ModeConfig& c,
                              const ModeConfig& k);

/// U_kl = exp(-2πi kl/M) / sqrt(M).
ComplexMatrix dft_matrix(int num_modes);

/// Closed-form amplitudes of the DFT applied to N photons in mode 0:
/// a_x = sqrt(N! / (M^N μ(x))).
FockSuperposition dft_input_amplitudes(int num_modes, int num_photons,
                                       std::uint64_t cap = kDefaultConfigCap);

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of diag(R) divided out. Deterministic per seed.
ComplexMatrix haar_random_unitary(int num_modes, std::uint64_t seed);

/// max_ij |(U†U - I)_ij|.
double unitarity_error(const ComplexMatrix& u);

/// a'_c = a_c Π_j σ_{c_j}.
FockSuperposition apply_phase_layer(const FockSuperposition& psi,
                                    const SpinConfig& sigma);

/// ⟨k|S|ψ⟩ = Σ_c a_c ⟨k|S|c⟩, the exact permanent route.
Complex evolve_superposition(const ComplexMatrix& s, const FockSuperposition& psi,
                             const ModeConfig& k);

}  // namespace phop

#endif  // PHOP_LINOPS_HPP
