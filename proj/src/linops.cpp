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

#include "phop/linops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace phop {

ModeConfig::ModeConfig(std::vector<int> modes, int num_modes)
    : modes_(std::move(modes)), num_modes_(num_modes) {
  if (num_modes_ < 1) throw std::invalid_argument("ModeConfig: num_modes must be >= 1");
  if (modes_.empty()) throw std::invalid_argument("ModeConfig: need at least one photon");
  for (int m : modes_) {
    if (m < 0 || m >= num_modes_) {
      throw std::out_of_range("ModeConfig: mode index " + std::to_string(m) +
                              " outside [0, " + std::to_string(num_modes_ - 1) + "]");
    }
  }
  std::sort(modes_.begin(), modes_.end());
}

ModeConfig ModeConfig::bunched(int mode, int num_photons, int num_modes) {
  if (num_photons < 1) throw std::invalid_argument("ModeConfig: need at least one photon");
  return ModeConfig(std::vector<int>(static_cast<std::size_t>(num_photons), mode), num_modes);
}

std::vector<int> ModeConfig::occupations() const {
  std::vector<int> n(static_cast<std::size_t>(num_modes_), 0);
  for (int m : modes_) ++n[static_cast<std::size_t>(m)];
  return n;
}

std::string ModeConfig::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (i) os << ',';
    os << modes_[i];
  }
  os << ']';
  return os.str();
}

double FockSuperposition::norm_squared() const {
  double sum = 0.0;
  for (const auto& [c, a] : amplitudes) sum += std::norm(a);
  return sum;
}

Complex FockSuperposition::amplitude(const ModeConfig& c) const {
  auto it = amplitudes.find(c);
  return it == amplitudes.end() ? Complex{} : it->second;
}

std::uint64_t multiplicity(const ModeConfig& c) {
  std::uint64_t mu = 1;
  auto modes = c.modes();
  // Runs of equal indices are contiguous in canonical form.
  std::uint64_t run = 0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    run = (i > 0 && modes[i] == modes[i - 1]) ? run + 1 : 1;
    mu *= run;
  }
  return mu;
}

std::uint64_t config_space_size(int num_modes, int num_photons) {
  if (num_modes < 1 || num_photons < 1) {
    throw std::invalid_argument("config_space_size: M and N_ph must be >= 1");
  }
  // binom(N + M - 1, k) with k = min(N, M - 1), built incrementally so every
  // intermediate value is itself a binomial coefficient.
  const std::uint64_t n = static_cast<std::uint64_t>(num_photons) + num_modes - 1;
  const std::uint64_t k = std::min<std::uint64_t>(num_photons, num_modes - 1);
  unsigned __int128 value = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    value = value * (n - k + i) / i;
    if (value > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(value);
}

std::vector<ModeConfig> enumerate_configs(int num_modes, int num_photons, std::uint64_t cap) {
  const std::uint64_t count = config_space_size(num_modes, num_photons);
  if (count > cap) {
    throw ConfigSpaceTooLarge("config space too large: binom(" +
                              std::to_string(num_photons + num_modes - 1) + ", " +
                              std::to_string(num_photons) + ") = " + std::to_string(count) +
                              " exceeds cap " + std::to_string(cap));
  }
  std::vector<ModeConfig> out;
  out.reserve(count);
  std::vector<int> modes(static_cast<std::size_t>(num_photons), 0);
  while (true) {
    out.emplace_back(modes, num_modes);
    int pos = num_photons - 1;
    while (pos >= 0 && modes[static_cast<std::size_t>(pos)] == num_modes - 1) --pos;
    if (pos < 0) break;
    const int next = modes[static_cast<std::size_t>(pos)] + 1;
    std::fill(modes.begin() + pos, modes.end(), next);
  }
  return out;
}

Complex permanent(const ComplexMatrix& a, int cap) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("permanent: matrix is " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ", not square");
  }
  const int n = static_cast<int>(a.rows());
  if (n > cap) {
    throw std::invalid_argument("permanent: size " + std::to_string(n) + " exceeds cap " +
                                std::to_string(cap));
  }
  switch (n) {
    case 0:
      return {1.0, 0.0};
    case 1:
      return a(0, 0);
    case 2:
      return a(0, 0) * a(1, 1) + a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) + a(1, 2) * a(2, 1)) +
             a(0, 1) * (a(1, 0) * a(2, 2) + a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) + a(1, 1) * a(2, 0));
    default:
      break;
  }

  // Ryser: Perm(A) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j∈S} A_ij, with
  // subsets visited in Gray-code order so each step toggles one column.
  std::vector<Complex> row_sums(static_cast<std::size_t>(n), Complex{});
  std::vector<bool> in_subset(static_cast<std::size_t>(n), false);
  Complex total{};
  const std::uint64_t steps = std::uint64_t{1} << n;
  int subset_size = 0;
  for (std::uint64_t g = 1; g < steps; ++g) {
    const int j = std::countr_zero(g);
    const bool adding = !in_subset[static_cast<std::size_t>(j)];
    in_subset[static_cast<std::size_t>(j)] = adding;
    subset_size += adding ? 1 : -1;
    for (int i = 0; i < n; ++i) {
      if (adding) {
        row_sums[static_cast<std::size_t>(i)] += a(i, j);
      } else {
        row_sums[static_cast<std::size_t>(i)] -= a(i, j);
      }
    }
    Complex prod = row_sums[0];
    for (int i = 1; i < n; ++i) prod *= row_sums[static_cast<std::size_t>(i)];
    if ((n - subset_size) % 2 == 0) {
      total += prod;
    } else {
      total -= prod;
    }
  }
  return total;
}

ComplexMatrix submatrix(const ComplexMatrix& u, const ModeConfig& rows, const ModeConfig& cols) {
  if (rows.num_photons() != cols.num_photons()) {
    throw std::invalid_argument("submatrix: row and column configs differ in photon count");
  }
  const int n = rows.num_photons();
  ComplexMatrix out(n, n);
  for (int i = 0; i < n; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    if (r >= u.rows()) throw std::out_of_range("submatrix: row index out of range");
    for (int j = 0; j < n; ++j) {
      const int c = cols[static_cast<std::size_t>(j)];
      if (c >= u.cols()) throw std::out_of_range("submatrix: column index out of range");
      out(i, j) = u(r, c);
    }
  }
  return out;
}

Complex scattering_amplitude(const ComplexMatrix& u, const ModeConfig& c, const ModeConfig& k) {
  const double norm =
      std::sqrt(static_cast<double>(multiplicity(c)) * static_cast<double>(multiplicity(k)));
  return permanent(submatrix(u, k, c)) / norm;
}

double transition_probability(const ComplexMatrix& u, const ModeConfig& c, const ModeConfig& k) {
  return std::norm(scattering_amplitude(u, c, k));
}

ComplexMatrix dft_matrix(int num_modes) {
  if (num_modes < 1) throw std::invalid_argument("dft_matrix: M must be >= 1");
  ComplexMatrix u(num_modes, num_modes);
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_modes));
  for (int k = 0; k < num_modes; ++k) {
    for (int l = 0; l < num_modes; ++l) {
      // Reduce kl mod M first so the angle stays in [0, 2π).
      const auto kl = static_cast<long long>(k) * l % num_modes;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(kl) / num_modes;
      u(k, l) = std::polar(scale, angle);
    }
  }
  return u;
}

FockSuperposition dft_input_amplitudes(int num_modes, int num_photons, std::uint64_t cap) {
  FockSuperposition psi{num_modes, num_photons, {}};
  double n_factorial = 1.0;
  for (int i = 2; i <= num_photons; ++i) n_factorial *= i;
  const double base = n_factorial / std::pow(static_cast<double>(num_modes), num_photons);
  for (auto& x : enumerate_configs(num_modes, num_photons, cap)) {
    const double a = std::sqrt(base / static_cast<double>(multiplicity(x)));
    psi.amplitudes.emplace(std::move(x), Complex{a, 0.0});
  }
  return psi;
}

ComplexMatrix haar_random_unitary(int num_modes, std::uint64_t seed) {
  if (num_modes < 1) throw std::invalid_argument("haar_random_unitary: M must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  ComplexMatrix z(num_modes, num_modes);
  for (int j = 0; j < num_modes; ++j) {
    for (int i = 0; i < num_modes; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(i, j) = Complex{re, im};
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (int j = 0; j < num_modes; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    const Complex phase = mag > 0.0 ? d / mag : Complex{1.0, 0.0};
    q.col(j) *= phase;
  }
  return q;
}

double unitarity_error(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  const ComplexMatrix residual = u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols());
  return residual.cwiseAbs().maxCoeff();
}

FockSuperposition apply_phase_layer(const FockSuperposition& psi, const SpinConfig& sigma) {
  if (sigma.size() != psi.num_modes) {
    throw std::invalid_argument("apply_phase_layer: spin count " + std::to_string(sigma.size()) +
                                " != mode count " + std::to_string(psi.num_modes));
  }
  FockSuperposition out = psi;
  for (auto& [c, a] : out.amplitudes) {
    int sign = 1;
    for (int m : c.modes()) sign *= sigma[m];
    if (sign < 0) a = -a;
  }
  return out;
}

Complex evolve_superposition(const ComplexMatrix& s, const FockSuperposition& psi,
                             const ModeConfig& k) {
  if (s.rows() != psi.num_modes || s.cols() != psi.num_modes) {
    throw std::invalid_argument("evolve_superposition: matrix does not match mode count");
  }
  if (k.num_photons() != psi.num_photons || k.num_modes() != psi.num_modes) {
    throw std::invalid_argument("evolve_superposition: output config does not match state");
  }
  Complex sum{};
  for (const auto& [c, a] : psi.amplitudes) {
    if (a == Complex{}) continue;
    sum += a * scattering_amplitude(s, c, k);
  }
  return sum;
}

}  // namespace phop
