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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "phop/linops.hpp"

using namespace phop;

namespace {

ModeConfig mc(std::vector<int> modes, int m) { return ModeConfig(std::move(modes), m); }

SpinConfig random_spins(int m, std::mt19937_64& rng) { return SpinConfig::random(m, rng); }

}  // namespace

TEST_CASE("ModeConfig is canonical and compares as a multiset") {
  CHECK(mc({2, 0, 1}, 3) == mc({0, 1, 2}, 3));
  CHECK(mc({1, 0, 0}, 4).to_string() == "[0,0,1]");
  CHECK_THROWS_AS(mc({0, 5}, 5), std::out_of_range);
  CHECK_THROWS_AS(mc({}, 5), std::invalid_argument);
  CHECK(ModeConfig::bunched(3, 2, 5) == mc({3, 3}, 5));
}

TEST_CASE("multiplicity") {
  CHECK(multiplicity(mc({0, 1, 2}, 3)) == 1);
  CHECK(multiplicity(mc({0, 0, 1}, 3)) == 2);
  // Π n_j! gives 3! here, not 3.
  CHECK(multiplicity(mc({0, 0, 0}, 3)) == 6);
  CHECK(multiplicity(mc({1, 1, 4, 4, 4}, 5)) == 12);
}

TEST_CASE("enumerate_configs") {
  auto c22 = enumerate_configs(2, 2);
  REQUIRE(c22.size() == 3);
  CHECK(c22[0] == mc({0, 0}, 2));
  CHECK(c22[1] == mc({0, 1}, 2));
  CHECK(c22[2] == mc({1, 1}, 2));

  CHECK(enumerate_configs(5, 3).size() == 35);
  auto c14 = enumerate_configs(1, 4);
  REQUIRE(c14.size() == 1);
  CHECK(c14[0] == mc({0, 0, 0, 0}, 1));

  SUBCASE("count matches brute force, entries distinct and sorted") {
    for (int m = 1; m <= 5; ++m) {
      for (int n = 1; n <= 4; ++n) {
        auto all = enumerate_configs(m, n);
        CHECK(all.size() == oracle::count_multisets(m, n));
        CHECK(config_space_size(m, n) == all.size());
        CHECK(std::is_sorted(all.begin(), all.end()));
        std::set<ModeConfig> unique(all.begin(), all.end());
        CHECK(unique.size() == all.size());
      }
    }
  }

  SUBCASE("cap") {
    CHECK_THROWS_AS(enumerate_configs(50, 5), ConfigSpaceTooLarge);
    CHECK_THROWS_AS(enumerate_configs(5, 3, 34), ConfigSpaceTooLarge);
    CHECK(config_space_size(1000, 40) == std::numeric_limits<std::uint64_t>::max());
  }
}

TEST_CASE("permanent") {
  CHECK(std::abs(permanent(ComplexMatrix::Identity(3, 3)) - Complex{1, 0}) < 1e-15);
  CHECK(std::abs(permanent(ComplexMatrix::Identity(7, 7)) - Complex{1, 0}) < 1e-15);

  ComplexMatrix two(2, 2);
  two << Complex{1, 2}, Complex{3, -1}, Complex{0.5, 0}, Complex{-2, 1};
  CHECK(std::abs(permanent(two) - (two(0, 0) * two(1, 1) + two(0, 1) * two(1, 0))) < 1e-15);

  CHECK_THROWS_AS(permanent(ComplexMatrix(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(permanent(ComplexMatrix::Identity(21, 21)), std::invalid_argument);

  std::mt19937_64 rng(11);
  SUBCASE("Ryser matches the permutation sum for n <= 7") {
    for (int n = 1; n <= 7; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        auto a = oracle::random_complex(n, n, rng);
        const Complex naive = oracle::naive_permanent(a);
        CHECK(std::abs(permanent(a) - naive) <= 1e-12 * std::abs(naive));
      }
    }
  }

  SUBCASE("invariant under row and column permutations") {
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 4 + rep % 4;
      auto a = oracle::random_complex(n, n, rng);
      std::vector<int> rows(static_cast<std::size_t>(n)), cols(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
      std::iota(cols.begin(), cols.end(), 0);
      std::shuffle(rows.begin(), rows.end(), rng);
      std::shuffle(cols.begin(), cols.end(), rng);
      ComplexMatrix b(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          b(i, j) = a(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      const Complex pa = permanent(a);
      CHECK(std::abs(permanent(b) - pa) <= 1e-12 * std::abs(pa));
    }
  }
}

TEST_CASE("submatrix duplicates repeated indices") {
  std::mt19937_64 rng(3);
  auto u = oracle::random_complex(4, 4, rng);
  auto s1 = submatrix(u, mc({0}, 4), mc({0}, 4));
  CHECK(s1.rows() == 1);
  CHECK(s1(0, 0) == u(0, 0));

  auto s2 = submatrix(u, mc({0, 0}, 4), mc({1, 2}, 4));
  CHECK(s2(0, 0) == u(0, 1));
  CHECK(s2(0, 1) == u(0, 2));
  CHECK(s2(1, 0) == u(0, 1));
  CHECK(s2(1, 1) == u(0, 2));

  auto s3 = submatrix(u, mc({1, 2}, 4), mc({0, 0}, 4));
  CHECK(s3(0, 0) == u(1, 0));
  CHECK(s3(0, 1) == u(1, 0));
  CHECK(s3(1, 0) == u(2, 0));
  CHECK(s3(1, 1) == u(2, 0));

  CHECK_THROWS_AS(submatrix(u, mc({0, 5}, 6), mc({0, 1}, 4)), std::out_of_range);
  CHECK_THROWS_AS(submatrix(u, mc({0}, 4), mc({0, 1}, 4)), std::invalid_argument);
}

TEST_CASE("scattering amplitudes and transition probabilities") {
  const ComplexMatrix id = ComplexMatrix::Identity(3, 3);
  CHECK(std::abs(scattering_amplitude(id, mc({0, 1}, 3), mc({0, 1}, 3)) - 1.0) < 1e-15);
  CHECK(std::abs(scattering_amplitude(id, mc({0, 1}, 3), mc({0, 2}, 3))) < 1e-15);
  CHECK(transition_probability(id, mc({1, 1}, 3), mc({1, 1}, 3)) == doctest::Approx(1.0));

  // Hong-Ou-Mandel: two photons into a balanced beam splitter never split.
  const auto bs = dft_matrix(2);
  CHECK(std::abs(scattering_amplitude(bs, mc({0, 1}, 2), mc({0, 1}, 2))) < 1e-15);
  CHECK(transition_probability(bs, mc({0, 1}, 2), mc({0, 1}, 2)) < 1e-30);
  CHECK(transition_probability(bs, mc({0, 1}, 2), mc({0, 0}, 2)) == doctest::Approx(0.5));
  CHECK(transition_probability(bs, mc({0, 0}, 2), mc({0, 1}, 2)) == doctest::Approx(0.5));

  SUBCASE("normalization over the output space") {
    for (int seed = 0; seed < 5; ++seed) {
      const auto u = haar_random_unitary(4, 100 + seed);
      const auto outputs = enumerate_configs(4, 2);
      for (const auto& c : outputs) {
        double total = 0.0;
        for (const auto& k : outputs) total += transition_probability(u, c, k);
        CHECK(std::abs(total - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("dft_matrix") {
  auto u1 = dft_matrix(1);
  CHECK(u1.rows() == 1);
  CHECK(std::abs(u1(0, 0) - 1.0) < 1e-15);

  auto u2 = dft_matrix(2);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(u2(0, 0) - r) < 1e-15);
  CHECK(std::abs(u2(0, 1) - r) < 1e-15);
  CHECK(std::abs(u2(1, 0) - r) < 1e-15);
  CHECK(std::abs(u2(1, 1) + r) < 1e-15);

  // Sign convention: U_11 = exp(-2πi/M)/sqrt(M).
  auto u5 = dft_matrix(5);
  CHECK(std::abs(u5(1, 1) - std::polar(1.0 / std::sqrt(5.0), -2.0 * M_PI / 5.0)) < 1e-15);

  for (int m = 1; m <= 64; m += 7) CHECK(unitarity_error(dft_matrix(m)) < 1e-12);
  CHECK_THROWS(dft_matrix(0));
}

TEST_CASE("dft_input_amplitudes") {
  auto psi = dft_input_amplitudes(2, 2);
  CHECK(psi.amplitude(mc({0, 0}, 2)).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(psi.amplitude(mc({0, 1}, 2)).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(psi.amplitude(mc({1, 1}, 2)).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(psi.norm_squared() - 1.0) < 1e-14);

  auto single = dft_input_amplitudes(3, 1);
  for (const auto& [c, a] : single.amplitudes) CHECK(std::abs(a - 1.0 / std::sqrt(3.0)) < 1e-15);

  SUBCASE("closed form equals the permanent route") {
    for (int m = 1; m <= 6; ++m) {
      for (int n = 1; n <= 3; ++n) {
        const auto dft = dft_matrix(m);
        const auto source = ModeConfig::bunched(0, n, m);
        const auto closed = dft_input_amplitudes(m, n);
        CHECK(std::abs(closed.norm_squared() - 1.0) < 1e-12);
        for (const auto& [x, a] : closed.amplitudes) {
          CHECK(std::abs(a - scattering_amplitude(dft, source, x)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("haar_random_unitary") {
  CHECK(haar_random_unitary(8, 42) == haar_random_unitary(8, 42));
  CHECK(haar_random_unitary(8, 42) != haar_random_unitary(8, 43));
  CHECK(unitarity_error(haar_random_unitary(50, 7)) < 1e-10);
  CHECK(unitarity_error(haar_random_unitary(1, 7)) < 1e-12);

  SUBCASE("second moment E|U_ij|^2 = 1/M") {
    // 10^4 entries from four 50x50 samples; Var|U_ij|^2 = (M-1)/(M^2 (M+1)).
    const int m = 50;
    double sum = 0.0;
    int count = 0;
    for (int seed = 0; seed < 4; ++seed) {
      const auto u = haar_random_unitary(m, 1000 + seed);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          sum += std::norm(u(i, j));
          ++count;
        }
    }
    const double mean = sum / count;
    const double sd = std::sqrt((m - 1.0) / (m * m * (m + 1.0)) / count);
    CHECK(std::abs(mean - 1.0 / m) < 5.0 * sd);
  }

  SUBCASE("phases are not biased towards the real axis") {
    // Without the R-diagonal phase correction the diagonal of Q has a
    // skewed argument distribution; E[U_ii] = 0 under Haar.
    const int m = 10;
    Complex diag{};
    const int reps = 400;
    for (int seed = 0; seed < reps; ++seed) diag += haar_random_unitary(m, 5000 + seed)(0, 0);
    diag /= static_cast<double>(reps);
    // |U_00| ~ 1/sqrt(M): standard error of the mean is about 1/sqrt(M reps).
    CHECK(std::abs(diag) < 5.0 / std::sqrt(static_cast<double>(m * reps)));
  }
}

TEST_CASE("apply_phase_layer") {
  std::mt19937_64 rng(9);
  auto psi = dft_input_amplitudes(4, 2);

  auto same = apply_phase_layer(psi, SpinConfig(4));
  CHECK(same.amplitudes == psi.amplitudes);

  auto all_down = apply_phase_layer(psi, SpinConfig(std::vector<std::int8_t>{-1, -1, -1, -1}));
  CHECK(all_down.amplitudes == psi.amplitudes);

  auto one_down = apply_phase_layer(psi, SpinConfig(std::vector<std::int8_t>{-1, 1, 1, 1}));
  CHECK(one_down.amplitude(mc({0, 1}, 4)) == -psi.amplitude(mc({0, 1}, 4)));
  CHECK(one_down.amplitude(mc({0, 0}, 4)) == psi.amplitude(mc({0, 0}, 4)));
  CHECK(one_down.norm_squared() == psi.norm_squared());

  for (int rep = 0; rep < 10; ++rep) {
    auto sigma = random_spins(4, rng);
    CHECK(apply_phase_layer(apply_phase_layer(psi, sigma), sigma).amplitudes == psi.amplitudes);
  }
  CHECK_THROWS_AS(apply_phase_layer(psi, SpinConfig(5)), std::invalid_argument);
}

TEST_CASE("evolve_superposition") {
  std::mt19937_64 rng(21);
  const auto s = haar_random_unitary(4, 5);

  SUBCASE("single configuration reduces to the scattering amplitude") {
    FockSuperposition psi{4, 2, {}};
    psi.amplitudes[mc({1, 3}, 4)] = 1.0;
    for (const auto& k : enumerate_configs(4, 2)) {
      CHECK(std::abs(evolve_superposition(s, psi, k) -
                     scattering_amplitude(s, mc({1, 3}, 4), k)) < 1e-15);
    }
  }

  SUBCASE("identity passes amplitudes through") {
    auto psi = dft_input_amplitudes(4, 3);
    const ComplexMatrix id = ComplexMatrix::Identity(4, 4);
    for (const auto& [k, a] : psi.amplitudes) {
      CHECK(std::abs(evolve_superposition(id, psi, k) - a) < 1e-15);
    }
  }

  SUBCASE("normalization for any unitary, state and phase layer") {
    for (int m = 1; m <= 6; ++m) {
      for (int n = 1; n <= 3; ++n) {
        const auto u = haar_random_unitary(m, static_cast<std::uint64_t>(31 * m + n));
        // Random normalized input superposition.
        FockSuperposition psi{m, n, {}};
        std::normal_distribution<double> g;
        double norm = 0.0;
        for (const auto& c : enumerate_configs(m, n)) {
          Complex a{g(rng), g(rng)};
          psi.amplitudes[c] = a;
          norm += std::norm(a);
        }
        for (auto& [c, a] : psi.amplitudes) a /= std::sqrt(norm);
        const auto shifted = apply_phase_layer(psi, random_spins(m, rng));
        double total = 0.0;
        for (const auto& k : enumerate_configs(m, n)) {
          total += std::norm(evolve_superposition(u, shifted, k));
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
      }
    }
  }
}
