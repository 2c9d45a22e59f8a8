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

#ifndef PHOP_SPIN_HPP
#define PHOP_SPIN_HPP

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace phop {

/// Binary phase layer: one ±1 Ising spin per optical mode (phase 0 or π).
class SpinConfig {
 public:
  SpinConfig() = default;

  /// All spins +1.
  explicit SpinConfig(int num_modes) : spins_(static_cast<std::size_t>(num_modes), 1) {
    if (num_modes < 1) throw std::invalid_argument("SpinConfig: need at least one mode");
  }

  explicit SpinConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
    if (spins_.empty()) throw std::invalid_argument("SpinConfig: empty");
    for (auto s : spins_) {
      if (s != 1 && s != -1) throw std::invalid_argument("SpinConfig: entries must be +1 or -1");
    }
  }

  template <class Rng>
  static SpinConfig random(int num_modes, Rng& rng) {
    SpinConfig out(num_modes);
    std::bernoulli_distribution coin(0.5);
    for (auto& s : out.spins_) s = coin(rng) ? 1 : -1;
    return out;
  }

  int size() const { return static_cast<int>(spins_.size()); }
  int operator[](int i) const { return spins_[static_cast<std::size_t>(i)]; }
  void flip(int i) { spins_[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(-spins_[static_cast<std::size_t>(i)]); }
  std::span<const std::int8_t> raw() const { return spins_; }

  SpinConfig negated() const {
    SpinConfig out = *this;
    for (auto& s : out.spins_) s = static_cast<std::int8_t>(-s);
    return out;
  }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

 private:
  std::vector<std::int8_t> spins_;
};

}  // namespace phop

#endif  // PHOP_SPIN_HPP
