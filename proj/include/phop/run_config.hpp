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

#ifndef PHOP_RUN_CONFIG_HPP
#define PHOP_RUN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "phop/analysis.hpp"

namespace phop {

/// A configuration that cannot be run. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TemperatureSpec {
  double min = 0.05;
  double max = 0.6;
  int count = 8;
  std::string spacing = "geometric";  // geometric | linear
  /// Explicit ladder; overrides min/max/count/spacing when non-empty.
  std::vector<double> values;

  std::vector<double> ladder() const;
  friend bool operator==(const TemperatureSpec&, const TemperatureSpec&) = default;
};

/// One run, as stored in a config file and echoed into the manifest.
struct RunConfig {
  int M = 50;
  int n_photons = 2;
  /// Exactly one of alpha and channels sets |Λ| for bunched subsets.
  std::optional<double> alpha = 0.0004;
  std::optional<int> channels;
  std::string lambda_mode = "bunched-subset";  // bunched-subset | explicit
  std::vector<std::vector<int>> explicit_lambda;
  TemperatureSpec temperatures;
  int n_therm = 20000;
  int n_measure = 10000;
  int exchange_interval = 200;
  int snapshot_stride = 10;
  bool exchange = true;
  int n_replicas = 12;
  int n_samples = 4;
  std::uint64_t master_seed = 1;
  std::string output_dir = "phop_out";
  std::string init = "random";  // random | planted
  int overlap_stride = 200;
  std::int64_t n_exp = 10000;
  int workers = 1;
  /// Storage-ratio grid for phase-diagram runs.
  std::vector<double> alphas;
  PhaseThresholds thresholds;
  /// Lags for selfcorr, in MC steps.
  std::vector<int> taus{0, 10, 20, 50, 100, 200, 500, 1000};

  /// Throws ConfigError with a single actionable message.
  void validate() const;

  /// Number of output channels.
  int channel_count() const;
  /// P / M^N.
  double storage_ratio() const;
  Schedule schedule() const;
  EnsembleSpec ensemble() const;
  /// Disorder instance for `sample` (Haar S and Λ).
  ModelInstance instance(int sample) const;

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

nlohmann::json to_json(const RunConfig& cfg);
/// Keys present in `j` override `base`. Unknown keys and wrong types are
/// ConfigErrors. Does not validate ranges.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// "desk" or "paper".
RunConfig preset_config(const std::string& name);

}  // namespace phop

#endif  // PHOP_RUN_CONFIG_HPP
