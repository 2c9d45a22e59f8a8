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

#include "phop/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace phop {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ConfigError("config: '" + key + "' " + why);
}

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(key, "has the wrong type");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail(where.empty() ? key : where + "." + key, "is not a known key");
  }
}

}  // namespace

std::vector<double> TemperatureSpec::ladder() const {
  if (!values.empty()) return values;
  if (count == 1) return {min};
  return spacing == "linear" ? linear_ladder(min, max, count) : geometric_ladder(min, max, count);
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

int RunConfig::channel_count() const {
  if (lambda_mode == "explicit") return static_cast<int>(explicit_lambda.size());
  if (channels) return *channels;
  if (!alpha) throw ConfigError("config: bunched-subset needs 'alpha' or 'channels'");
  return static_cast<int>(std::round(*alpha * std::pow(static_cast<double>(M), n_photons)));
}

double RunConfig::storage_ratio() const {
  return channel_count() / std::pow(static_cast<double>(M), n_photons);
}

void RunConfig::validate() const {
  if (M < 1) fail("M", "must be >= 1");
  if (n_photons < 1) fail("n_photons", "must be >= 1");
  if (lambda_mode == "bunched-subset") {
    if (alpha.has_value() == channels.has_value() && alphas.empty()) {
      fail("alpha", "and 'channels': give exactly one for bunched-subset");
    }
    if (alpha && channels) fail("alpha", "and 'channels' are mutually exclusive");
    if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
    if (alpha || channels) {
      const int p = channel_count();
      if (p < 1) fail(channels ? "channels" : "alpha", "gives fewer than one output channel");
      if (p > M) fail(channels ? "channels" : "alpha", "gives more bunched channels than modes M");
    }
    if (!explicit_lambda.empty()) fail("explicit_lambda", "requires lambda_mode 'explicit'");
  } else if (lambda_mode == "explicit") {
    if (alpha || channels) fail("alpha", "must be absent with lambda_mode 'explicit'");
    if (explicit_lambda.empty()) fail("explicit_lambda", "must list at least one configuration");
    std::set<std::vector<int>> seen;
    for (const auto& c : explicit_lambda) {
      if (static_cast<int>(c.size()) != n_photons) {
        fail("explicit_lambda", "entries must list n_photons mode indices");
      }
      for (int mode : c) {
        if (mode < 0 || mode >= M) fail("explicit_lambda", "mode index outside [0, M)");
      }
      auto sorted = c;
      std::sort(sorted.begin(), sorted.end());
      if (!seen.insert(sorted).second) fail("explicit_lambda", "contains a duplicate configuration");
    }
    if (config_space_size(M, n_photons) > kDefaultConfigCap) {
      fail("explicit_lambda", "needs the full configuration space, which exceeds the enumeration cap");
    }
    if (!alphas.empty()) fail("alphas", "needs lambda_mode 'bunched-subset'");
  } else {
    fail("lambda_mode", "must be 'bunched-subset' or 'explicit'");
  }

  if (!temperatures.values.empty()) {
    for (std::size_t i = 0; i < temperatures.values.size(); ++i) {
      if (!(temperatures.values[i] > 0.0)) fail("temperatures.values", "must be positive");
      if (i > 0 && !(temperatures.values[i] > temperatures.values[i - 1])) {
        fail("temperatures.values", "must be strictly increasing");
      }
    }
  } else {
    if (temperatures.count < 1) fail("temperatures.count", "must be >= 1");
    if (!(temperatures.min > 0.0)) fail("temperatures.min", "must be positive");
    if (temperatures.count > 1 && !(temperatures.max > temperatures.min)) {
      fail("temperatures.max", "must exceed temperatures.min");
    }
    if (temperatures.spacing != "geometric" && temperatures.spacing != "linear") {
      fail("temperatures.spacing", "must be 'geometric' or 'linear'");
    }
  }

  if (n_therm < 0) fail("n_therm", "must be >= 0");
  if (n_measure < 0) fail("n_measure", "must be >= 0");
  if (exchange_interval < 1) fail("exchange_interval", "must be >= 1");
  if (snapshot_stride < 1) fail("snapshot_stride", "must be >= 1");
  if (n_replicas < 1) fail("n_replicas", "must be >= 1");
  if (n_samples < 1) fail("n_samples", "must be >= 1");
  if (overlap_stride < 1 || overlap_stride % snapshot_stride != 0) {
    fail("overlap_stride", "must be a positive multiple of snapshot_stride");
  }
  if (n_exp < 1) fail("n_exp", "must be >= 1");
  if (workers < 1) fail("workers", "must be >= 1");
  if (init != "random" && init != "planted") fail("init", "must be 'random' or 'planted'");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  for (double a : alphas) {
    const double p = std::round(a * std::pow(static_cast<double>(M), n_photons));
    if (!(a > 0.0 && a < 1.0) || p < 1.0 || p > M) {
      fail("alphas", "entries must give between 1 and M bunched channels");
    }
  }
  if (!(thresholds.memory > 0.0 && thresholds.memory <= 1.0)) fail("thresholds.memory", "must lie in (0, 1]");
  if (!(thresholds.overlap > 0.0 && thresholds.overlap <= 1.0)) fail("thresholds.overlap", "must lie in (0, 1]");
  for (int tau : taus) {
    if (tau < 0 || tau % snapshot_stride != 0) {
      fail("taus", "entries must be non-negative multiples of snapshot_stride");
    }
  }
}

Schedule RunConfig::schedule() const {
  Schedule s;
  s.n_therm = n_therm;
  s.n_measure = n_measure;
  s.exchange_interval = exchange_interval;
  s.snapshot_stride = snapshot_stride;
  s.exchange = exchange;
  s.temperatures = temperatures.ladder();
  return s;
}

EnsembleSpec RunConfig::ensemble() const {
  EnsembleSpec e;
  e.num_modes = M;
  e.num_photons = n_photons;
  e.schedule = schedule();
  e.replica_groups = n_replicas;
  e.samples = n_samples;
  e.seed = master_seed;
  e.workers = workers;
  e.init = init == "planted" ? InitMode::Planted : InitMode::Random;
  e.overlap_stride = overlap_stride;
  return e;
}

ModelInstance RunConfig::instance(int sample) const {
  if (lambda_mode == "explicit") {
    std::vector<ModeConfig> lambda;
    for (const auto& c : explicit_lambda) lambda.emplace_back(c, M);
    return ModelInstance(haar_random_unitary(M, matrix_seed(master_seed, sample)),
                         OutputSet::explicit_set(std::move(lambda)), n_photons);
  }
  return build_instance(ensemble(), storage_ratio(), sample);
}

json to_json(const RunConfig& c) {
  json t = {{"min", c.temperatures.min},
            {"max", c.temperatures.max},
            {"count", c.temperatures.count},
            {"spacing", c.temperatures.spacing}};
  if (!c.temperatures.values.empty()) t["values"] = c.temperatures.values;
  json j = {{"M", c.M},
            {"n_photons", c.n_photons},
            {"lambda_mode", c.lambda_mode},
            {"temperatures", t},
            {"n_therm", c.n_therm},
            {"n_measure", c.n_measure},
            {"exchange_interval", c.exchange_interval},
            {"snapshot_stride", c.snapshot_stride},
            {"exchange", c.exchange},
            {"n_replicas", c.n_replicas},
            {"n_samples", c.n_samples},
            {"master_seed", c.master_seed},
            {"output_dir", c.output_dir},
            {"init", c.init},
            {"overlap_stride", c.overlap_stride},
            {"n_exp", c.n_exp},
            {"workers", c.workers},
            {"alphas", c.alphas},
            {"thresholds", {{"memory", c.thresholds.memory}, {"overlap", c.thresholds.overlap}}},
            {"taus", c.taus}};
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["channels"] = c.channels ? json(*c.channels) : json(nullptr);
  if (!c.explicit_lambda.empty()) j["explicit_lambda"] = c.explicit_lambda;
  return j;
}

RunConfig config_from_json(const json& j, RunConfig base) {
  reject_unknown(j,
                 {"M", "n_photons", "alpha", "channels", "lambda_mode", "explicit_lambda",
                  "temperatures", "n_therm", "n_measure", "exchange_interval", "snapshot_stride",
                  "exchange", "n_replicas", "n_samples", "master_seed", "output_dir", "init",
                  "overlap_stride", "n_exp", "workers", "alphas", "thresholds", "taus"},
                 "");
  RunConfig c = std::move(base);
  // Giving either size key replaces the default alpha.
  if (j.contains("alpha") || j.contains("channels")) c.alpha.reset();
  if (j.contains("lambda_mode") && get<std::string>(j, "lambda_mode") == "explicit") c.alpha.reset();
  if (j.contains("M")) c.M = get<int>(j, "M");
  if (j.contains("n_photons")) c.n_photons = get<int>(j, "n_photons");
  if (j.contains("alpha") && !j.at("alpha").is_null()) c.alpha = get<double>(j, "alpha");
  if (j.contains("channels") && !j.at("channels").is_null()) c.channels = get<int>(j, "channels");
  if (j.contains("lambda_mode")) c.lambda_mode = get<std::string>(j, "lambda_mode");
  if (j.contains("explicit_lambda")) {
    c.explicit_lambda = get<std::vector<std::vector<int>>>(j, "explicit_lambda");
  }
  if (j.contains("temperatures")) {
    const auto& t = j.at("temperatures");
    reject_unknown(t, {"min", "max", "count", "spacing", "values"}, "temperatures");
    if (t.contains("min")) c.temperatures.min = get<double>(t, "min");
    if (t.contains("max")) c.temperatures.max = get<double>(t, "max");
    if (t.contains("count")) c.temperatures.count = get<int>(t, "count");
    if (t.contains("spacing")) c.temperatures.spacing = get<std::string>(t, "spacing");
    if (t.contains("values")) c.temperatures.values = get<std::vector<double>>(t, "values");
  }
  if (j.contains("n_therm")) c.n_therm = get<int>(j, "n_therm");
  if (j.contains("n_measure")) c.n_measure = get<int>(j, "n_measure");
  if (j.contains("exchange_interval")) c.exchange_interval = get<int>(j, "exchange_interval");
  if (j.contains("snapshot_stride")) c.snapshot_stride = get<int>(j, "snapshot_stride");
  if (j.contains("exchange")) c.exchange = get<bool>(j, "exchange");
  if (j.contains("n_replicas")) c.n_replicas = get<int>(j, "n_replicas");
  if (j.contains("n_samples")) c.n_samples = get<int>(j, "n_samples");
  if (j.contains("master_seed")) {
    if (!j.at("master_seed").is_number_unsigned()) fail("master_seed", "must be a non-negative integer");
    c.master_seed = get<std::uint64_t>(j, "master_seed");
  }
  if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir");
  if (j.contains("init")) c.init = get<std::string>(j, "init");
  if (j.contains("overlap_stride")) c.overlap_stride = get<int>(j, "overlap_stride");
  if (j.contains("n_exp")) c.n_exp = get<std::int64_t>(j, "n_exp");
  if (j.contains("workers")) c.workers = get<int>(j, "workers");
  if (j.contains("alphas")) c.alphas = get<std::vector<double>>(j, "alphas");
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    reject_unknown(t, {"memory", "overlap"}, "thresholds");
    if (t.contains("memory")) c.thresholds.memory = get<double>(t, "memory");
    if (t.contains("overlap")) c.thresholds.overlap = get<double>(t, "overlap");
  }
  if (j.contains("taus")) c.taus = get<std::vector<int>>(j, "taus");
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "desk") return c;
  if (name == "paper") {
    c.n_therm = 200000;
    c.n_replicas = 36;
    c.n_samples = 20;
    return c;
  }
  throw ConfigError("config: unknown preset '" + name + "' (expected 'desk' or 'paper')");
}

}  // namespace phop
