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

#include "phop/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "phop/io.hpp"

namespace phop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

SpinConfig random_spins(int m, Rng& rng) {
  std::vector<std::int8_t> raw(static_cast<std::size_t>(m));
  for (auto& s : raw) s = (rng() >> 63) ? 1 : -1;
  return SpinConfig(std::move(raw));
}

double relative(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + '\n';
}

std::string fmt_int(std::int64_t v) { return std::to_string(v); }

}  // namespace

// ---- validate ---------------------------------------------------------------

std::vector<CheckResult> run_validation(const ValidateOptions& opt) {
  if (opt.max_modes < 1 || opt.max_photons < 1 || opt.cases < 1) {
    throw ConfigError("validate: max-modes, max-photons and cases must be >= 1");
  }
  if (config_space_size(opt.max_modes, opt.max_photons) > kDefaultConfigCap) {
    throw ConfigError("validate: configuration space exceeds the enumeration cap");
  }
  const int min_m = std::min(opt.min_modes, opt.max_modes);
  const int min_n = std::min(opt.min_photons, opt.max_photons);
  Rng rng(opt.seed);
  CheckResult fast{"fast_vs_exact", 0.0, 1e-9};
  CheckResult norm{"normalization", 0.0, 1e-9};
  CheckResult dft{"dft_amplitudes", 0.0, 1e-12};
  CheckResult flips{"flip_update", 0.0, 1e-8};
  CheckResult two{"two_photon_couplings", 0.0, 1e-12};

  for (int m = min_m; m <= opt.max_modes; ++m) {
    for (int n = min_n; n <= opt.max_photons; ++n) {
      const auto all = enumerate_configs(m, n);
      for (int c = 0; c < opt.cases; ++c) {
        const auto s = haar_random_unitary(m, rng());
        const auto sigma = random_spins(m, rng);
        const int p = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(m));
        const auto modes = random_bunched_modes(m, p, rng());
        const ModelInstance inst(s, OutputSet::bunched_subset(modes, m), n);
        SpinConfig probe = sigma;
        if (opt.fault == Fault::FastPathSign) probe.flip(0);
        const double exact = output_probability_exact(inst, sigma);
        const double quick = fully_bunched_probability(s, probe, modes, n);
        fast.max_deviation = std::max(fast.max_deviation, relative(quick, exact));
        ++fast.cases;

        const ModelInstance full(s, OutputSet::explicit_set(all), n);
        norm.max_deviation =
            std::max(norm.max_deviation, std::abs(output_probability_exact(full, sigma) - 1.0));
        ++norm.cases;
      }

      const auto u = dft_matrix(m);
      const auto closed = dft_input_amplitudes(m, n);
      const auto source = ModeConfig::bunched(0, n, m);
      for (const auto& [x, a] : closed.amplitudes) {
        dft.max_deviation =
            std::max(dft.max_deviation, std::abs(a - scattering_amplitude(u, source, x)));
      }
      ++dft.cases;

      for (int c = 0; c < std::min(opt.cases, 3); ++c) {
        const auto s = haar_random_unitary(m, rng());
        auto sigma = random_spins(m, rng);
        const auto modes = random_bunched_modes(m, 1 + static_cast<int>(rng() % m), rng());
        FieldCache cache(s, modes, n, sigma);
        for (int f = 0; f < 10000; ++f) {
          flip_update(cache, sigma, static_cast<int>(rng() % static_cast<std::uint64_t>(m)));
        }
        const double direct = fully_bunched_probability(s, sigma, modes, n);
        flips.max_deviation = std::max(flips.max_deviation, std::abs(cache.probability() - direct));
        ++flips.cases;
      }

      if (n == 2) {
        for (int c = 0; c < opt.cases; ++c) {
          const auto s = haar_random_unitary(m, rng());
          std::vector<ModeConfig> lambda;
          for (const auto& k : all) {
            if (rng() % 2 == 0) lambda.push_back(k);
          }
          if (lambda.empty()) lambda.push_back(all.front());
          const ModelInstance inst(s, OutputSet::explicit_set(lambda), 2);
          const auto& x = all[rng() % all.size()];
          const auto& y = all[rng() % all.size()];
          two.max_deviation = std::max(
              two.max_deviation,
              std::abs(coupling_tensor(inst, x, y) - coupling_tensor_two_photon(inst, x, y)) /
                  std::max(std::abs(coupling_tensor(inst, x, y)), 1e-300));
          ++two.cases;
        }
      }
    }
  }
  std::vector<CheckResult> out{fast, norm, dft, flips};
  if (two.cases > 0) out.push_back(two);
  for (auto& r : out) r.passed = r.max_deviation < r.tolerance;
  return out;
}

int cmd_validate(const ValidateOptions& options, std::ostream& out) {
  std::vector<CheckResult> results;
  try {
    results = run_validation(options);
  } catch (const ConfigError& e) {
    out << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %8s %14s %10s  %s\n", "check", "cases", "max_dev",
                "tolerance", "status");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-22s %8d %14.3e %10.1e  %s\n", r.name.c_str(), r.cases,
                  r.max_deviation, r.tolerance, r.passed ? "PASS" : "FAIL");
    out << line;
    ok &= r.passed;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

// ---- bench-scaling ----------------------------------------------------------

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

constexpr double kBenchTemperature = 1e12;

BenchResult bench_scaling(const BenchOptions& opt) {
  if (opt.sizes.empty()) throw ConfigError("bench-scaling: empty size list");
  for (int p : opt.sizes) {
    if (p < 1 || p > opt.num_modes) throw ConfigError("bench-scaling: sizes must lie in [1, M]");
  }
  if (opt.proposals < opt.num_modes || opt.repeats < 1) {
    throw ConfigError("bench-scaling: proposals must be >= M and repeats >= 1");
  }
  const auto s = haar_random_unitary(opt.num_modes, derive_seed(opt.seed, {seed_tag::kMatrix}));
  BenchResult out;
  const std::int64_t steps = opt.proposals / opt.num_modes;
  std::vector<ModelInstance> insts;
  std::vector<MCState> states;
  insts.reserve(opt.sizes.size());
  states.reserve(opt.sizes.size());
  for (int p : opt.sizes) {
    const auto modes = random_bunched_modes(opt.num_modes, p, derive_seed(opt.seed, {seed_tag::kLambda,
                                                                                     static_cast<std::uint64_t>(p)}));
    insts.emplace_back(s, OutputSet::bunched_subset(modes, opt.num_modes), opt.num_photons);
    Rng init(derive_seed(opt.seed, {seed_tag::kReplica, static_cast<std::uint64_t>(p)}));
    // Every proposal is accepted at this temperature, so each step is a flip.
    states.emplace_back(insts.back(), random_spins(opt.num_modes, init), kBenchTemperature, init());
    for (int w = 0; w < 10; ++w) mc_step(states.back(), insts.back());
    out.sizes.push_back(p);
    out.ns_per_flip.push_back(std::numeric_limits<double>::infinity());
  }
  // Repeats cycle over the sizes so slow machine drift hits all of them alike.
  for (int r = 0; r < opt.repeats; ++r) {
    for (std::size_t i = 0; i < insts.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::int64_t k = 0; k < steps; ++k) mc_step(states[i], insts[i]);
      const auto t1 = std::chrono::steady_clock::now();
      const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
      out.ns_per_flip[i] = std::min(out.ns_per_flip[i], ns / static_cast<double>(steps * opt.num_modes));
    }
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < out.sizes.size(); ++i) {
    if (out.sizes[i] < opt.fit_min) continue;
    x.push_back(out.sizes[i]);
    y.push_back(out.ns_per_flip[i]);
  }
  if (x.size() >= 2) out.fit = fit_line(x, y);
  return out;
}

int cmd_bench_scaling(const BenchOptions& options, std::optional<fs::path> out_dir, std::ostream& log) {
  BenchResult r;
  try {
    r = bench_scaling(options);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  std::string table = "channels,ns_per_flip,in_fit\n";
  char line[128];
  log << "channels  ns/flip\n";
  for (std::size_t i = 0; i < r.sizes.size(); ++i) {
    table += join({fmt_int(r.sizes[i]), fmt_double(r.ns_per_flip[i]),
                   r.sizes[i] >= options.fit_min ? "1" : "0"});
    std::snprintf(line, sizeof line, "%8d  %7.2f\n", r.sizes[i], r.ns_per_flip[i]);
    log << line;
  }
  std::snprintf(line, sizeof line, "fit (|Λ| >= %d): t = %.4g + %.4g |Λ| ns, R^2 = %.4f\n",
                options.fit_min, r.fit.intercept, r.fit.slope, r.fit.r2);
  log << line;
  if (out_dir) {
    try {
      fs::create_directories(*out_dir);
      write_file_atomic(*out_dir / "bench_scaling.csv", table);
      write_file_atomic(*out_dir / "bench_fit.csv",
                        "slope_ns_per_channel,intercept_ns,r2\n" +
                            join({fmt_double(r.fit.slope), fmt_double(r.fit.intercept),
                                  fmt_double(r.fit.r2)}));
    } catch (const std::exception& e) {
      log << "error: " << e.what() << '\n';
      return kExitConfigError;
    }
  }
  return kExitOk;
}

// ---- tables -----------------------------------------------------------------

std::string summary_csv(std::span<const CellSummary> cells, const PhaseThresholds& thresholds,
                        std::int64_t n_exp) {
  std::string out =
      "alpha,channels,temperature,samples,replica_pairs,mean_abs_q,frac_strong_q,mean_abs_m,"
      "mean_max_abs_m,mean_max_abs_m_err,energy_mean,energy_sd,pr_mean,sigma_t,sigma_exp,"
      "within_noise_window,swap_rate,phase\n";
  for (const auto& c : cells) {
    const double sigma_exp = measurement_noise(std::clamp(c.pr_mean, 0.0, 1.0), n_exp);
    std::string label = "n/a";
    if (c.pq.total() > 0.0) label = to_string(classify_phase(c, thresholds));
    out += join({fmt_double(c.alpha), fmt_int(c.channels), fmt_double(c.temperature),
                 fmt_int(c.samples), fmt_int(static_cast<std::int64_t>(c.replica_pairs)),
                 fmt_double(c.mean_abs_q), fmt_double(c.frac_strong_q), fmt_double(c.mean_abs_m),
                 fmt_double(c.mean_max_abs_m), fmt_double(c.mean_max_abs_m_err),
                 fmt_double(c.energy_mean), fmt_double(c.energy_sd), fmt_double(c.pr_mean),
                 fmt_double(c.sigma_t), fmt_double(sigma_exp), sigma_exp < c.sigma_t ? "1" : "0",
                 fmt_double(c.swap_rate), label});
  }
  return out;
}

std::string histograms_csv(std::span<const CellSummary> cells) {
  std::string out = "alpha,temperature,kind,bin,bin_center,density\n";
  for (const auto& c : cells) {
    const std::pair<const char*, const Histogram*> kinds[] = {
        {"q", &c.pq}, {"m_re", &c.pm_re}, {"m_abs", &c.pm_abs}};
    for (const auto& [name, h] : kinds) {
      for (int i = 0; i < h->bins(); ++i) {
        out += join({fmt_double(c.alpha), fmt_double(c.temperature), name, fmt_int(i),
                     fmt_double(h->bin_center(i)), fmt_double(h->density(i))});
      }
    }
  }
  return out;
}

std::string noise_window_csv(std::span<const CellSummary> cells, std::int64_t n_exp) {
  std::string out = "alpha,temperature,pr_mean,sigma_t,sigma_exp,n_exp,within_window\n";
  for (const auto& c : cells) {
    const double sigma_exp = measurement_noise(std::clamp(c.pr_mean, 0.0, 1.0), n_exp);
    out += join({fmt_double(c.alpha), fmt_double(c.temperature), fmt_double(c.pr_mean),
                 fmt_double(c.sigma_t), fmt_double(sigma_exp), fmt_int(n_exp),
                 sigma_exp < c.sigma_t ? "1" : "0"});
  }
  return out;
}

namespace {

void log_cells(std::span<const CellSummary> cells, const PhaseThresholds& thr, std::ostream& log) {
  char line[200];
  std::snprintf(line, sizeof line, "%9s %6s %8s %9s %10s %9s %9s %11s\n", "alpha", "|Λ|", "T",
                "mean|q|", "max|m|", "sigma_T", "swap", "phase");
  log << line;
  for (const auto& c : cells) {
    const std::string label = c.pq.total() > 0.0 ? to_string(classify_phase(c, thr)) : "n/a";
    std::snprintf(line, sizeof line, "%9.5f %5d %8.4f %9.4f %10.4f %9.3e %9.3f %11s\n", c.alpha,
                  c.channels, c.temperature, c.mean_abs_q, c.mean_max_abs_m, c.sigma_t, c.swap_rate,
                  label.c_str());
    log << line;
  }
}

std::string sample_file(const char* stem, int s, const char* ext) {
  return std::string(stem) + "_sample" + std::to_string(s) + ext;
}

std::vector<std::string> sample_files(int s) {
  return {sample_file("spins", s, ".bin"), sample_file("pr", s, ".bin"),
          sample_file("spins", s, "_index.csv"), sample_file("energies", s, ".csv"),
          sample_file("swaps", s, ".csv")};
}

/// Config keys that do not change the numbers.
json numeric_config(json cfg) {
  cfg.erase("output_dir");
  cfg.erase("workers");
  return cfg;
}

void declare(json& manifest, const fs::path& dir, const std::string& name) {
  const auto path = dir / name;
  manifest["files"][name] = {{"sha256", sha256_file(path)},
                             {"bytes", static_cast<std::uint64_t>(fs::file_size(path))}};
}

bool declared_intact(const json& manifest, const fs::path& dir, const std::string& name) {
  if (!manifest.contains("files") || !manifest["files"].contains(name)) return false;
  const auto path = dir / name;
  if (!fs::is_regular_file(path)) return false;
  return sha256_file(path) == manifest["files"][name]["sha256"].get<std::string>();
}

void write_manifest(const fs::path& dir, const json& manifest) {
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

json lambda_json(const ModelInstance& inst) {
  json out = json::array();
  for (const auto& k : inst.lambda().configs(inst.num_photons(), inst.num_modes())) {
    out.push_back(std::vector<int>(k.modes().begin(), k.modes().end()));
  }
  return out;
}

void write_sample(const fs::path& dir, int s, const EmcResult& run, const RunConfig& cfg) {
  const auto ladder = cfg.temperatures.ladder();
  std::string spins, pr;
  std::string index =
      "group,temperature_index,temperature,spin_offset,snapshots,pr_offset,steps,num_modes,"
      "snapshot_stride\n";
  std::string energies = "group,temperature_index,temperature,phase,step,energy\n";
  std::string swaps = "group,pair,attempts,accepted\n";
  std::size_t pr_offset = 0;
  for (std::size_t g = 0; g < run.groups.size(); ++g) {
    const auto& rec = run.groups[g];
    for (std::size_t t = 0; t < rec.trajectories.size(); ++t) {
      const auto& tr = rec.trajectories[t];
      index += join({fmt_int(static_cast<std::int64_t>(g)), fmt_int(static_cast<std::int64_t>(t)),
                     fmt_double(tr.temperature), fmt_int(static_cast<std::int64_t>(spins.size())),
                     fmt_int(static_cast<std::int64_t>(tr.snapshot_count())),
                     fmt_int(static_cast<std::int64_t>(pr_offset)),
                     fmt_int(static_cast<std::int64_t>(tr.length())), fmt_int(tr.num_modes),
                     fmt_int(tr.snapshot_stride)});
      spins.append(reinterpret_cast<const char*>(tr.spins.data()), tr.spins.size());
      append_le(pr, tr.pr);
      pr_offset += tr.pr.size();
      const auto& therm = rec.therm_energy[t];
      for (std::size_t k = 0; k < therm.size(); ++k) {
        energies += join({fmt_int(static_cast<std::int64_t>(g)), fmt_int(static_cast<std::int64_t>(t)),
                          fmt_double(ladder[t]), "therm",
                          fmt_int(static_cast<std::int64_t>((k + 1) * static_cast<std::size_t>(cfg.exchange_interval))),
                          fmt_double(therm[k])});
      }
      for (std::size_t k = 0; k < tr.length(); k += static_cast<std::size_t>(tr.snapshot_stride)) {
        energies += join({fmt_int(static_cast<std::int64_t>(g)), fmt_int(static_cast<std::int64_t>(t)),
                          fmt_double(ladder[t]), "measure", fmt_int(static_cast<std::int64_t>(k + 1)),
                          fmt_double(tr.energy[k])});
      }
    }
    for (std::size_t p = 0; p < rec.swaps.size(); ++p) {
      swaps += join({fmt_int(static_cast<std::int64_t>(g)), fmt_int(static_cast<std::int64_t>(p)),
                     fmt_int(rec.swaps[p].attempts), fmt_int(rec.swaps[p].accepted)});
    }
  }
  const auto names = sample_files(s);
  write_file_atomic(dir / names[0], spins);
  write_file_atomic(dir / names[1], pr);
  write_file_atomic(dir / names[2], index);
  write_file_atomic(dir / names[3], energies);
  write_file_atomic(dir / names[4], swaps);
}

int to_int(const std::string& s) { return std::stoi(s); }
std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }

}  // namespace

// ---- run artifacts ----------------------------------------------------------

RunArtifacts RunArtifacts::open(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ArtifactError("no run directory at '" + dir.string() + "'");
  RunArtifacts run;
  run.dir = dir;
  try {
    run.manifest = json::parse(read_file(dir / "manifest.json"));
    run.config = config_from_json(run.manifest.at("config"));
  } catch (const json::exception& e) {
    throw ArtifactError("manifest.json is malformed: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw ArtifactError("manifest.json carries an unusable config: " + std::string(e.what()));
  }
  const auto& files = run.manifest.contains("files") ? run.manifest["files"] : json::object();
  for (const auto& [name, entry] : files.items()) {
    const auto path = dir / name;
    if (!fs::is_regular_file(path)) throw ArtifactError("declared file '" + name + "' is missing");
    if (sha256_file(path) != entry.at("sha256").get<std::string>()) {
      throw ArtifactError("checksum mismatch for '" + name + "'");
    }
  }
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "manifest.json") continue;
    if (!files.contains(name)) throw ArtifactError("undeclared file '" + name + "' in run directory");
  }
  return run;
}

EmcResult RunArtifacts::load_sample(int s) const {
  const auto names = sample_files(s);
  const auto& files = manifest.at("files");
  for (const auto& n : names) {
    if (!files.contains(n)) throw ArtifactError("sample " + std::to_string(s) + " is not in the manifest");
  }
  const std::string spins = read_file(dir / names[0]);
  const std::vector<double> pr = parse_le_doubles(read_file(dir / names[1]));
  const CsvTable index = parse_csv(read_file(dir / names[2]));
  const CsvTable swaps = parse_csv(read_file(dir / names[4]));

  const auto ladder = config.temperatures.ladder();
  EmcResult out;
  out.groups.resize(static_cast<std::size_t>(config.n_replicas));
  for (auto& g : out.groups) {
    g.trajectories.resize(ladder.size());
    g.therm_energy.resize(ladder.size());
    g.swaps.resize(ladder.size() > 1 ? ladder.size() - 1 : 0);
  }
  const auto c_group = index.column("group"), c_t = index.column("temperature_index"),
             c_so = index.column("spin_offset"), c_sn = index.column("snapshots"),
             c_po = index.column("pr_offset"), c_steps = index.column("steps"),
             c_m = index.column("num_modes"), c_stride = index.column("snapshot_stride");
  if (index.rows.size() != out.groups.size() * ladder.size()) {
    throw ArtifactError("spin index does not match the configured ladder");
  }
  for (const auto& row : index.rows) {
    const auto g = to_size(row[c_group]);
    const auto t = to_size(row[c_t]);
    if (g >= out.groups.size() || t >= ladder.size()) throw ArtifactError("spin index out of range");
    Trajectory& tr = out.groups[g].trajectories[t];
    tr.replica_group = static_cast<int>(g);
    tr.temperature_index = static_cast<int>(t);
    tr.temperature = ladder[t];
    tr.num_modes = to_int(row[c_m]);
    tr.snapshot_stride = to_int(row[c_stride]);
    const auto so = to_size(row[c_so]);
    const auto sn = to_size(row[c_sn]) * static_cast<std::size_t>(tr.num_modes);
    const auto po = to_size(row[c_po]);
    const auto steps = to_size(row[c_steps]);
    if (so + sn > spins.size() || po + steps > pr.size()) throw ArtifactError("spin index overruns data");
    tr.spins.assign(spins.begin() + static_cast<std::ptrdiff_t>(so),
                    spins.begin() + static_cast<std::ptrdiff_t>(so + sn));
    for (auto s8 : tr.spins) {
      if (s8 != 1 && s8 != -1) throw ArtifactError("spin file holds a value other than +-1");
    }
    tr.pr.assign(pr.begin() + static_cast<std::ptrdiff_t>(po),
                 pr.begin() + static_cast<std::ptrdiff_t>(po + steps));
    tr.energy.resize(tr.pr.size());
    for (std::size_t k = 0; k < tr.pr.size(); ++k) tr.energy[k] = -tr.num_modes * tr.pr[k];
  }
  const auto w_g = swaps.column("group"), w_p = swaps.column("pair"),
             w_a = swaps.column("attempts"), w_acc = swaps.column("accepted");
  for (const auto& row : swaps.rows) {
    const auto g = to_size(row[w_g]);
    const auto p = to_size(row[w_p]);
    if (g >= out.groups.size() || p >= out.groups[g].swaps.size()) throw ArtifactError("swap table out of range");
    out.groups[g].swaps[p].attempts = std::stoll(row[w_a]);
    out.groups[g].swaps[p].accepted = std::stoll(row[w_acc]);
  }
  return out;
}

std::vector<CellSummary> summarize_run(const RunArtifacts& run) {
  const auto& cfg = run.config;
  const std::size_t nt = cfg.temperatures.ladder().size();
  std::vector<std::vector<CellSummary>> by_t(nt);
  for (int s = 0; s < cfg.n_samples; ++s) {
    const auto inst = cfg.instance(s);
    const auto res = run.load_sample(s);
    for (std::size_t t = 0; t < nt; ++t) {
      by_t[t].push_back(summarize_cell(res, inst, static_cast<int>(t), cfg.overlap_stride));
    }
  }
  std::vector<CellSummary> out;
  for (const auto& cells : by_t) out.push_back(pool_cells(cells));
  return out;
}

// ---- run --------------------------------------------------------------------

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const fs::path dir = cfg.output_dir;
  json manifest;
  try {
    fs::create_directories(dir);
    const bool resume = fs::exists(dir / "manifest.json");
    if (resume) {
      manifest = json::parse(read_file(dir / "manifest.json"));
      if (numeric_config(manifest.at("config")) != numeric_config(to_json(cfg))) {
        log << "error: '" << dir.string()
            << "' holds a run with a different configuration; choose another --out\n";
        return kExitConfigError;
      }
      // Leftovers from an interrupted atomic write.
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".tmp") fs::remove(e.path());
      }
      // Stale declarations are dropped; their files get rewritten below.
      std::vector<std::string> stale;
      for (const auto& [name, _] : manifest["files"].items()) {
        if (!declared_intact(manifest, dir, name)) stale.push_back(name);
      }
      for (const auto& name : stale) {
        manifest["files"].erase(name);
        fs::remove(dir / name);
      }
      manifest["status"] = "running";
    } else {
      if (!fs::is_empty(dir)) {
        log << "error: output directory '" << dir.string() << "' is not empty and has no manifest\n";
        return kExitConfigError;
      }
      manifest = {{"artifact", "phop"},
                  {"version", kVersion},
                  {"command", "run"},
                  {"config", to_json(cfg)},
                  {"started", utc_timestamp()},
                  {"finished", nullptr},
                  {"status", "running"},
                  {"samples", json::array()},
                  {"files", json::object()}};
    }
  } catch (const std::exception& e) {
    log << "error: cannot prepare output directory '" << dir.string() << "': " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    const Schedule schedule = cfg.schedule();
    const int p = cfg.channel_count();
    auto& samples = manifest["samples"];
    while (samples.size() < static_cast<std::size_t>(cfg.n_samples)) {
      const int s = static_cast<int>(samples.size());
      samples.push_back({{"index", s},
                         {"matrix_seed", matrix_seed(cfg.master_seed, s)},
                         {"lambda_seed", lambda_seed(cfg.master_seed, s)},
                         {"dynamics_seed", dynamics_seed(cfg.master_seed, p, s)},
                         {"complete", false}});
    }
    for (int s = 0; s < cfg.n_samples; ++s) {
      auto& entry = samples[static_cast<std::size_t>(s)];
      const auto names = sample_files(s);
      const bool done = entry.value("complete", false) &&
                        std::all_of(names.begin(), names.end(), [&](const std::string& n) {
                          return declared_intact(manifest, dir, n);
                        });
      if (done) {
        log << "sample " << s << ": checkpoint intact, skipped\n";
        continue;
      }
      const auto inst = cfg.instance(s);
      EmcOptions opts;
      opts.init = cfg.init == "planted" ? InitMode::Planted : InitMode::Random;
      opts.workers = cfg.workers;
      const auto t0 = std::chrono::steady_clock::now();
      const auto run = run_emc(inst, schedule, cfg.n_replicas, entry["dynamics_seed"].get<std::uint64_t>(), opts);
      write_sample(dir, s, run, cfg);
      for (const auto& n : names) declare(manifest, dir, n);
      entry["lambda"] = lambda_json(inst);
      entry["files"] = names;
      entry["complete"] = true;
      write_manifest(dir, manifest);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log << "sample " << s + 1 << "/" << cfg.n_samples << " done in " << secs << " s\n";
    }

    const auto cells = summarize_run(RunArtifacts::open(dir));
    write_file_atomic(dir / "summary.csv", summary_csv(cells, cfg.thresholds, cfg.n_exp));
    write_file_atomic(dir / "histograms.csv", histograms_csv(cells));
    write_file_atomic(dir / "noise_window.csv", noise_window_csv(cells, cfg.n_exp));
    for (const char* n : {"summary.csv", "histograms.csv", "noise_window.csv"}) declare(manifest, dir, n);
    manifest["status"] = "complete";
    manifest["finished"] = utc_timestamp();
    write_manifest(dir, manifest);
    log_cells(cells, cfg.thresholds, log);
  } catch (const ArtifactError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

// ---- analyze / selfcorr -----------------------------------------------------

namespace {

fs::path analysis_dir(const fs::path& run_dir, const std::optional<fs::path>& out) {
  return out ? *out : run_dir / "analysis";
}

void write_outputs(const fs::path& dir, const std::map<std::string, std::string>& files,
                   json manifest) {
  fs::create_directories(dir);
  for (const auto& [name, body] : files) write_file_atomic(dir / name, body);
  manifest["files"] = json::object();
  for (const auto& [name, _] : files) declare(manifest, dir, name);
  manifest["finished"] = utc_timestamp();
  write_manifest(dir, manifest);
}

}  // namespace

int cmd_analyze(const fs::path& run_dir, std::optional<fs::path> out_dir, std::ostream& log) {
  try {
    const auto run = RunArtifacts::open(run_dir);
    if (run.manifest.value("status", "") != "complete") {
      log << "error: run in '" << run_dir.string() << "' is incomplete; resume it with 'phop run'\n";
      return kExitCheckFailed;
    }
    const auto cells = summarize_run(run);
    const auto& cfg = run.config;
    json manifest = {{"artifact", "phop"},
                     {"version", kVersion},
                     {"command", "analyze"},
                     {"source", fs::absolute(run_dir).string()},
                     {"source_manifest_sha256", sha256_file(run_dir / "manifest.json")},
                     {"started", utc_timestamp()}};
    write_outputs(analysis_dir(run_dir, out_dir),
                  {{"summary.csv", summary_csv(cells, cfg.thresholds, cfg.n_exp)},
                   {"histograms.csv", histograms_csv(cells)},
                   {"noise_window.csv", noise_window_csv(cells, cfg.n_exp)}},
                  manifest);
    log_cells(cells, cfg.thresholds, log);
  } catch (const ArtifactError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_selfcorr(const fs::path& run_dir, std::optional<std::vector<int>> taus,
                 std::optional<fs::path> out_dir, std::ostream& log) {
  try {
    const auto run = RunArtifacts::open(run_dir);
    const auto& cfg = run.config;
    const auto lags = taus ? *taus : cfg.taus;
    if (lags.empty()) {
      log << "error: no lags given\n";
      return kExitConfigError;
    }
    for (int tau : lags) {
      if (tau < 0 || tau % cfg.snapshot_stride != 0 || tau >= cfg.n_measure) {
        log << "error: tau " << tau << " must be a multiple of the snapshot stride ("
            << cfg.snapshot_stride << ") below n_measure (" << cfg.n_measure << ")\n";
        return kExitConfigError;
      }
    }
    const auto ladder = cfg.temperatures.ladder();
    std::vector<std::vector<double>> sum(ladder.size(), std::vector<double>(lags.size(), 0.0));
    std::size_t count = 0;
    for (int s = 0; s < cfg.n_samples; ++s) {
      const auto res = run.load_sample(s);
      for (const auto& g : res.groups) {
        for (std::size_t t = 0; t < ladder.size(); ++t) {
          for (std::size_t k = 0; k < lags.size(); ++k) {
            sum[t][k] += self_correlation(g.trajectories[t], lags[k]);
          }
        }
        ++count;
      }
    }
    std::string table = "temperature_index,temperature,tau,f_self,trajectories\n";
    log << "T        " ;
    for (int tau : lags) log << " tau=" << tau;
    log << '\n';
    char cellbuf[32];
    for (std::size_t t = 0; t < ladder.size(); ++t) {
      std::snprintf(cellbuf, sizeof cellbuf, "%-8.4f", ladder[t]);
      log << cellbuf;
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const double f = sum[t][k] / static_cast<double>(count);
        table += join({fmt_int(static_cast<std::int64_t>(t)), fmt_double(ladder[t]), fmt_int(lags[k]),
                       fmt_double(f), fmt_int(static_cast<std::int64_t>(count))});
        std::snprintf(cellbuf, sizeof cellbuf, " %7.4f", f);
        log << cellbuf;
      }
      log << '\n';
    }
    json manifest = {{"artifact", "phop"},
                     {"version", kVersion},
                     {"command", "selfcorr"},
                     {"source", fs::absolute(run_dir).string()},
                     {"source_manifest_sha256", sha256_file(run_dir / "manifest.json")},
                     {"started", utc_timestamp()}};
    const auto dir = analysis_dir(run_dir, out_dir);
    fs::create_directories(dir);
    write_file_atomic(dir / "selfcorr.csv", table);
    manifest["files"] = json::object();
    declare(manifest, dir, "selfcorr.csv");
    write_file_atomic(dir / "selfcorr_manifest.json", manifest.dump(2) + "\n");
  } catch (const ArtifactError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

// ---- phase-diagram ----------------------------------------------------------

int cmd_phase_diagram(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
    if (cfg.lambda_mode != "bunched-subset") {
      throw ConfigError("config: phase-diagram needs lambda_mode 'bunched-subset'");
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const std::vector<double> alphas = cfg.alphas.empty() ? std::vector<double>{cfg.storage_ratio()} : cfg.alphas;
  const fs::path dir = cfg.output_dir;
  try {
    fs::create_directories(dir);
  } catch (const std::exception& e) {
    log << "error: cannot create '" << dir.string() << "': " << e.what() << '\n';
    return kExitConfigError;
  }
  try {
    json manifest = {{"artifact", "phop"},
                     {"version", kVersion},
                     {"command", "phase-diagram"},
                     {"config", to_json(cfg)},
                     {"started", utc_timestamp()}};
    json seeds = json::array();
    for (int s = 0; s < cfg.n_samples; ++s) {
      json row = {{"index", s},
                  {"matrix_seed", matrix_seed(cfg.master_seed, s)},
                  {"lambda_seed", lambda_seed(cfg.master_seed, s)},
                  {"dynamics_seeds", json::object()}};
      for (double a : alphas) {
        const int p = channel_count(a, cfg.M, cfg.n_photons);
        row["dynamics_seeds"][std::to_string(p)] = dynamics_seed(cfg.master_seed, p, s);
      }
      seeds.push_back(row);
    }
    manifest["samples"] = seeds;
    const auto sweep = phase_sweep(cfg.ensemble(), alphas, [&](const std::string& msg) { log << msg << '\n'; });
    write_outputs(dir,
                  {{"phase_summary.csv", summary_csv(sweep.cells, cfg.thresholds, cfg.n_exp)},
                   {"phase_histograms.csv", histograms_csv(sweep.cells)},
                   {"noise_window.csv", noise_window_csv(sweep.cells, cfg.n_exp)}},
                  manifest);
    log_cells(sweep.cells, cfg.thresholds, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace phop
