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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "phop/commands.hpp"
#include "phop/io.hpp"

using namespace phop;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("phop_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.M = 10;
  c.alpha.reset();
  c.channels = 2;
  c.temperatures.values = {0.1, 0.3};
  c.n_therm = 40;
  c.n_measure = 60;
  c.exchange_interval = 20;
  c.snapshot_stride = 5;
  c.overlap_stride = 20;
  c.n_replicas = 3;
  c.n_samples = 2;
  c.master_seed = 42;
  c.taus = {0, 10, 20};
  c.output_dir = out.string();
  return c;
}

std::string slurp(const fs::path& p) { return read_file(p); }

void expect_config_error(const json& j, const std::string& key) {
  INFO("key " << key);
  try {
    config_from_json(j).validate();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(key) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("config round trip") {
  std::vector<RunConfig> configs{RunConfig{}, preset_config("paper"), tiny_config("x")};
  RunConfig expl;
  expl.M = 6;
  expl.alpha.reset();
  expl.lambda_mode = "explicit";
  expl.explicit_lambda = {{0, 1}, {2, 2}};
  configs.push_back(expl);
  RunConfig grid;
  grid.alpha.reset();
  grid.alphas = {0.0004, 0.0032};
  grid.master_seed = 0xffffffffffffffffULL;
  configs.push_back(grid);
  for (const auto& c : configs) {
    CHECK_NOTHROW(c.validate());
    const auto once = config_from_json(to_json(c));
    CHECK(once == c);
    CHECK(to_json(config_from_json(json::parse(to_json(once).dump()))) == to_json(c));
  }
}

TEST_CASE("config rejection") {
  expect_config_error({{"bogus", 1}}, "bogus");
  expect_config_error({{"M", "fifty"}}, "M");
  expect_config_error({{"M", 0}}, "M");
  expect_config_error({{"alpha", 0.03}}, "alpha");
  expect_config_error({{"alpha", 0.0001}}, "alpha");
  expect_config_error({{"alpha", 0.0004}, {"channels", 1}}, "alpha");
  expect_config_error({{"n_replicas", 0}}, "n_replicas");
  expect_config_error({{"exchange_interval", 0}}, "exchange_interval");
  expect_config_error({{"overlap_stride", 15}}, "overlap_stride");
  expect_config_error({{"temperatures", {{"values", {0.2, 0.1}}}}}, "temperatures.values");
  expect_config_error({{"temperatures", {{"spacing", "log"}}}}, "temperatures.spacing");
  expect_config_error({{"temperatures", {{"nope", 1}}}}, "temperatures.nope");
  expect_config_error({{"lambda_mode", "explicit"}, {"explicit_lambda", {{0, 0}, {0, 0}}}, {"M", 4}},
                      "explicit_lambda");
  expect_config_error({{"lambda_mode", "explicit"}, {"explicit_lambda", {{0, 9}}}, {"M", 4}},
                      "explicit_lambda");
  expect_config_error({{"lambda_mode", "weird"}}, "lambda_mode");
  expect_config_error({{"init", "hot"}}, "init");
  expect_config_error({{"master_seed", -1}}, "master_seed");
  expect_config_error({{"taus", {3}}}, "taus");
  CHECK_THROWS_AS(preset_config("laptop"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/phop.json"), ConfigError);
}

TEST_CASE("presets") {
  const auto desk = preset_config("desk");
  CHECK(desk.M == 50);
  CHECK(desk.n_therm == 20000);
  CHECK(desk.n_replicas == 12);
  CHECK(desk.n_samples == 4);
  CHECK(desk.channel_count() == 1);
  const auto paper = preset_config("paper");
  CHECK(paper.n_therm == 200000);
  CHECK(paper.exchange_interval == 200);
  CHECK(paper.n_replicas == 36);
  CHECK(paper.n_samples == 20);
  // A config file layers over the preset.
  const auto layered = config_from_json({{"n_samples", 2}}, paper);
  CHECK(layered.n_samples == 2);
  CHECK(layered.n_replicas == 36);
}

TEST_CASE("io helpers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto t = parse_csv("a,b\n1,2\n3,4\n");
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[1][t.column("b")] == "4");
  CHECK_THROWS_AS(t.column("c"), ArtifactError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ArtifactError);
  std::string bytes;
  const std::vector<double> v{1.5, -0.25, 1e-300};
  append_le(bytes, v);
  CHECK(parse_le_doubles(bytes) == v);
  CHECK(std::stod(fmt_double(0.1)) == 0.1);
}

TEST_CASE("linear fit") {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("validate command") {
  ValidateOptions opt;
  opt.max_modes = 4;
  opt.max_photons = 3;
  opt.cases = 5;
  std::ostringstream out;
  CHECK(cmd_validate(opt, out) == kExitOk);
  for (const auto& r : run_validation(opt)) {
    CHECK(r.passed);
    CHECK(r.max_deviation < 1e-9);
  }

  opt.fault = Fault::FastPathSign;
  std::ostringstream bad;
  CHECK(cmd_validate(opt, bad) == kExitCheckFailed);
  CHECK(bad.str().find("FAIL") != std::string::npos);

  ValidateOptions edge;
  edge.max_modes = 1;
  edge.max_photons = 3;
  std::ostringstream e;
  CHECK(cmd_validate(edge, e) == kExitOk);

  ValidateOptions huge;
  huge.max_modes = 200;
  huge.max_photons = 4;
  std::ostringstream h;
  CHECK(cmd_validate(huge, h) == kExitConfigError);
}

TEST_CASE("run, resume and analyze") {
  TempDir tmp("run");
  const auto dir_a = tmp.path / "a";
  const auto dir_b = tmp.path / "b";
  std::ostringstream log;
  REQUIRE(cmd_run(tiny_config(dir_a), log) == kExitOk);
  REQUIRE(cmd_run(tiny_config(dir_b), log) == kExitOk);

  const auto manifest = json::parse(slurp(dir_a / "manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["samples"].size() == 2);
  CHECK(manifest["samples"][1]["matrix_seed"].get<std::uint64_t>() == matrix_seed(42, 1));
  // Every file but the manifest is declared, with a matching checksum.
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_a)) {
    const auto name = e.path().filename().string();
    if (name == "manifest.json") continue;
    ++files;
    REQUIRE(manifest["files"].contains(name));
    CHECK(manifest["files"][name]["sha256"] == sha256_file(e.path()));
  }
  CHECK(files == 13);

  // Same config, fresh directory: identical numeric content.
  for (const auto& [name, entry] : manifest["files"].items()) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }

  // Spin file holds ±1 bytes only.
  for (char c : slurp(dir_a / "spins_sample0.bin")) CHECK((c == 1 || c == -1));

  SUBCASE("resume after an interrupted sample") {
    auto m = manifest;
    m["samples"][1]["complete"] = false;
    m["status"] = "running";
    fs::remove(dir_a / "spins_sample1.bin");
    fs::remove(dir_a / "summary.csv");
    write_file_atomic(dir_a / "manifest.json", m.dump(2));
    std::ostringstream resumed;
    REQUIRE(cmd_run(tiny_config(dir_a), resumed) == kExitOk);
    CHECK(resumed.str().find("sample 0: checkpoint intact") != std::string::npos);
    CHECK(resumed.str().find("sample 1: checkpoint") == std::string::npos);
    CHECK(slurp(dir_a / "spins_sample1.bin") == slurp(dir_b / "spins_sample1.bin"));
    CHECK(slurp(dir_a / "summary.csv") == slurp(dir_b / "summary.csv"));
  }

  SUBCASE("a different config is refused in the same directory") {
    auto other = tiny_config(dir_a);
    other.master_seed = 43;
    std::ostringstream l;
    CHECK(cmd_run(other, l) == kExitConfigError);
    auto more_workers = tiny_config(dir_a);
    more_workers.workers = 3;
    CHECK(cmd_run(more_workers, l) == kExitOk);
  }

  SUBCASE("analyze reproduces the run tables") {
    std::ostringstream l;
    REQUIRE(cmd_analyze(dir_a, std::nullopt, l) == kExitOk);
    CHECK(slurp(dir_a / "analysis" / "summary.csv") == slurp(dir_a / "summary.csv"));
    CHECK(slurp(dir_a / "analysis" / "histograms.csv") == slurp(dir_a / "histograms.csv"));
  }

  SUBCASE("analyze refuses undeclared and tampered inputs") {
    std::ostringstream l;
    write_file_atomic(dir_a / "extra.csv", "x\n1\n");
    CHECK(cmd_analyze(dir_a, std::nullopt, l) == kExitCheckFailed);
    CHECK(l.str().find("undeclared") != std::string::npos);
    fs::remove(dir_a / "extra.csv");

    auto pr = slurp(dir_a / "pr_sample0.bin");
    pr[3] ^= 1;
    write_file_atomic(dir_a / "pr_sample0.bin", pr);
    std::ostringstream l2;
    CHECK(cmd_analyze(dir_a, std::nullopt, l2) == kExitCheckFailed);
    CHECK(l2.str().find("checksum") != std::string::npos);

    std::ostringstream l3;
    CHECK(cmd_analyze(tmp.path / "missing", std::nullopt, l3) == kExitCheckFailed);
  }

  SUBCASE("selfcorr") {
    std::ostringstream l;
    REQUIRE(cmd_selfcorr(dir_a, std::nullopt, std::nullopt, l) == kExitOk);
    const auto table = parse_csv(slurp(dir_a / "analysis" / "selfcorr.csv"));
    CHECK(table.rows.size() == 6);
    for (const auto& row : table.rows) {
      if (row[table.column("tau")] == "0") CHECK(std::stod(row[table.column("f_self")]) == 1.0);
    }
    std::ostringstream bad;
    CHECK(cmd_selfcorr(dir_a, std::vector<int>{7}, std::nullopt, bad) == kExitConfigError);
    CHECK(cmd_selfcorr(dir_a, std::vector<int>{60}, std::nullopt, bad) == kExitConfigError);
  }

  SUBCASE("single-cell phase diagram matches run and analyze") {
    auto cfg = tiny_config(tmp.path / "pd");
    std::ostringstream l;
    REQUIRE(cmd_phase_diagram(cfg, l) == kExitOk);
    CHECK(slurp(tmp.path / "pd" / "phase_summary.csv") == slurp(dir_a / "summary.csv"));
    const auto pdm = json::parse(slurp(tmp.path / "pd" / "manifest.json"));
    CHECK(pdm["files"].contains("phase_histograms.csv"));
  }
}

TEST_CASE("thermalization-only run") {
  TempDir tmp("therm");
  auto cfg = tiny_config(tmp.path / "r");
  cfg.n_measure = 0;
  cfg.n_samples = 1;
  cfg.taus = {0};
  std::ostringstream log;
  REQUIRE(cmd_run(cfg, log) == kExitOk);
  const auto energies = parse_csv(slurp(tmp.path / "r" / "energies_sample0.csv"));
  CHECK(energies.rows.size() == 3 * 2 * 2);
  for (const auto& row : energies.rows) CHECK(row[energies.column("phase")] == "therm");
  CHECK(fs::file_size(tmp.path / "r" / "spins_sample0.bin") == 0);
}

TEST_CASE("run rejects bad configs and occupied directories") {
  TempDir tmp("bad");
  auto cfg = tiny_config(tmp.path / "r");
  cfg.n_replicas = 0;
  std::ostringstream log;
  CHECK(cmd_run(cfg, log) == kExitConfigError);
  CHECK(log.str().find("n_replicas") != std::string::npos);

  write_file_atomic(tmp.path / "stray.txt", "x");
  auto occupied = tiny_config(tmp.path);
  CHECK(cmd_run(occupied, log) == kExitConfigError);

  auto grid = tiny_config(tmp.path / "pd");
  grid.lambda_mode = "explicit";
  grid.channels.reset();
  grid.explicit_lambda = {{0, 1}};
  CHECK(cmd_phase_diagram(grid, log) == kExitConfigError);
}

TEST_CASE("explicit output sets run through the general evaluator") {
  TempDir tmp("expl");
  auto cfg = tiny_config(tmp.path / "r");
  cfg.M = 5;
  cfg.channels.reset();
  cfg.lambda_mode = "explicit";
  cfg.explicit_lambda = {{0, 1}, {3, 3}};
  cfg.n_samples = 1;
  std::ostringstream log;
  REQUIRE(cmd_run(cfg, log) == kExitOk);
  const auto run = RunArtifacts::open(tmp.path / "r");
  const auto res = run.load_sample(0);
  const auto inst = cfg.instance(0);
  const auto& tr = res.groups[0].trajectories[0];
  const auto snap = tr.snapshot(tr.snapshot_count() - 1);
  const SpinConfig last(std::vector<std::int8_t>(snap.begin(), snap.end()));
  const std::size_t step = (tr.snapshot_count() - 1) * static_cast<std::size_t>(tr.snapshot_stride);
  CHECK(tr.pr[step] == doctest::Approx(output_probability_exact(inst, last)).epsilon(1e-9));
}

TEST_CASE("bench scaling") {
  BenchOptions opt;
  opt.num_modes = 20;
  opt.sizes = {1, 5, 10, 20};
  opt.proposals = 20000;
  opt.repeats = 1;
  const auto r = bench_scaling(opt);
  CHECK(r.sizes == opt.sizes);
  CHECK(r.ns_per_flip.size() == 4);
  for (double t : r.ns_per_flip) CHECK(t > 0.0);
  opt.sizes = {30};
  CHECK_THROWS_AS(bench_scaling(opt), ConfigError);
}
