#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <unistd.h>

#include "collapse/commands.hpp"
#include "collapse/dust.hpp"

using namespace collapse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("collapse_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// small grids so the whole pipeline runs in seconds
Config small_config() {
  Config c;
  c.validation.adjoint_grids = {200, 400};
  c.validation.chain_grid = 200;
  c.validation.chain_tol = 2e-5;
  c.dust.mass_times = 4;
  c.dust.density_points = 20;
  c.hierarchy.M = 1;
  c.hierarchy.per_decade = 10;
  c.hierarchy.coarse = 12;
  c.hierarchy.dense = 60;
  c.hierarchy.gain_j = {1};
  c.residual.M_list = {0};
  c.residual.eps_list = {1e-3, 5e-4};
  c.simulate.hydro.intervals = 100;
  c.simulate.hydro.eps = 0.0;
  c.simulate.mass_tol = 1e-2;  // 100 labels resolve the steep edge of w^alpha coarsely
  c.simulate.tune_iterations = 1;
  return c;
}

void append(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::app);
  out << text;
}

}  // namespace

TEST_CASE("config defaults round trip and reject unknown keys") {
  const Config d;
  const auto j = to_json(d);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(to_json(config_from_json(nlohmann::json::object())) == j);

  const auto c = config_from_json({{"profile", {{"n", 50.0}}}, {"simulate", {{"hydro", {{"eps", 2e-4}}}}}});
  CHECK(c.profile.n == 50.0);
  CHECK(c.profile.gamma == d.profile.gamma);
  CHECK(c.simulate.hydro.eps == 2e-4);
  CHECK(c.simulate.hydro.cfl == d.simulate.hydro.cfl);

  CHECK_THROWS_AS(config_from_json({{"profil", nlohmann::json::object()}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json({{"simulate", {{"hydro", {{"epsilon", 1e-3}}}}}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json({{"dust", {{"labels", "all"}}}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json({{"profile", {{"kind", "spiral"}}}}), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::invalid_argument);

  const auto dir = scratch("cfg");
  {
    std::ofstream out(dir / "c.json");
    out << "{\n  // comments are allowed\n  \"threads\": 1,\n  \"hierarchy\": {\"M\": 1}\n}\n";
  }
  const auto lc = load_config((dir / "c.json").string());
  CHECK(lc.threads == 1);
  CHECK(lc.hierarchy.M == 1);
  fs::remove_all(dir);
}

TEST_CASE("FNV-1a content hash") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("manifests list their files and detect stale dependencies") {
  const auto out = scratch("stale");
  auto c = small_config();

  CHECK_THROWS_AS(cmd_residual_scan(c, out), DependencyError);

  const auto vm = cmd_validate_profile(c, out);
  CHECK(vm.all_pass());
  for (const auto& f : vm.files) {
    CHECK(fs::exists(out / "validate-profile" / f));
    CHECK(vm.hashes.at(f) == file_hash(out / "validate-profile" / f));
  }
  const auto back = read_manifest(out / "validate-profile");
  CHECK(back.command == "validate-profile");
  CHECK(back.checks.size() == vm.checks.size());

  const auto hm = cmd_build_hierarchy(c, out);
  CHECK(fs::exists(out / "hierarchy" / "phi_1.csv"));
  CHECK(fs::exists(out / "hierarchy" / "gain_report.json"));
  CHECK_NOTHROW(require_fresh(out / "hierarchy", "build-hierarchy", config_snapshot("build-hierarchy", c)));

  const auto rm = cmd_residual_scan(c, out);
  REQUIRE(rm.depends.size() == 1);
  CHECK(rm.depends[0]["hash"] == file_hash(out / "hierarchy" / "manifest.json"));

  // a changed config section makes the hierarchy stale for residual-scan
  auto c2 = c;
  c2.hierarchy.tau_min = 2e-4;
  CHECK_THROWS_AS(cmd_residual_scan(c2, out), DependencyError);
  // so does an edited artifact
  append(out / "hierarchy" / "phi_1.csv", "0,0,0\n");
  CHECK_THROWS_AS(cmd_residual_scan(c, out), DependencyError);
  CHECK_THROWS_AS(cmd_simulate(c, out), DependencyError);
  // sections the hierarchy does not depend on leave it fresh
  auto c3 = c;
  c3.dust.mass_times = 7;
  CHECK(config_snapshot("build-hierarchy", c3) == config_snapshot("build-hierarchy", c));
  fs::remove_all(out);
}

TEST_CASE("a rejected exponent pair halts at the hierarchy stage") {
  const auto out = scratch("reject");
  auto c = small_config();
  c.profile.n = 4.0;
  const auto m = cmd_build_hierarchy(c, out);
  CHECK_FALSE(m.all_pass());
  CHECK(m.results.contains("rejected"));
  bool seen = false;
  for (const auto& ch : m.checks)
    if (ch.name == "exponents") seen = !ch.pass;
  CHECK(seen);
  fs::remove_all(out);
}

TEST_CASE("pressureless pipeline and trajectory round trip") {
  const auto out = scratch("dust");
  auto c = small_config();
  cmd_build_hierarchy(c, out);
  const auto sm = cmd_simulate(c, out);
  CHECK(sm.all_pass());
  const auto cm = cmd_compare(c, out);
  CHECK(cm.all_pass());
  CHECK(cm.results["max_rel_err_t_star"].get<double>() < 1e-4);

  // the reloaded trajectory reproduces the in-memory comparison exactly
  auto gd = std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, 100.0, 1.0));
  HydroConfig hc = c.simulate.hydro;
  const auto rp = sample_profile(*gd, hc.intervals);
  const auto tr = run(gd, hc, nullptr, geometric_grid(1e-4, 1.0, 10));
  std::vector<std::string> files;
  const auto dir = out / "roundtrip";
  write_trajectory(tr, *gd, dir, "", files);
  CHECK(files.size() == 6);
  const auto back = load_trajectory(dir, rp);
  const auto a = compare_to_dust(tr, *gd), b = compare_to_dust(back, *gd);
  CHECK(a.max_rel_err_chi == b.max_rel_err_chi);
  CHECK(a.max_rel_err_t_star == b.max_rel_err_t_star);
  CHECK(a.dev_chi == b.dev_chi);
  CHECK(back.frames.size() == tr.frames.size());
  CHECK(back.events.size() == tr.events.size());
  CHECK(back.cfg.intervals == hc.intervals);
  fs::remove_all(out);
}

TEST_CASE("suite output is reproducible") {
  auto c = small_config();
  c.suite.eps_runs = {0.0, 1e-4};
  const auto o1 = scratch("suite1"), o2 = scratch("suite2");
  const auto m1 = cmd_suite(c, o1);
  const auto m2 = cmd_suite(c, o2);
  REQUIRE(m1.checks.size() == m2.checks.size());
  for (std::size_t i = 0; i < m1.checks.size(); ++i) {
    CHECK(m1.checks[i].name == m2.checks[i].name);
    CHECK(m1.checks[i].pass == m2.checks[i].pass);
  }
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(o1)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), o1);
    REQUIRE(fs::exists(o2 / rel));
    CHECK(file_hash(e.path()) == file_hash(o2 / rel));
    ++compared;
  }
  CHECK(compared > 20);
  CHECK(fs::exists(o1 / simulate_dir(1e-4) / "tuned" / "slices.csv"));
  fs::remove_all(o1);
  fs::remove_all(o2);
}
