#pragma once

// Subcommands behind the collapse CLI. Each command writes its CSV / JSON artifacts into
// its own directory together with manifest.json: the config sections it depends on, the
// checks with verdicts, fitted numbers, and every emitted file with its content hash.
// Downstream commands refuse to run on missing or stale upstream manifests.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "collapse/config.hpp"
#include "collapse/hydro.hpp"

namespace collapse {

struct Check {
  std::string name;
  int criterion = 0;  // acceptance item, 0 for monitors
  bool pass = false;
  std::string detail;
};

struct Manifest {
  std::string command;
  nlohmann::json config;    // snapshot of the sections the output depends on
  nlohmann::json versions;
  std::vector<Check> checks;
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> files;            // relative to the manifest directory
  std::map<std::string, std::string> hashes; // file -> FNV-1a 64 hex
  nlohmann::json depends = nlohmann::json::array();  // [{command, path, hash}]
  bool all_pass() const;
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
Manifest read_manifest(const std::filesystem::path& dir);

std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& p);

class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Manifest in dir, checked against the expected command and config snapshot and against
// the current content of every listed file
Manifest require_fresh(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& snapshot);

// Config sections a command's output depends on; simulate and compare use the given eps
nlohmann::json config_snapshot(const std::string& command, const Config& c);

Manifest cmd_validate_profile(const Config& c, const std::filesystem::path& out);
Manifest cmd_dust(const Config& c, const std::filesystem::path& out);
Manifest cmd_build_hierarchy(const Config& c, const std::filesystem::path& out);
Manifest cmd_residual_scan(const Config& c, const std::filesystem::path& out);
// subdir defaults to "simulate"; the suite runs one per entry of suite.eps_runs
Manifest cmd_simulate(const Config& c, const std::filesystem::path& out, const std::string& subdir = "simulate");
Manifest cmd_compare(const Config& c, const std::filesystem::path& out, const std::string& subdir = "simulate");
Manifest cmd_suite(const Config& c, const std::filesystem::path& out);

const std::vector<std::string>& command_names();
Manifest run_command(const std::string& name, const Config& c, const std::filesystem::path& out);

// directory name used by the suite for a simulate / compare pair
std::string simulate_dir(double eps);

// Trajectory written by simulate, reloaded exactly (17 significant digits)
// files are recorded relative to root
void write_trajectory(const Trajectory& tr, const GravityData& gd, const std::filesystem::path& root,
                      const std::string& subdir, std::vector<std::string>& files);
Trajectory load_trajectory(const std::filesystem::path& dir, const RadialProfile& rp);

}  // namespace collapse
