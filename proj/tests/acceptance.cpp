// Acceptance run: the default suite twice, one PASS/FAIL line per criterion.
// Verdicts come from the tagged checks of the suite manifest; criterion 12 compares the
// two runs byte for byte. The report is also written to acceptance_report.txt.
// Exit status is 0 when the suite ran to completion, whatever the verdicts.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "collapse/commands.hpp"

using namespace collapse;
namespace fs = std::filesystem;

namespace {

const std::map<int, std::string> kTitles{
    {1, "dust blow-up exponent 2/3 at five labels"},
    {2, "dust ODE against the closed form, energy drift, order"},
    {3, "remaining mass against the Eulerian integral, monotone to 0"},
    {4, "gravity identity, g monotone, L / r^n bounds"},
    {5, "Faa di Bruno coefficients against direct series, partition counts"},
    {6, "hierarchy ODE residual and f_1 = -P[phi_0]"},
    {7, "gain slopes of the iterates"},
    {8, "residual scaling in eps and tau"},
    {9, "adjoint identity and D-chain identity"},
    {10, "hydro dust limit at eps = 0"},
    {11, "qualitative suite at eps = 1e-3"},
    {12, "suite determinism"},
};

struct Verdict {
  bool pass = true;
  int checks = 0;
  std::vector<std::string> details;
};

std::pair<bool, std::string> same_outputs(const fs::path& a, const fs::path& b, const Manifest& ma, const Manifest& mb) {
  std::size_t files = 0, csv = 0;
  std::vector<std::string> diff;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    ++files;
    if (rel.extension() == ".csv") ++csv;
    if (!fs::exists(b / rel) || file_hash(e.path()) != file_hash(b / rel)) diff.push_back(rel.generic_string());
  }
  bool verdicts = ma.checks.size() == mb.checks.size();
  for (std::size_t i = 0; verdicts && i < ma.checks.size(); ++i)
    verdicts = ma.checks[i].name == mb.checks[i].name && ma.checks[i].pass == mb.checks[i].pass;
  std::ostringstream os;
  os << files << " files (" << csv << " CSV) compared, " << diff.size() << " differ";
  if (!diff.empty()) os << " (first: " << diff.front() << ")";
  os << "; " << ma.checks.size() << " verdicts " << (verdicts ? "identical" : "differ");
  return {diff.empty() && verdicts && files > 0, os.str()};
}

}  // namespace

int main() {
  const fs::path root = fs::current_path() / "acceptance_out";
  fs::remove_all(root);
  const Config cfg;
  Manifest m1, m2;
  double seconds = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    m1 = cmd_suite(cfg, root / "run1");
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m2 = cmd_suite(cfg, root / "run2");
  } catch (const std::exception& e) {
    std::cerr << "acceptance: suite aborted: " << e.what() << '\n';
    return 2;
  }

  std::map<int, Verdict> v;
  for (const auto& c : m1.checks) {
    if (c.criterion == 0) continue;
    auto& x = v[c.criterion];
    x.pass = x.pass && c.pass;
    ++x.checks;
    x.details.push_back(c.name + ": " + c.detail);
  }
  const auto [same, same_detail] = same_outputs(root / "run1", root / "run2", m1, m2);
  v[12].pass = same;
  v[12].checks = 1;
  v[12].details.push_back(same_detail);

  std::ostringstream report;
  int passed = 0;
  for (const auto& [k, title] : kTitles) {
    const auto it = v.find(k);
    const bool pass = it != v.end() && it->second.checks > 0 && it->second.pass;
    passed += pass;
    report << "CRITERION " << k << " " << (pass ? "PASS" : "FAIL") << " " << title << " | ";
    if (it == v.end()) report << "no check reported";
    else
      for (std::size_t i = 0; i < it->second.details.size(); ++i) report << (i ? " | " : "") << it->second.details[i];
    report << '\n';
  }
  std::vector<std::string> monitors;
  for (const auto& c : m1.checks)
    if (c.criterion == 0 && !c.pass) monitors.push_back(c.name + ": " + c.detail);
  report << "SUMMARY " << passed << "/" << kTitles.size() << " criteria pass; one suite run took " << seconds << " s\n";
  for (const auto& s : monitors) report << "MONITOR FAIL " << s << '\n';

  std::cout << report.str();
  std::ofstream("acceptance_report.txt") << report.str();
  return 0;
}
