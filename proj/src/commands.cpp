#include "collapse/commands.hpp"

#include <algorithm>
#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "collapse/dust.hpp"
#include "collapse/fields.hpp"
#include "collapse/fit.hpp"
#include "collapse/hierarchy.hpp"
#include "collapse/residual.hpp"
#include "collapse/series.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace collapse {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string brief(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// JSON numbers: NaN and inf are not representable, store them as null
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }
  void row(std::initializer_list<double> v) {
    bool first = true;
    for (double x : v) {
      out_ << (first ? "" : ",") << fmt(x);
      first = false;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing artifact " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      row.push_back(std::strtod(line.c_str() + pos, nullptr));
      pos = end + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing artifact " + path.string());
  return json::parse(in);
}

json versions() {
  return {{"collapse", kVersion},
          {"compiler", __VERSION__},
          {"boost", BOOST_LIB_VERSION},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

void log(const std::string& msg) { std::clog << "[collapse] " << msg << std::endl; }

// Collects files and checks for one command directory
struct Output {
  fs::path dir;
  Manifest m;

  Output(const fs::path& d, const std::string& command, json snapshot) : dir(d) {
    fs::create_directories(dir);
    m.command = command;
    m.config = std::move(snapshot);
    m.versions = versions();
  }
  fs::path file(const std::string& name) {
    m.files.push_back(name);
    fs::create_directories((dir / name).parent_path());
    return dir / name;
  }
  void check(std::string name, int criterion, bool pass, std::string detail) {
    log(m.command + ": " + name + (pass ? " PASS " : " FAIL ") + detail);
    m.checks.push_back({std::move(name), criterion, pass, std::move(detail)});
  }
  void depend(const std::string& command, const fs::path& manifest_dir) {
    m.depends.push_back({{"command", command},
                         {"path", fs::relative(manifest_dir / "manifest.json", dir).generic_string()},
                         {"hash", file_hash(manifest_dir / "manifest.json")}});
  }
  Manifest finish() {
    for (const auto& f : m.files) m.hashes[f] = file_hash(dir / f);
    write_json(dir / "manifest.json", manifest_to_json(m));
    return m;
  }
};

std::shared_ptr<GravityData> gravity(const Config& c) {
  return std::make_shared<GravityData>(std::shared_ptr<const EnthalpyProfile>(make_profile(c.profile)));
}

HierarchyGrid hierarchy_grid(const Config& c) {
  const auto& h = c.hierarchy;
  return default_grid(c.profile.n, h.tau_min, h.per_decade, h.coarse, h.dense, h.rho_width);
}

HierarchyOptions hierarchy_options(const Config& c) {
  HierarchyOptions o;
  o.threads = c.threads;
  o.depth = c.hierarchy.depth;
  return o;
}

ExpansionParams expansion(const Config& c, double eps) {
  return exponents(c.profile.gamma, c.profile.n, c.hierarchy.M, eps, c.hierarchy.lemma_a);
}

double odd_bump(double r) { return r < 1.0 ? r * std::exp(-1.0 / (1.0 - r * r)) : 0.0; }
double odd_bump2(double r) { return r < 1.0 ? r * r * r * std::exp(-1.0 / (1.0 - r * r)) * (1.0 + r * r) : 0.0; }

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

}  // namespace

bool Manifest::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

json manifest_to_json(const Manifest& m) {
  json checks = json::array();
  for (const auto& c : m.checks)
    checks.push_back({{"name", c.name}, {"criterion", c.criterion}, {"pass", c.pass}, {"detail", c.detail}});
  json hashes = json::object();
  for (const auto& [f, h] : m.hashes) hashes[f] = h;
  return {{"command", m.command}, {"config", m.config}, {"versions", m.versions}, {"checks", checks},
          {"all_pass", m.all_pass()}, {"results", m.results}, {"files", m.files}, {"hashes", hashes},
          {"depends", m.depends}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.versions = j.value("versions", json::object());
  for (const auto& c : j.at("checks"))
    m.checks.push_back({c.at("name").get<std::string>(), c.value("criterion", 0), c.at("pass").get<bool>(),
                        c.value("detail", std::string())});
  m.results = j.value("results", json::object());
  m.files = j.at("files").get<std::vector<std::string>>();
  for (const auto& [f, h] : j.at("hashes").items()) m.hashes[f] = h.get<std::string>();
  m.depends = j.value("depends", json::array());
  return m;
}

Manifest read_manifest(const fs::path& dir) {
  try {
    return manifest_from_json(read_json(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DependencyError("unreadable manifest in " + dir.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DependencyError("missing artifact " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

Manifest require_fresh(const fs::path& dir, const std::string& command, const json& snapshot) {
  if (!fs::exists(dir / "manifest.json"))
    throw DependencyError("missing dependency: run " + command + " into " + dir.string() + " first");
  auto m = read_manifest(dir);
  if (m.command != command) throw DependencyError(dir.string() + " holds " + m.command + ", expected " + command);
  if (m.config != snapshot)
    throw DependencyError("stale dependency: " + command + " in " + dir.string() + " was run with a different config");
  for (const auto& f : m.files) {
    const auto it = m.hashes.find(f);
    if (it == m.hashes.end() || !fs::exists(dir / f) || file_hash(dir / f) != it->second)
      throw DependencyError("stale dependency: " + (dir / f).string() + " changed since " + command + " ran");
  }
  return m;
}

json config_snapshot(const std::string& command, const Config& c) {
  const json all = to_json(c);
  json s = {{"profile", all["profile"]}};
  if (command == "validate-profile") s["validation"] = all["validation"];
  else if (command == "dust") s["dust"] = all["dust"];
  else if (command == "build-hierarchy") s["hierarchy"] = all["hierarchy"];
  else if (command == "residual-scan") {
    s["hierarchy"] = all["hierarchy"];
    s["residual"] = all["residual"];
  } else if (command == "simulate" || command == "compare") {
    s["hierarchy"] = all["hierarchy"];
    s["simulate"] = all["simulate"];
  } else {
    s = all;
    s.erase("threads");
    s.erase("out_dir");
  }
  return s;
}

std::string simulate_dir(double eps) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "simulate_eps%g", eps);
  return buf;
}

// ---------------------------------------------------------------- validate-profile

Manifest cmd_validate_profile(const Config& c, const fs::path& out) {
  Output o(out / "validate-profile", "validate-profile", config_snapshot("validate-profile", c));
  const auto gd = gravity(c);
  ValidationOptions vo;
  vo.nr = c.validation.nr;
  vo.identity_tol = c.validation.identity_tol;
  const auto rep = validate_profile(*gd, vo);
  for (const auto& ch : rep.checks) {
    const bool crit4 = ch.name == "g_monotone" || ch.name == "L_bounds" || ch.name == "gravity_identity";
    o.check(ch.name, crit4 ? 4 : 0, ch.pass, ch.detail);
  }
  o.m.results["c1"] = num(rep.c1);
  o.m.results["c2"] = num(rep.c2);
  o.m.results["identity_residual"] = num(rep.identity_residual);
  o.m.results["taylor_exponent"] = num(rep.taylor_exponent);
  o.m.results["L_at_one"] = num(rep.L_at_one);

  {
    Csv csv(o.file("profile.csv"), {"r", "w", "w_alpha", "G", "g", "L"});
    const auto rp = sample_profile(*gd, 1000);
    for (std::size_t k = 0; k < rp.r.size(); ++k)
      csv.row({rp.r[k], rp.w[k], rp.w_alpha[k], rp.G[k], rp.g[k], rp.L[k]});
  }

  // (f, L_k h)_k = (D_r f, D_r h)_{1+k} for compactly supported odd f, h
  std::vector<double> defects;
  {
    Csv csv(o.file("adjoint.csv"), {"intervals", "k_offset", "defect"});
    for (int N : c.validation.adjoint_grids) {
      const auto rp = sample_profile(*gd, N);
      std::vector<double> f(N + 1), h(N + 1);
      for (int i = 0; i <= N; ++i) {
        f[i] = odd_bump(rp.r[i]);
        h[i] = odd_bump2(rp.r[i]);
      }
      double worst = 0.0;
      for (int i = 0; i <= 2; ++i) {
        const double d = adjoint_defect(rp.alpha + i, f, h, rp);
        csv.row({static_cast<double>(N), static_cast<double>(i), d});
        worst = std::max(worst, d);
      }
      defects.push_back(worst);
    }
  }
  if (defects.size() >= 2) {
    const std::size_t L = defects.size();
    const double ratio = static_cast<double>(c.validation.adjoint_grids[L - 1]) / c.validation.adjoint_grids[L - 2];
    const double order = std::log(defects[L - 2] / defects[L - 1]) / std::log(ratio);
    o.m.results["adjoint_defects"] = num_array(defects);
    o.m.results["adjoint_order"] = num(order);
    o.check("adjoint_identity", 9, defects.back() < c.validation.adjoint_tol && order > 3.5,
            "relative defect " + brief(defects.back()) + " at N = " + std::to_string(c.validation.adjoint_grids.back()) +
                ", observed order " + brief(order) + " (need < " + brief(c.validation.adjoint_tol) + ", order > 3.5)");
  } else {
    o.check("adjoint_identity", 9, false, "needs at least two grids for a convergence order");
  }

  // D_j X = r d_r Dbar_{j-1}(X / r) + (j + 2) Dbar_{j-1}(X / r)
  {
    const int N = c.validation.chain_grid;
    auto defect = [](int n, int j) {
      std::vector<double> X(n + 1);
      for (int i = 0; i <= n; ++i) {
        const double r = static_cast<double>(i) / n;
        X[i] = r * std::exp(-r * r);
      }
      return dchain_identity_defect(j, X, 1.0 / n);
    };
    double worst = 0.0;
    bool shrinks = true;
    json per_j = json::array();
    for (int j = 1; j <= 3; ++j) {
      const double d = defect(N, j), dc = defect(N / 2, j);
      worst = std::max(worst, d);
      if (!(d < dc)) shrinks = false;
      per_j.push_back({{"j", j}, {"defect", num(d)}, {"defect_half_grid", num(dc)}});
    }
    o.m.results["chain_identity"] = per_j;
    o.check("chain_identity", 9, worst < c.validation.chain_tol && shrinks,
            "max relative defect " + brief(worst) + " for j <= 3 at N = " + std::to_string(N) +
                (shrinks ? ", shrinking under refinement" : ", not shrinking under refinement"));
  }
  return o.finish();
}

// ---------------------------------------------------------------- dust

Manifest cmd_dust(const Config& c, const fs::path& out) {
  Output o(out / "dust", "dust", config_snapshot("dust", c));
  const auto gd = gravity(c);
  const auto& d = c.dust;

  // blow-up exponent of the integrated zero-energy trajectory near t*(r)
  {
    Csv csv(o.file("trajectories.csv"), {"r", "s", "chi", "chi_s", "energy", "chi_closed_form"});
    json fits = json::array();
    bool all = true;
    double worst = 0.0;
    double err_max = 0.0, drift_max = 0.0;
    bool floors = true;
    for (double r : d.labels) {
      const double G = gd->G(r), g = gd->g(r);
      DustOdeOptions opt;
      opt.ds = d.ode_ds;
      opt.eta = d.ode_eta;
      const auto tr = integrate_dust_ode(G, 1.0, -std::sqrt(2.0 * G), opt);
      floors = floors && tr.reached_floor && !tr.step_failure;
      std::vector<double> x, y;
      for (std::size_t i = 0; i < tr.points.size(); ++i) {
        const auto& p = tr.points[i];
        const double tau = 1.0 - g * p.s;
        const double ref = tau > 0.0 ? std::cbrt(tau * tau) : kNaN;
        if (i % 20 == 0 || i + 1 == tr.points.size()) csv.row({r, p.s, p.chi, p.chi_s, p.energy, ref});
        if (tau >= d.exponent_tau_lo) err_max = std::max(err_max, std::abs(p.chi / ref - 1.0));
        if (tau >= d.exponent_tau_lo && tau <= d.exponent_tau_hi) {
          x.push_back(1.0 / g - p.s);
          y.push_back(p.chi);
        }
      }
      drift_max = std::max(drift_max, tr.max_energy_drift);
      const auto f = fit_power_law(x, y);
      const double dev = std::abs(f.slope - 0.667);
      worst = std::max(worst, dev);
      all = all && f.points >= 10 && dev <= d.exponent_tol;
      fits.push_back({{"r", r}, {"slope", num(f.slope)}, {"points", f.points}, {"t_star_estimate", num(tr.collapse_estimate)},
                      {"t_star", num(1.0 / g)}});
    }
    o.m.results["exponent_fits"] = fits;
    std::ostringstream det;
    det << "slopes";
    for (const auto& f : fits) det << " " << brief(f["slope"].get<double>());
    det << " over dust-tau in [" << brief(d.exponent_tau_lo) << ", " << brief(d.exponent_tau_hi) << "], max |slope - 0.667| "
        << brief(worst);
    o.check("blowup_exponent", 1, all, det.str());

    // convergence order under step halving on a window every step size divides
    const double r_ord = 0.5, G = gd->G(r_ord), g = gd->g(r_ord);
    const double s_end = 2e-3 * std::floor(0.9 / g / 2e-3);
    auto end_err = [&](double ds) {
      DustOdeOptions opt;
      opt.adaptive = false;
      opt.ds = ds;
      opt.s_end = s_end;
      const auto tr = integrate_dust_ode(G, 1.0, -std::sqrt(2.0 * G), opt);
      const auto& p = tr.points.back();
      return std::abs(p.chi / std::pow(1.0 - g * p.s, 2.0 / 3.0) - 1.0);
    };
    const double e1 = end_err(2e-3), e2 = end_err(1e-3), e3 = end_err(5e-4);
    const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
    o.m.results["ode_max_rel_err"] = num(err_max);
    o.m.results["ode_energy_drift"] = num(drift_max);
    o.m.results["ode_order"] = num(order);
    o.check("ode_fidelity", 2, floors && err_max < d.ode_tol && drift_max < d.drift_tol && order >= d.min_order,
            "max rel err " + brief(err_max) + " (dust-tau >= " + brief(d.exponent_tau_lo) + "), energy drift " +
                brief(drift_max) + ", order " + brief(order) + " under step halving");
  }

  // remaining mass against the Eulerian integral of the dust density
  {
    const double s0 = 1.0 / gd->g0(), s1 = 1.0 / gd->g1();
    Csv csv(o.file("mass.csv"), {"s", "mass_formula", "mass_eulerian", "rel_err"});
    double worst = 0.0;
    std::vector<double> M;
    for (int i = 0; i < d.mass_times; ++i) {
      const double s = s0 + (s1 - s0) * (i + 0.5) / d.mass_times;
      const double mf = mass_remaining(*gd, s), me = eulerian_mass_dust(*gd, s);
      const double e = mf > 0.0 ? std::abs(me / mf - 1.0) : std::abs(me);
      worst = std::max(worst, e);
      M.push_back(mf);
      csv.row({s, mf, me, e});
    }
    const double end_mass = mass_remaining(*gd, s1);
    const bool mono = non_increasing(M) && M.front() <= gd->mass_total() && end_mass == 0.0;
    o.m.results["mass_max_rel_err"] = num(worst);
    o.check("mass_bookkeeping", 3, worst < d.mass_tol && mono,
            "max rel err " + brief(worst) + " over " + std::to_string(d.mass_times) + " times in (1/g(0), 1/g(1)), M " +
                (mono ? "monotone to 0" : "not monotone to 0"));

    Csv dens(o.file("density.csv"), {"s", "R", "rho"});
    for (double frac : {0.0, 0.5, 0.9}) {
      const double s = frac * s0;
      const double Rmax = dust_support(*gd, s);
      for (int i = 1; i <= d.density_points; ++i) {
        const double R = Rmax * i / d.density_points;
        const auto rho = eulerian_density_dust(*gd, s, R);
        dens.row({s, R, rho ? *rho : kNaN});
      }
    }
  }
  return o.finish();
}

// ---------------------------------------------------------------- build-hierarchy

Manifest cmd_build_hierarchy(const Config& c, const fs::path& out) {
  Output o(out / "hierarchy", "build-hierarchy", config_snapshot("build-hierarchy", c));
  const auto& hc = c.hierarchy;

  const auto so = series_oracle(c.profile.gamma, 4, 8);
  o.m.results["series_oracle"] = {{"max_err_F", num(so.max_err_F)}, {"max_err_h", num(so.max_err_h)},
                                  {"partitions_match", so.partitions_match}};
  o.check("series_oracle", 5, so.pass(hc.series_tol),
          "F_j err " + brief(so.max_err_F) + ", h_j err " + brief(so.max_err_h) + " for j <= 4; partition counts " +
              (so.partitions_match ? "match" : "differ") + " for n <= 8");

  ExpansionParams p;
  try {
    p = expansion(c, hc.eps);
  } catch (const ExponentError& e) {
    o.m.results["rejected"] = e.inequality();
    o.check("exponents", 0, false, e.what());
    return o.finish();
  }
  o.m.results["exponents"] = {{"alpha", p.alpha}, {"N", p.N}, {"delta", p.delta}, {"delta_star", p.delta_star},
                              {"lambda", p.lambda}, {"j_switch", p.j_switch}, {"M_full", p.M_full}};
  log("build-hierarchy: solving M = " + std::to_string(hc.M));
  const Hierarchy h(gravity(c), p, hierarchy_grid(c), hierarchy_options(c));

  for (int j = 1; j <= hc.M; ++j) h.field(j).write_csv(o.file("phi_" + std::to_string(j) + ".csv").string());

  // iterate ODE residuals and f_1 = -P[phi_0]
  {
    double worst = 0.0;
    json res = json::array();
    for (int j = 1; j <= std::min(2, hc.M); ++j) {
      const auto r = ode_residual(h, j);
      worst = std::max(worst, r.max_relative);
      res.push_back({{"j", j}, {"max_relative", num(r.max_relative)}, {"at_tau", r.at_tau}, {"at_r", r.at_r}});
    }
    double src = 0.0;
    for (std::size_t it = 0; it < h.nt(); ++it)
      for (std::size_t ir = 0; ir < h.nr(); ++ir) {
        const double ref = -pressure_phi0(h.gravity(), h.grid().tau[it], h.grid().r[ir]);
        src = std::max(src, std::abs(h.source(1, it, ir) - ref) / std::max(1.0, std::abs(ref)));
      }
    o.m.results["ode_residual"] = res;
    o.m.results["f1_vs_pressure"] = num(src);
    o.check("hierarchy_ode", 6, hc.M >= 2 && worst < hc.ode_tol && src < hc.source_tol,
            "max relative ODE residual " + brief(worst) + " for j in {1, 2}; max |f_1 + P[phi_0]| " + brief(src));
  }

  // gain envelopes
  {
    json reports = json::array();
    bool all = true;
    std::ostringstream det;
    Csv csv(o.file("gain_envelopes.csv"), {"j", "tau", "envelope", "envelope_dtau"});
    for (int j : hc.gain_j) {
      if (j < 1 || j > hc.M) continue;
      const auto g = verify_gain(h, j, hc.gain_tau_lo, hc.gain_tau_hi, hc.gain_tol);
      for (std::size_t i = 0; i < g.tau.size(); ++i) csv.row({static_cast<double>(j), g.tau[i], g.envelope[i], g.envelope_dtau[i]});
      reports.push_back({{"j", j}, {"fitted_slope", num(g.fitted_slope)}, {"expected_slope", g.expected_slope},
                         {"pass", g.pass}});
      all = all && g.pass;
      det << "j=" << j << " slope " << brief(g.fitted_slope) << " vs " << brief(g.expected_slope) << "; ";
    }
    write_json(o.file("gain_report.json"), reports);
    o.m.results["gain"] = reports;
    det << "tolerance " << brief(hc.gain_tol) << " over tau in [" << brief(hc.gain_tau_lo) << ", " << brief(hc.gain_tau_hi)
        << "]";
    o.check("gain", 7, all && !reports.empty(), det.str());
  }
  return o.finish();
}

// ---------------------------------------------------------------- residual-scan

Manifest cmd_residual_scan(const Config& c, const fs::path& out) {
  Output o(out / "residual", "residual-scan", config_snapshot("residual-scan", c));
  const fs::path hdir = out / "hierarchy";
  require_fresh(hdir, "build-hierarchy", config_snapshot("build-hierarchy", c));
  o.depend("build-hierarchy", hdir);

  const auto& rc = c.residual;
  const int Mmax = *std::max_element(rc.M_list.begin(), rc.M_list.end());
  const Hierarchy h(gravity(c), expansion(c, c.hierarchy.eps), hierarchy_grid(c), hierarchy_options(c));
  if (Mmax > h.M()) throw std::invalid_argument("residual.M_list exceeds hierarchy.M");
  std::vector<double> eps_pos;
  for (double e : rc.eps_list)
    if (e > 0.0) eps_pos.push_back(e);
  const auto scan = scaling_study(h, rc.M_list, eps_pos, rc.tau_lo, rc.tau_hi, rc.tol);

  {
    Csv csv(o.file("norms.csv"), {"M", "eps", "tau", "sup", "weighted"});
    for (const auto& e : scan.entries)
      for (std::size_t i = 0; i < e.norms.tau.size(); ++i)
        csv.row({static_cast<double>(e.M), e.eps, e.norms.tau[i], e.norms.sup[i], e.norms.weighted[i]});
  }
  // the criterion is stated in the weighted norm; sup-norm slopes are reported alongside
  auto weighted_pass = [&](const ScanSummary& s) {
    return s.eps_pass && std::abs(s.tau_slope_weighted - s.expected_tau_slope) <= rc.tol;
  };
  json report = json::array();
  bool all = !scan.summary.empty(), agree = true;
  std::ostringstream det;
  for (const auto& s : scan.summary) {
    report.push_back({{"M", s.M}, {"eps_slope", num(s.eps_slope_weighted)}, {"eps_slope_sup", num(s.eps_slope_sup)},
                      {"expected_eps_slope", s.expected_eps_slope}, {"tau_slope", num(s.tau_slope_weighted)},
                      {"tau_slope_sup", num(s.tau_slope_sup)}, {"expected_tau_slope", s.expected_tau_slope},
                      {"norms_agree", s.norms_agree}, {"pass", weighted_pass(s)}});
    all = all && weighted_pass(s);
    agree = agree && s.norms_agree;
    det << "M=" << s.M << " eps-slope " << brief(s.eps_slope_weighted) << " vs " << brief(s.expected_eps_slope)
        << ", tau-slope " << brief(s.tau_slope_weighted) << " vs " << brief(s.expected_tau_slope) << " (sup norm "
        << brief(s.eps_slope_sup) << ", " << brief(s.tau_slope_sup) << "); ";
  }
  det << "weighted norm, tau in [" << brief(scan.tau_lo) << ", " << brief(scan.tau_hi) << "]";
  write_json(o.file("report.json"), {{"eps", rc.eps_list}, {"entries", report}});
  o.m.results["scan"] = report;
  o.check("residual_scaling", 8, all, det.str());
  o.check("norms_agree", 0, agree, "sup and weighted tau-slopes within 0.05 for every M");
  return o.finish();
}

// ---------------------------------------------------------------- trajectories on disk

void write_trajectory(const Trajectory& tr, const GravityData& gd, const fs::path& root, const std::string& subdir,
                      std::vector<std::string>& files) {
  const fs::path dir = subdir.empty() ? root : root / subdir;
  fs::create_directories(dir);
  const auto& rp = tr.rp;
  const std::size_t n = rp.r.size();
  auto add_rel = [&](const std::string& name) {
    files.push_back(subdir.empty() ? name : subdir + "/" + name);
    return dir / name;
  };
  {
    Csv csv(add_rel("init.csv"), {"k", "r", "chi0", "chi1"});
    for (std::size_t k = 0; k < n; ++k) csv.row({static_cast<double>(k), rp.r[k], tr.chi0[k], tr.chi1[k]});
  }
  {
    Csv csv(add_rel("frames.csv"), {"frame", "s", "lo", "k", "r", "chi", "chi_s", "J", "chi_over_dust", "J_over_dust"});
    for (std::size_t f = 0; f < tr.frames.size(); ++f) {
      const auto& fr = tr.frames[f];
      for (std::size_t k = 0; k < n; ++k) {
        const auto cd = chi_dust(gd, fr.s, rp.r[k]);
        const auto jd = jacobian_dust(gd, fr.s, rp.r[k]);
        csv.row({static_cast<double>(f), fr.s, static_cast<double>(fr.lo), static_cast<double>(k), rp.r[k], fr.chi[k],
                 fr.chi_s[k], fr.J[k], cd ? fr.chi[k] / *cd : kNaN, jd ? fr.J[k] / *jd : kNaN});
      }
    }
  }
  {
    const auto& sl = tr.slices;
    Csv csv(add_rel("slices.csv"), {"it", "tau", "k", "r", "chi", "chi_s", "rchi_r", "J"});
    for (std::size_t it = 0; it < sl.tau.size(); ++it)
      for (std::size_t k = 0; k < sl.nr; ++k) {
        const std::size_t i = sl.index(it, k);
        csv.row({static_cast<double>(it), sl.tau[it], static_cast<double>(k), rp.r[k], sl.chi[i], sl.chi_s[i],
                 sl.rchi_r[i], sl.J[i]});
      }
  }
  {
    Csv csv(add_rel("events.csv"), {"k", "r", "s", "t_star", "t_star_dust", "J", "chi", "forced"});
    for (const auto& e : tr.events)
      csv.row({static_cast<double>(e.k), e.r, e.s, e.t_star, e.t_star_dust, e.J, e.chi, e.forced ? 1.0 : 0.0});
  }
  {
    Csv csv(add_rel("energy.csv"), {"s", "kinetic", "internal", "gravitational", "total"});
    for (const auto& e : tr.energy) csv.row({e.s, e.kinetic, e.internal, e.gravitational, e.total()});
  }
  json run = {{"hydro", tr.cfg},
              {"max_label_energy_drift", num(tr.max_label_energy_drift)},
              {"max_energy_drift", num(tr.max_energy_drift)},
              {"steps", tr.steps},
              {"rejected", tr.rejected},
              {"s_final", num(tr.s_final)},
              {"halted", tr.halted},
              {"message", tr.message}};
  write_json(add_rel("run.json"), run);
}

Trajectory load_trajectory(const fs::path& dir, const RadialProfile& rp) {
  Trajectory tr;
  const json run = read_json(dir / "run.json");
  tr.cfg = config_from_json({{"simulate", {{"hydro", run.at("hydro")}}}}).simulate.hydro;
  tr.rp = rp;
  const std::size_t n = rp.r.size();
  if (tr.cfg.intervals + 1 != static_cast<int>(n)) throw DependencyError("trajectory grid does not match the profile");
  auto num_or_nan = [](const json& v) { return v.is_null() ? kNaN : v.get<double>(); };
  tr.max_label_energy_drift = num_or_nan(run.at("max_label_energy_drift"));
  tr.max_energy_drift = num_or_nan(run.at("max_energy_drift"));
  tr.steps = run.at("steps").get<long>();
  tr.rejected = run.at("rejected").get<long>();
  tr.s_final = num_or_nan(run.at("s_final"));
  tr.halted = run.at("halted").get<bool>();
  tr.message = run.at("message").get<std::string>();

  for (const auto& row : read_csv(dir / "init.csv")) {
    tr.chi0.push_back(row.at(2));
    tr.chi1.push_back(row.at(3));
  }
  for (const auto& row : read_csv(dir / "frames.csv")) {
    const auto f = static_cast<std::size_t>(row.at(0));
    if (f == tr.frames.size()) {
      Frame fr;
      fr.s = row.at(1);
      fr.lo = static_cast<std::size_t>(row.at(2));
      tr.frames.push_back(std::move(fr));
    }
    auto& fr = tr.frames.back();
    fr.chi.push_back(row.at(5));
    fr.chi_s.push_back(row.at(6));
    fr.J.push_back(row.at(7));
  }
  auto& sl = tr.slices;
  sl.nr = n;
  for (const auto& row : read_csv(dir / "slices.csv")) {
    if (static_cast<std::size_t>(row.at(0)) == sl.tau.size()) sl.tau.push_back(row.at(1));
    sl.chi.push_back(row.at(4));
    sl.chi_s.push_back(row.at(5));
    sl.rchi_r.push_back(row.at(6));
    sl.J.push_back(row.at(7));
  }
  for (const auto& row : read_csv(dir / "events.csv")) {
    CollapseEvent e;
    e.k = static_cast<std::size_t>(row.at(0));
    e.r = row.at(1);
    e.s = row.at(2);
    e.t_star = row.at(3);
    e.t_star_dust = row.at(4);
    e.J = row.at(5);
    e.chi = row.at(6);
    e.forced = row.at(7) != 0.0;
    tr.events.push_back(e);
  }
  for (const auto& row : read_csv(dir / "energy.csv")) tr.energy.push_back({row.at(0), row.at(1), row.at(2), row.at(3)});
  if (tr.chi0.size() != n || sl.chi.size() != sl.tau.size() * n) throw DependencyError("truncated trajectory in " + dir.string());
  return tr;
}

// ---------------------------------------------------------------- simulate

namespace {

Config with_eps(Config c, double eps) {
  c.simulate.hydro.eps = eps;
  return c;
}

std::unique_ptr<Hierarchy> hydro_hierarchy(const Config& c, const RadialProfile& rp) {
  const double eps = c.simulate.hydro.eps;
  return std::make_unique<Hierarchy>(gravity(c), expansion(c, eps),
                                     hydro_hierarchy_grid(rp, hierarchy_grid(c).tau), hierarchy_options(c));
}

void trajectory_monitors(Output& o, const Trajectory& tr, const std::string& tag, const Config& c) {
  const auto& sc = c.simulate;
  const double eps = tr.cfg.eps;
  o.check(tag + "completed", 0, !tr.halted, tr.halted ? tr.message : std::to_string(tr.steps) + " steps");
  if (eps == 0.0) {
    o.check(tag + "label_energy", 0, tr.max_label_energy_drift < 1e-8,
            "max per-label energy drift " + brief(tr.max_label_energy_drift));
  } else {
    o.check(tag + "energy_balance", 0, tr.max_energy_drift < sc.energy_drift_tol,
            "total energy drift " + brief(tr.max_energy_drift) + " before the first freeze");
  }
  // finite values up to the vacuum boundary on every frame
  bool finite = true;
  for (const auto& f : tr.frames)
    for (std::size_t k = f.lo; k < f.chi.size(); ++k)
      if (!std::isfinite(f.chi[k]) || !std::isfinite(f.chi_s[k]) || !std::isfinite(f.J[k])) finite = false;
  o.check(tag + "vacuum_regularity", 0, finite, finite ? "all evolved values finite" : "non-finite values in a frame");
  // density blow-up: labels freeze on the Jacobian floor or by chi collapse
  double Jmax = 0.0;
  std::size_t natural = 0;
  for (const auto& e : tr.events)
    if (!e.forced) {
      ++natural;
      Jmax = std::max(Jmax, e.J);
    }
  o.check(tag + "density_blowup", 0, natural > 0 && Jmax < 1e-6,
          std::to_string(natural) + " labels froze on their own, largest J at freeze " + brief(Jmax));
}

}  // namespace

Manifest cmd_simulate(const Config& c, const fs::path& out, const std::string& subdir) {
  Output o(out / subdir, "simulate", config_snapshot("simulate", c));
  const fs::path hdir = out / "hierarchy";
  require_fresh(hdir, "build-hierarchy", config_snapshot("build-hierarchy", c));
  o.depend("build-hierarchy", hdir);

  const auto gd = gravity(c);
  const auto& sc = c.simulate;
  const HydroConfig& hc = sc.hydro;
  const auto rp = sample_profile(*gd, hc.intervals);
  const auto tau = hierarchy_grid(c).tau;
  log("simulate: eps = " + brief(hc.eps) + ", " + std::to_string(hc.intervals) + " intervals");

  Trajectory tr;
  std::unique_ptr<Hierarchy> h;
  if (hc.eps > 0.0) {
    h = hydro_hierarchy(c, rp);
    tr = run_from(rp, hc, init_from_phi_app(h.get(), hc.eps, rp), tau);
  } else {
    tr = run_from(rp, hc, init_from_phi_app(nullptr, 0.0, rp), tau);
  }
  write_trajectory(tr, *gd, o.dir, "", o.m.files);
  trajectory_monitors(o, tr, "", c);

  // Eulerian reconstruction of every frame
  {
    Csv csv(o.file("eulerian.csv"), {"frame", "s", "R", "rho", "u", "x_phys", "rho_phys", "u_phys", "t_phys"});
    double mass_err = 0.0;
    std::string failure;
    for (std::size_t f = 0; f < tr.frames.size(); ++f) {
      // the one-sided stencils need six evolving labels
      if (tr.frames[f].lo + 6 > rp.r.size()) continue;
      try {
        const auto e = eulerian_reconstruct(tr.frames[f], rp, hc.eps);
        if (tr.frames[f].lo == 0) mass_err = std::max(mass_err, e.mass_rel_err);
        for (std::size_t i = 0; i < e.R.size(); ++i)
          csv.row({static_cast<double>(f), e.s, e.R[i], e.rho[i], e.u[i], hc.eps > 0.0 ? e.x_phys[i] : kNaN,
                   hc.eps > 0.0 ? e.rho_phys[i] : kNaN, hc.eps > 0.0 ? e.u_phys[i] : kNaN, hc.eps > 0.0 ? e.t_phys : kNaN});
      } catch (const std::runtime_error& e) {
        if (failure.empty()) failure = e.what();
      }
    }
    o.m.results["eulerian_mass_rel_err"] = num(mass_err);
    o.check("eulerian", 0, failure.empty() && mass_err < sc.mass_tol,
            failure.empty() ? "mass rel err " + brief(mass_err) + " on frames before the first freeze" : failure);
  }

  // the same data tuned onto the collapse surface
  if (h && sc.tune_iterations > 0) {
    log("simulate: tuning onto the collapse surface");
    const auto tuned = run_on_collapse_surface(gd, hc, *h, sc.tune_iterations);
    write_trajectory(tuned.trajectory, *gd, o.dir, "tuned", o.m.files);
    {
      Csv csv(o.file("tuned/shift.csv"), {"k", "r", "shift", "chi1_correction"});
      for (std::size_t k = 0; k < rp.r.size(); ++k)
        csv.row({static_cast<double>(k), rp.r[k], tuned.shift[k], tuned.chi1_correction[k]});
    }
    o.m.results["tuned_max_shift"] = num_array(tuned.max_shift);
    trajectory_monitors(o, tuned.trajectory, "tuned_", c);
  }

  o.m.results["steps"] = tr.steps;
  o.m.results["rejected"] = tr.rejected;
  o.m.results["s_final"] = num(tr.s_final);
  o.m.results["events"] = tr.events.size();
  o.m.results["max_energy_drift"] = num(tr.max_energy_drift);
  return o.finish();
}

// ---------------------------------------------------------------- compare

namespace {

struct Comparison {
  DustComparison dust, interior;
  std::optional<RemainderDiagnostics> rem;
};

Comparison compare_one(const Trajectory& tr, const GravityData& gd, const Hierarchy* h, const Config& c) {
  Comparison out;
  out.dust = compare_to_dust(tr, gd, c.simulate.s_limit_fraction);
  out.interior = compare_to_dust(tr, gd, c.simulate.s_limit_fraction, 0.9);
  if (h) out.rem = remainder_diagnostics(tr, *h, c.simulate.m, c.simulate.energy_order);
  return out;
}

void write_comparison(const Comparison& cm, Output& o, const std::string& prefix) {
  {
    Csv csv(o.file(prefix + "ratios.csv"), {"tau", "dev_chi", "dev_J", "resolved", "dev_chi_interior", "dev_J_interior"});
    const auto& d = cm.dust;
    for (std::size_t i = 0; i < d.tau.size(); ++i)
      csv.row({d.tau[i], d.dev_chi[i], d.dev_J[i], static_cast<double>(d.resolved[i]), cm.interior.dev_chi[i],
               cm.interior.dev_J[i]});
  }
  if (cm.rem) {
    const auto& r = *cm.rem;
    Csv csv(o.file(prefix + "remainder.csv"),
            {"tau", "theta_sup", "g00_min", "g00_max", "g01_max", "d2_min", "c_ratio_sup", "E", "D"});
    for (std::size_t i = 0; i < r.tau.size(); ++i)
      csv.row({r.tau[i], r.theta_sup[i], r.g00_min[i], r.g00_max[i], r.g01_max[i], r.d2_min[i], r.c_ratio_sup[i], r.E[i],
               r.D[i]});
  }
}

std::string trend_text(const DustComparison& d) {
  const auto lo = std::find(d.tau.begin(), d.tau.end(), d.trend_lo) - d.tau.begin();
  const double a = std::max(d.dev_chi[lo], d.dev_J[lo]);
  std::ostringstream os;
  os << "deviation " << brief(a) << " at tau = " << brief(d.trend_lo) << " vs " << brief(d.dev_at_one) << " at tau = 1, "
     << (d.trend_monotone ? "monotone" : "not monotone") << " over [" << brief(d.trend_lo) << ", " << brief(d.trend_hi)
     << "]";
  return os.str();
}

}  // namespace

Manifest cmd_compare(const Config& c, const fs::path& out, const std::string& subdir) {
  const fs::path sdir = out / subdir;
  Output o(sdir / "compare", "compare", config_snapshot("compare", c));
  require_fresh(sdir, "simulate", config_snapshot("simulate", c));
  o.depend("simulate", sdir);

  const auto gd = gravity(c);
  const auto& sc = c.simulate;
  const double eps = sc.hydro.eps;
  const auto rp = sample_profile(*gd, sc.hydro.intervals);
  const auto tr = load_trajectory(sdir, rp);
  std::unique_ptr<Hierarchy> h;
  if (eps > 0.0) {
    log("compare: rebuilding the hierarchy on the label grid");
    h = hydro_hierarchy(c, rp);
  }
  const auto cm = compare_one(tr, *gd, h.get(), c);
  write_comparison(cm, o, "");
  const auto& d = cm.dust;
  o.m.results["max_rel_err_chi"] = num(d.max_rel_err_chi);
  o.m.results["max_rel_err_t_star"] = num(d.max_rel_err_t_star);
  o.m.results["dev_at_one"] = num(d.dev_at_one);
  o.m.results["max_dev"] = num(d.max_dev);
  o.m.results["trend"] = {{"tau_lo", d.trend_lo}, {"tau_hi", d.trend_hi}, {"monotone", d.trend_monotone}};
  o.m.results["support_final"] = num(d.support_final);

  if (eps == 0.0) {
    o.check("dust_limit_chi", 10, d.max_rel_err_chi < sc.chi_tol,
            "max |chi / chi_dust - 1| " + brief(d.max_rel_err_chi) + " for s <= " + brief(sc.s_limit_fraction) +
                " t*(0)");
    o.check("dust_limit_collapse_times", 10, d.max_rel_err_t_star < sc.t_star_tol,
            "max |t* g - 1| " + brief(d.max_rel_err_t_star) + " over " + std::to_string(tr.events.size()) + " labels");
    o.check("support_decreasing", 0, d.support_decreasing, "final boundary chi " + brief(d.support_final));
    return o.finish();
  }

  std::optional<Comparison> tuned;
  if (fs::exists(sdir / "tuned" / "run.json")) {
    const auto tt = load_trajectory(sdir / "tuned", rp);
    tuned = compare_one(tt, *gd, h.get(), c);
    write_comparison(*tuned, o, "tuned/");
    o.m.results["tuned"] = {{"dev_at_one", num(tuned->dust.dev_at_one)},
                            {"trend", {{"tau_lo", tuned->dust.trend_lo}, {"monotone", tuned->dust.trend_monotone}}}};
  }

  const double band = sc.ratio_band * eps;
  o.check("ratios_at_tau_one", 11, d.dev_at_one <= band,
          "max |ratio - 1| " + brief(d.dev_at_one) + " at tau = 1 (band " + brief(band) + ")");
  {
    const bool pass = d.trend_monotone || (tuned && tuned->dust.trend_monotone);
    std::string det = "untuned: " + trend_text(d);
    if (tuned) det += "; tuned onto the collapse surface: " + trend_text(tuned->dust);
    det += "; labels r <= 0.9: " + trend_text(cm.interior);
    o.check("ratio_trend", 11, pass, det);
  }
  const auto& r = *cm.rem;
  const double g00_lo = *std::min_element(r.g00_min.begin(), r.g00_min.end());
  const double g00_hi = *std::max_element(r.g00_max.begin(), r.g00_max.end());
  double d2 = std::numeric_limits<double>::infinity();
  for (double v : r.d2_min)
    if (std::isfinite(v)) d2 = std::min(d2, v);
  char band_txt[96];
  std::snprintf(band_txt, sizeof band_txt, "g00 in [%.8f, %.8f], required inside (0.9, 1.1)", g00_lo, g00_hi);
  o.check("g00_band", 11, r.g00_ok, band_txt);
  o.check("d2_positive", 11, r.d2_ok, "min d^2 " + brief(d2) + " with m = " + brief(r.m));
  o.check("support_decreasing", 11, d.support_decreasing, "final boundary chi " + brief(d.support_final));
  o.check("c_weight_slope", 0, r.c_slope_ok,
          "fitted slope " + brief(r.c_slope) + " vs " + brief(r.c_slope_expected));
  o.m.results["g00"] = {num(g00_lo), num(g00_hi)};
  o.m.results["d2_min"] = num(d2);
  o.m.results["c_slope"] = num(r.c_slope);
  return o.finish();
}

// ---------------------------------------------------------------- suite

Manifest cmd_suite(const Config& c, const fs::path& out) {
  fs::create_directories(out);
  Manifest m;
  m.command = "suite";
  m.config = config_snapshot("suite", c);
  m.versions = versions();
  auto absorb = [&](const Manifest& sub, const fs::path& dir) {
    const std::string label = fs::relative(dir, out).generic_string();
    for (const auto& ch : sub.checks) m.checks.push_back({label + "/" + ch.name, ch.criterion, ch.pass, ch.detail});
    m.depends.push_back({{"command", sub.command},
                         {"path", fs::relative(dir / "manifest.json", out).generic_string()},
                         {"hash", file_hash(dir / "manifest.json")}});
  };
  absorb(cmd_validate_profile(c, out), out / "validate-profile");
  absorb(cmd_dust(c, out), out / "dust");
  const auto hm = cmd_build_hierarchy(c, out);
  absorb(hm, out / "hierarchy");
  if (hm.results.contains("rejected")) {
    write_json(out / "manifest.json", manifest_to_json(m));
    return m;
  }
  absorb(cmd_residual_scan(c, out), out / "residual");
  for (double eps : c.suite.eps_runs) {
    const auto ce = with_eps(c, eps);
    const std::string dir = simulate_dir(eps);
    absorb(cmd_simulate(ce, out, dir), out / dir);
    absorb(cmd_compare(ce, out, dir), out / dir / "compare");
  }
  write_json(out / "manifest.json", manifest_to_json(m));
  return m;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"validate-profile", "dust",    "build-hierarchy", "residual-scan",
                                              "simulate",         "compare", "suite"};
  return names;
}

Manifest run_command(const std::string& name, const Config& c, const fs::path& out) {
  if (name == "validate-profile") return cmd_validate_profile(c, out);
  if (name == "dust") return cmd_dust(c, out);
  if (name == "build-hierarchy") return cmd_build_hierarchy(c, out);
  if (name == "residual-scan") return cmd_residual_scan(c, out);
  if (name == "simulate") return cmd_simulate(c, out);
  if (name == "compare") return cmd_compare(c, out);
  if (name == "suite") return cmd_suite(c, out);
  throw std::invalid_argument("unknown command " + name);
}

}  // namespace collapse
