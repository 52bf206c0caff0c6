#pragma once

// Run configuration as JSON. Every key has a default; unknown keys are rejected so
// that typos surface instead of silently running the defaults.

#include <string>
#include <vector>

#include <json.hpp>

#include "collapse/hydro.hpp"
#include "collapse/profiles.hpp"

namespace collapse {

struct ValidationSection {
  int nr = 0;  // 0 selects max(2000, 200 n)
  double identity_tol = 1e-8;
  // operator identities on the sampled profile
  std::vector<int> adjoint_grids{200, 400, 800};
  double adjoint_tol = 1e-6;
  int chain_grid = 400;
  double chain_tol = 1e-5;
};

struct DustSection {
  std::vector<double> labels{0.0, 0.25, 0.5, 0.75, 1.0};
  double exponent_tol = 0.01;
  // local exponent fit over dust-tau in [tau_lo, tau_hi]
  double exponent_tau_lo = 1e-6, exponent_tau_hi = 1e-3;
  double ode_ds = 1e-3;
  double ode_eta = 1e-3;
  double ode_tol = 1e-6;
  double drift_tol = 1e-10;
  double min_order = 3.95;  // measured RK4 order approaches 4 from below
  int mass_times = 20;
  double mass_tol = 1e-6;
  int density_points = 200;
};

struct HierarchySection {
  int M = 2;
  double eps = 1e-3;
  double tau_min = 1e-4;
  int per_decade = 40;
  int coarse = 40;
  int dense = 560;
  double rho_width = 30.0;
  double depth = 1e-3;
  int lemma_a = 2;
  double ode_tol = 1e-4;
  double source_tol = 1e-10;
  double gain_tau_lo = 1e-3, gain_tau_hi = 1e-1;
  double gain_tol = 0.05;
  std::vector<int> gain_j{1, 2};
  double series_tol = 1e-12;
};

struct ResidualSection {
  std::vector<int> M_list{0, 1};
  std::vector<double> eps_list{1e-3, 5e-4, 2.5e-4, 1.25e-4};
  double tau_lo = 0.0;  // 0: 10 tau_min
  double tau_hi = 0.3;
  double tol = 0.1;
};

struct SimulateSection {
  HydroConfig hydro;
  double m = 2.5;
  int energy_order = 2;
  int tune_iterations = 3;
  double chi_tol = 1e-5;       // eps = 0: chi against chi_dust
  double t_star_tol = 1e-4;    // eps = 0: collapse times against 1/g
  double s_limit_fraction = 0.9;
  double ratio_band = 10.0;    // ratios within 1 +- band eps at tau = 1
  double energy_drift_tol = 1e-5;
  double mass_tol = 1e-6;
};

struct SuiteSection {
  std::vector<double> eps_runs{0.0, 1e-3};
};

struct Config {
  ProfileSpec profile;
  int threads = 0;
  std::string out_dir = "out";
  ValidationSection validation;
  DustSection dust;
  HierarchySection hierarchy;
  ResidualSection residual;
  SimulateSection simulate;
  SuiteSection suite;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ValidationSection, nr, identity_tol, adjoint_grids, adjoint_tol,
                                                chain_grid, chain_tol)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DustSection, labels, exponent_tol, exponent_tau_lo, exponent_tau_hi,
                                                ode_ds, ode_eta, ode_tol, drift_tol, min_order, mass_times, mass_tol,
                                                density_points)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HierarchySection, M, eps, tau_min, per_decade, coarse, dense,
                                                rho_width, depth, lemma_a, ode_tol, source_tol, gain_tau_lo,
                                                gain_tau_hi, gain_tol, gain_j, series_tol)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ResidualSection, M_list, eps_list, tau_lo, tau_hi, tol)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HydroConfig, intervals, eps, cfl, eta, dt_max, J_floor, chi_floor,
                                                s_end, max_steps, frame_every, chi_bound, retries)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateSection, hydro, m, energy_order, tune_iterations, chi_tol,
                                                t_star_tol, s_limit_fraction, ratio_band, energy_drift_tol, mass_tol)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SuiteSection, eps_runs)

void to_json(nlohmann::json& j, const ProfileSpec& p);
void from_json(const nlohmann::json& j, ProfileSpec& p);

nlohmann::json to_json(const Config& c);
// throws std::invalid_argument naming the offending key
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);

}  // namespace collapse
