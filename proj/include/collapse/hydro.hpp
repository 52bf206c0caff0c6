#pragma once

// Lagrangian Euler-Poisson evolution chi_ss + G / chi^2 + eps P[chi] = 0 on a uniform
// label grid, with per-label freezing at collapse, fixed-tau slices for comparison with
// the dust solution and the approximate profile, and an Eulerian reconstruction.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collapse/fields.hpp"
#include "collapse/hierarchy.hpp"
#include "collapse/profiles.hpp"

namespace collapse {

struct HydroConfig {
  int intervals = 1000;
  double eps = 1e-3;
  double cfl = 0.4;
  double eta = 0.02;      // free-fall fraction: dt <= eta (2/3) chi / |chi_s|
  double dt_max = 1e-3;
  double J_floor = 1e-8;
  double chi_floor = 1e-6;
  double s_end = 0.0;     // 0: run until every label is frozen
  long max_steps = 20'000'000;
  double frame_every = 0.02;
  double chi_bound = 10.0;  // instability detector: chi must stay below this
  int retries = 30;
};

struct SimState {
  double s = 0.0;
  std::vector<double> chi, chi_s;
  std::size_t lo = 0;  // labels below lo are frozen
};

// chi_ss on [lo, N]; nullopt when J <= 0 at an evolving label (bad_index is set)
std::optional<std::vector<double>> rhs(const SimState& st, const RadialProfile& rp, double eps,
                                       std::size_t* bad_index = nullptr, std::vector<double>* J_out = nullptr);

// chi = phi_app(1, r), chi_s = -g d_tau phi_app(1, r). The hierarchy r-grid must be the label
// grid without r = 0, where all corrections vanish. Without a hierarchy: the dust data.
SimState init_from_phi_app(const Hierarchy* h, double eps, const RadialProfile& rp);

// label grid without the axis, in the form the hierarchy expects
HierarchyGrid hydro_hierarchy_grid(const RadialProfile& rp, std::vector<double> tau);

struct CollapseEvent {
  std::size_t k = 0;
  double r = 0.0;
  double s = 0.0;           // freeze time
  double t_star = 0.0;      // s - (2/3) chi / chi_s
  double t_star_dust = 0.0; // 1 / g(r)
  double J = 0.0;
  double chi = 0.0;
  bool forced = false;      // frozen because an outer label froze
};

struct Frame {
  double s = 0.0;
  std::vector<double> chi, chi_s, J;
  std::size_t lo = 0;
};

// Values at label k on the tau-node it, from cubic Hermite interpolation in s
struct Slices {
  std::vector<double> tau;  // ascending, ends at 1
  std::size_t nr = 0;
  std::vector<double> chi, chi_s, rchi_r, J;  // [it][k], NaN where the label froze earlier
  std::size_t index(std::size_t it, std::size_t k) const { return it * nr + k; }
  bool has(std::size_t it, std::size_t k) const;
};

struct EnergySample {
  double s = 0.0;
  double kinetic = 0.0, internal = 0.0, gravitational = 0.0;
  double total() const { return kinetic + internal + gravitational; }
};

struct Trajectory {
  HydroConfig cfg;
  RadialProfile rp;
  std::vector<double> chi0, chi1;
  std::vector<Frame> frames;
  Slices slices;
  std::vector<CollapseEvent> events;
  std::vector<EnergySample> energy;    // until the first freeze
  double max_label_energy_drift = 0.0; // eps = 0 only, relative to G / chi
  double max_energy_drift = 0.0;       // total energy, relative, before the first freeze
  long steps = 0;
  long rejected = 0;
  double s_final = 0.0;
  bool halted = false;
  std::string message;
};

// Lagrangian energies per unit mass (1/2) r^2 chi_s^2, eps alpha w J^(1-gamma) and -G r^2 / chi,
// integrated against dm = 4 pi w^alpha r^2 dr over the evolving labels
EnergySample total_energy(const SimState& st, const RadialProfile& rp, double eps);

Trajectory run(std::shared_ptr<const GravityData> gd, const HydroConfig& cfg, const Hierarchy* h = nullptr,
               std::vector<double> tau_nodes = {});

// the same with a prepared initial state on the sampled profile
Trajectory run_from(const RadialProfile& rp, const HydroConfig& cfg, SimState init, std::vector<double> tau_nodes);

// Data tuned onto the collapse surface 1 - g(r) s = 0. Forward integration from phi_app(1) excites the
// collapse-time shift mode (theta ~ tau^(-1/3)) at the size of the expansion defect; each pass reads the
// shift of every label from its smallest resolved slice and corrects chi_s(0) with the zero-energy dust
// sensitivity. The position data chi(0) = phi_app(1) is left unchanged.
struct TunedRun {
  Trajectory trajectory;
  std::vector<double> max_shift;        // sup_r g |t* - 1/g| per pass, the last one after the final run
  std::vector<double> chi1_correction;  // applied to chi_s(0)
  std::vector<double> shift;            // per label, t* - 1/g after the final run
};
TunedRun run_on_collapse_surface(std::shared_ptr<const GravityData> gd, const HydroConfig& cfg, const Hierarchy& h,
                                 int iterations = 3, double tau_measure_max = 0.05);

struct DustComparison {
  double max_rel_err_chi = 0.0;  // over frames with s <= s_limit and unfrozen labels
  double s_limit = 0.0;
  double max_rel_err_t_star = 0.0;
  // per tau node: sup over resolved labels of |chi/chi_dust - 1| and |J/J_dust - 1|
  std::vector<double> tau, dev_chi, dev_J;
  std::vector<std::size_t> resolved;  // labels with data per node
  double dev_at_one = 0.0;            // at tau = 1
  double max_dev = 0.0;               // over all nodes
  double trend_lo = 0.0, trend_hi = 0.0;
  bool trend_monotone = false;
  bool support_decreasing = false;
  double support_final = 0.0;
};
// s_limit_fraction: chi is compared with chi_dust for s <= fraction * t*(0);
// the ratio statistics run over labels r <= r_max
DustComparison compare_to_dust(const Trajectory& tr, const GravityData& gd, double s_limit_fraction = 0.9,
                               double r_max = 1.0);

struct RemainderDiagnostics {
  std::vector<double> tau;
  std::vector<double> theta_sup;   // sup_r |phi - phi_app| / phi_0
  std::vector<double> g00_min, g00_max, g01_max, d2_min;
  std::vector<double> c_ratio_sup; // sup_r c[phi] / q_{-gamma-1}(r^n / tau)
  double c_slope = 0.0, c_slope_expected = 0.0;
  std::vector<double> E, D;        // truncated energies at slices every label reached
  int energy_order = 2;
  double m = 2.5;
  bool g00_ok = false, d2_ok = false, c_slope_ok = false;
};
RemainderDiagnostics remainder_diagnostics(const Trajectory& tr, const Hierarchy& h, double m = 2.5,
                                           int energy_order = 2, double c_tau_lo = 1e-3, double c_tau_hi = 1e-1);

struct EulerianFrame {
  double s = 0.0;
  std::vector<double> R, rho, u;  // over active labels
  double mass = 0.0;
  double mass_expected = 0.0;
  double mass_rel_err = 0.0;
  // physical variables through the mass preserving rescaling with eps_bar = eps^(1/(4-3 gamma))
  double eps_bar = 0.0;
  std::vector<double> x_phys, rho_phys, u_phys;
  double t_phys = 0.0;
};
// Throws std::runtime_error naming the label where R(r) stops increasing
EulerianFrame eulerian_reconstruct(const Frame& f, const RadialProfile& rp, double eps);

}  // namespace collapse
