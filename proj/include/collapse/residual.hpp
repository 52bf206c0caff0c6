#pragma once

// Defect of phi_app = sum_{j<=M} eps^j phi_j in the full equation
//   S = -d_tt phi - (2/9) phi^-2 - eps P[phi]
// and its scaling in eps and tau.

#include <vector>

#include "collapse/fields.hpp"
#include "collapse/hierarchy.hpp"

namespace collapse {

// S on the hierarchy grid for the truncation M <= h.M(). The second tau-derivative is
// eliminated with the iterate ODEs, which leaves
//   S = -(2/9) phi_0^-2 y^2 (3 + 2y) / (1 + y)^2 - sum eps^j f_j - eps P[phi_app],
//   y = sum_{j>=1} eps^j phi_j / phi_0.
// Throws if phi_app <= 0 or J[phi_app] <= 0 somewhere.
GridField source_residual(const Hierarchy& h, int M, double eps);

// The same defect with d_tt phi_app from a sixth-order tau-difference of the stored
// first derivative; returns max |S - S_fd| relative to the largest term of the equation,
// over interior nodes with tau in [tau_lo, tau_hi].
double residual_crosscheck(const Hierarchy& h, int M, double eps, double tau_lo, double tau_hi);

struct ResidualNorms {
  std::vector<double> tau;
  std::vector<double> sup;       // sup_r |S|
  std::vector<double> weighted;  // (int S^2 w^alpha r^2 dr)^(1/2)
};
ResidualNorms residual_norms(const Hierarchy& h, const GridField& S);

struct ScanEntry {
  int M = 0;
  double eps = 0.0;
  ResidualNorms norms;
  double tau_slope_sup = 0.0;
  double tau_slope_weighted = 0.0;
};

struct ScanSummary {
  int M = 0;
  double expected_eps_slope = 0.0;
  double expected_tau_slope = 0.0;
  double eps_slope_sup = 0.0;       // median over window nodes of the per-node eps fit
  double eps_slope_weighted = 0.0;
  double eps_slope_spread = 0.0;    // max deviation of the per-node fits from expected
  double tau_slope_sup = 0.0;       // at the smallest eps
  double tau_slope_weighted = 0.0;
  bool eps_pass = false;
  bool tau_pass = false;
  bool norms_agree = false;         // sup and weighted slopes within 0.05
  bool pass = false;
};

struct ResidualScan {
  double tau_lo = 0.0, tau_hi = 0.0;
  std::vector<ScanEntry> entries;
  std::vector<ScanSummary> summary;
};

// eps_list with at least two positive values for an eps fit; tau_window defaults to
// [10 tau_min, 0.3]. tol is the slope tolerance.
ResidualScan scaling_study(const Hierarchy& h, const std::vector<int>& M_list, const std::vector<double>& eps_list,
                           double tau_lo = 0.0, double tau_hi = 0.3, double tol = 0.1);

}  // namespace collapse
