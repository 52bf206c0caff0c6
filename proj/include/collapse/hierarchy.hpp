#pragma once

// The hierarchy d_tt phi_j - (4/9) tau^-2 phi_j = f_j, solved column by column in r
// with the explicit double-quadrature operators S1 / S2 on a geometric tau-grid.
//
// Each iterate is carried as a (tau, rho)-jet at every node. The pure rho-derivatives
// and the first tau-derivative come from applying S to rho-derivatives of the source;
// higher tau-derivatives follow from the ODE itself. The source f_{j+1} is then
// evaluated exactly on these jets, so no finite differences enter the recursion.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "collapse/fields.hpp"
#include "collapse/jet.hpp"
#include "collapse/profiles.hpp"

namespace collapse {

struct ExpansionParams {
  double gamma = 1.2;
  double gammabar = 0.0;   // 4/3 - gamma
  double n = 100.0;
  double alpha = 0.0;
  int N = 0;               // floor(alpha) + 6
  double delta = 0.0;      // 2 (4/3 - gamma - 1/n)
  double delta_star = 0.0; // delta - N / n
  double lambda = 0.0;     // 2N / n
  double delta_bar = 0.0;  // min(delta_star, delta / 2)
  int j_switch = 0;        // S1 for j <= j_switch, S2 above
  int lemma_a = 2;         // the integer a of the two-sided gap condition
  int M_full = 0;         // floor(1 + 3 / delta_bar) + 1
  double m = 2.5;
  int M = 2;
  double epsilon = 1e-3;
};

class ExponentError : public std::invalid_argument {
 public:
  ExponentError(std::string inequality, const std::string& detail)
      : std::invalid_argument(inequality + ": " + detail), inequality_(std::move(inequality)) {}
  const std::string& inequality() const { return inequality_; }

 private:
  std::string inequality_;
};

// Checks, in order: gamma range, delta > 0, delta > (2N+2)/n (which implies n > (N+2)/(2 gammabar)),
// lambda < 1, and the gap condition around 2/3 with the floor identity. Throws on the first failure.
ExpansionParams exponents(double gamma, double n, int M = 2, double epsilon = 1e-3, int lemma_a = 2);

enum class SOperator { S1, S2 };
const char* to_string(SOperator s);
SOperator operator_for(int j, const ExpansionParams& p);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double exponent) : std::runtime_error(what), exponent_(exponent) {}
  double exponent() const { return exponent_; }

 private:
  double exponent_;
};

struct SResult {
  std::vector<double> phi;
  std::vector<double> dphi;   // analytic: (4/3) phi / tau + tau^(-4/3) I
  std::vector<double> inner;  // I(tau) = int_0^tau s^(4/3) f ds
  double tail_exponent = 0.0; // fitted exponent of f at tau_min
};

// tau: geometric grid ending at 1; f sampled on it. Throws DivergenceError when the
// extrapolated source is too singular for the requested operator. With asymptotic = false
// the first cells are not assumed to show the tau -> 0 power law and nothing is thrown.
SResult s_operator(SOperator which, std::span<const double> tau, std::span<const double> f,
                   bool asymptotic = true);

// Order of the stored jet of phi_j: K_M = 2, K_{j-1} = K_j + 2
int jet_order(int j, int M);

struct HierarchyGrid {
  std::vector<double> tau;
  std::vector<double> r;
};

// geometric tau-grid from tau_min to 1 and an r-grid: uniform coarse points plus a
// dense set uniform in log r over [-rho_width / n, 0]
HierarchyGrid default_grid(double n, double tau_min = 1e-4, int per_decade = 40, int coarse = 40, int dense = 560,
                           double rho_width = 30.0);

// Each column is solved on the stored tau-grid extended geometrically below tau_min to
// max(tau_floor, depth r^n), so that its quadrature tails start where r^n / tau >> 1.
struct HierarchyOptions {
  int threads = 0;  // 0: hardware concurrency
  double depth = 1e-3;
  double tau_floor = 1e-24;
};

// Solution of the hierarchy on a tau x r grid. Iterates are stored as order-2 jets
// (value, d_tau, d_rho, second derivatives); the sources as values.
class Hierarchy {
 public:
  Hierarchy(std::shared_ptr<const GravityData> gd, ExpansionParams params, HierarchyGrid grid,
            HierarchyOptions opt = {});

  const ExpansionParams& params() const { return params_; }
  const HierarchyGrid& grid() const { return grid_; }
  const GravityData& gravity() const { return *gd_; }
  int M() const { return params_.M; }
  std::size_t nt() const { return grid_.tau.size(); }
  std::size_t nr() const { return grid_.r.size(); }

  // order-2 jet of phi_j at a node; j = 0 is tau^(2/3)
  Jet phi_jet(int j, std::size_t it, std::size_t ir) const;
  double phi(int j, std::size_t it, std::size_t ir) const;
  double dtau_phi(int j, std::size_t it, std::size_t ir) const;
  double rdr_phi(int j, std::size_t it, std::size_t ir) const;
  double source(int j, std::size_t it, std::size_t ir) const;  // f_j, j >= 1
  SOperator op(int j) const { return operator_for(j, params_); }
  // fitted source exponent at tau_min, per r
  double tail_exponent(int j, std::size_t ir) const { return tails_[(j - 1) * nr() + ir]; }

  GridField field(int j) const;
  // phi_app = sum eps^j phi_j with derivative channels
  GridField phi_app(double eps) const;
  Jet phi_app_jet(double eps, std::size_t it, std::size_t ir) const;
  ProfileJet profile_jet(std::size_t ir) const;  // order 2

 private:
  void solve_column(std::size_t ir);

  std::shared_ptr<const GravityData> gd_;
  ExpansionParams params_;
  HierarchyOptions opt_;
  HierarchyGrid grid_;
  std::vector<double> jets_;   // [(j-1)][it][ir][6]
  std::vector<double> src_;    // [(j-1)][it][ir]
  std::vector<double> tails_;  // [(j-1)][ir]
};

// max over interior nodes and r of |d_tau(d_tau phi) - (4/9) tau^-2 phi - f| / scale, where the outer
// tau-derivative is a sixth-order difference of the analytic first derivative
struct OdeResidual {
  double max_relative = 0.0;
  double at_tau = 0.0;
  double at_r = 0.0;
};
OdeResidual ode_residual(const Hierarchy& h, int j);

struct GainReport {
  int j = 0;
  double fitted_slope = 0.0;
  double expected_slope = 0.0;
  double fitted_slope_dtau = 0.0;
  double expected_slope_dtau = 0.0;
  double tau_lo = 1e-3, tau_hi = 1e-1;
  bool pass = false;
  std::vector<double> tau;
  std::vector<double> envelope;       // sup_r |phi_j| / p_{lambda,-2/n}(r^n / tau)
  std::vector<double> envelope_dtau;  // sup_r |d_tau phi_j| / p
  std::vector<std::pair<double, double>> decade_slopes;  // (decade start, slope)
};
GainReport verify_gain(const Hierarchy& h, int j, double tau_lo = 1e-3, double tau_hi = 1e-1, double tol = 0.05);

struct PhiAppReport {
  bool positive = true;
  double fitted_C = 0.0;   // max |phi_app / phi_0 - 1| / (eps tau^delta)
  double jac_min = 0.0;    // min J[phi_app] / J[phi_0]
  double jac_max = 0.0;
  double eps_max = 0.0;    // largest eps keeping J-ratio within [0.9, 1.1], by bisection
};
PhiAppReport check_phi_app(const Hierarchy& h, double eps);

}  // namespace collapse
