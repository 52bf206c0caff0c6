#pragma once

// Sampled fields and the radial operator algebra: D_r, the D_j chains, Lambda,
// the elliptic operators L_k / L_k*, the pressure in (s, r) and (tau, r),
// the q / p weights and weighted inner products.
//
// Radial operators act on samples over a uniform grid r_k = k h, k = 0..N, with
// fourth-order centered differences. At r = 0 ghost values come from the declared
// parity; at the right end of the active range the stencils turn one-sided.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "collapse/profiles.hpp"

namespace collapse {

enum class Parity { even, odd };

inline Parity flip(Parity p) { return p == Parity::even ? Parity::odd : Parity::even; }

std::vector<double> uniform_grid(int intervals);
std::vector<double> geometric_grid(double lo, double hi, int per_decade);

// d/dr on [lo, N]; lo > 0 turns the left closure one-sided as well
std::vector<double> d_dr(std::span<const double> f, double h, Parity p, std::size_t lo = 0);
std::vector<double> d2_dr2(std::span<const double> f, double h, Parity p, std::size_t lo = 0);

// D_r f = f' + 2 f / r for odd f; the r = 0 value is the limit 3 f'(0)
std::vector<double> div_r(std::span<const double> f, double h);

// D_j alternates D_r (on odd input) and d_r (on even input), rightmost first;
// Dbar_j = D_{j-1} d_r. The input parity is odd for D_j and even for Dbar_j.
std::vector<double> dj_chain(int j, std::span<const double> f, double h);
std::vector<double> dbar_chain(int j, std::span<const double> f, double h);
inline Parity dj_parity(int j) { return j % 2 ? Parity::even : Parity::odd; }
inline Parity dbar_parity(int j) { return j % 2 ? Parity::odd : Parity::even; }

// Profile samples on the radial grid
struct RadialProfile {
  double h = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double n = 0.0;  // flatness
  std::vector<double> r, w, rw, dw, w_alpha, G, g, L;
};
RadialProfile sample_profile(const GravityData& gd, int intervals);

// L_k f = -w d_r D_r f - (1 + k) w' D_r f, with odd f
std::vector<double> elliptic_l(double k, std::span<const double> f, const RadialProfile& rp);
// L_k* f = -w D_r d_r f - (1 + k) w' d_r f, with even f
std::vector<double> elliptic_l_star(double k, std::span<const double> f, const RadialProfile& rp);

// |(f, L_k h)_k - (D_r f, D_r h)_{1+k}| / |(D_r f, D_r h)_{1+k}| for odd f, h, with (.,.)_k weighted by w^k r^2
// (k here is the full exponent, alpha included)
double adjoint_defect(double k, std::span<const double> f, std::span<const double> h, const RadialProfile& rp);

// max |D_j X - (r d_r Dbar_{j-1}(X / r) + (j + 2) Dbar_{j-1}(X / r))| / max |D_j X| for odd X,
// over the nodes below skip_right from the right end; the r = 0 value of X / r is X'(0)
double dchain_identity_defect(int j, std::span<const double> X, double h, std::size_t skip_right = 8);

// Fourth-order composite rule for int_0^1 F dr on the uniform grid (any N >= 4)
double integrate_uniform(std::span<const double> F, double h);
// (f, g)_{alpha + k} = int f g w^(alpha + k) r^2 dr
double weighted_inner(std::span<const double> f, std::span<const double> g, double k, const RadialProfile& rp);
inline double weighted_norm2(std::span<const double> f, double k, const RadialProfile& rp) {
  return weighted_inner(f, f, k, rp);
}

struct PressureResult {
  std::vector<double> P;
  std::vector<double> J;
  bool ok = true;
  std::size_t bad_index = 0;  // first label with J <= 0
};

// P[chi] = (chi^2 / r^2) [(1 + alpha) r w' J^-gamma + w r d_r (J^-gamma)], J = chi^2 (chi + r chi_r),
// evaluated on [lo, N]; labels below lo are left at zero
PressureResult pressure_s(std::span<const double> chi, const RadialProfile& rp, std::size_t lo = 0);

// Lambda f = M_g d_tau f + r d_r f
inline double lambda_op(double m_g, double dtau_f, double rdr_f) { return m_g * dtau_f + rdr_f; }

// Closed form of P[phi_0] in tau-coordinates from the profile, independent of the jet machinery
double pressure_phi0(const GravityData& gd, double tau, double r);
// r dL/dr = 9 pi (alpha w^(alpha-1) r w' - 2 w^alpha L) / g^2
double r_dL(const GravityData& gd, double r);

// q_nu(x) = (1 + x)^nu, p_{mu,nu}(x) = x^(mu + nu) / (1 + x)^mu
inline double weight_q(double nu, double x) { return std::pow(1.0 + x, nu); }
double weight_p(double mu, double nu, double x);

// A field sampled on a tau x r tensor grid, tau-major, with optional derivative channels
struct GridField {
  std::string name;
  std::vector<double> tau;
  std::vector<double> r;
  std::vector<double> value;
  std::vector<double> dtau;
  std::vector<double> rdr;

  GridField() = default;
  GridField(std::string n, std::vector<double> t, std::vector<double> rr);
  std::size_t index(std::size_t it, std::size_t ir) const { return it * r.size() + ir; }
  double at(std::size_t it, std::size_t ir) const { return value[index(it, ir)]; }
  double& at(std::size_t it, std::size_t ir) { return value[index(it, ir)]; }
  bool has_derivatives() const { return dtau.size() == value.size() && rdr.size() == value.size(); }
  void write_csv(const std::string& path) const;
};

// Truncated energies of H on one tau-slice: H and H_tau sampled on the radial grid
struct EnergyPair {
  double E = 0.0;
  double D = 0.0;
};
EnergyPair energies(int N, double tau, double eps, std::span<const double> H, std::span<const double> H_tau,
                    const RadialProfile& rp);

}  // namespace collapse
