#pragma once

// Pressureless collapse: closed forms, ODE integration, mass absorption and the
// Eulerian density of the dust solution.

#include <optional>
#include <string>
#include <vector>

#include "collapse/profiles.hpp"

namespace collapse {

// (1 - g(r) s)^(2/3); nullopt once the label has collapsed
std::optional<double> chi_dust(const GravityData& gd, double s, double r);
// (1 - g s)^2 (1 - (2/3) s r g' / (1 - g s)); nullopt once the label has collapsed
std::optional<double> jacobian_dust(const GravityData& gd, double s, double r);
// tau-forms of the dust profile: phi0 = tau^(2/3), J[phi0] = tau^2 + (2/3) M_g tau
double phi0(double tau);
double jacobian_phi0(double tau, double m_g);
double collapse_time(const GravityData& gd, double r);

struct DustPoint {
  double s = 0.0;
  double chi = 0.0;
  double chi_s = 0.0;
  double energy = 0.0;
};

struct DustOdeOptions {
  double ds = 1e-3;         // maximal step
  bool adaptive = true;     // shrink steps near blow-up
  double eta = 1e-3;        // step fraction of the free-fall margin (2/3) chi / |chi_s|
  double chi_floor = 1e-6;
  double ds_min = 1e-300;
  double s_end = -1.0;      // stop at this time if positive
};

struct DustTrajectory {
  std::vector<DustPoint> points;
  bool reached_floor = false;
  bool step_failure = false;
  double last_valid_s = 0.0;
  // s - (2/3) chi / chi_s at the last point (exact for zero-energy data)
  double collapse_estimate = 0.0;
  double max_energy_drift = 0.0;  // relative to max(|E0|, G/chi)
};

DustTrajectory integrate_dust_ode(double G, double chi0, double chi1, const DustOdeOptions& opt = {});

// -sqrt(chi1^2 + 2G(1/chi - 1/chi0)) for inward data
double dust_velocity(double G, double chi0, double chi1, double chi);

double mass_remaining(const GravityData& gd, double s);
std::optional<double> eulerian_density_dust(const GravityData& gd, double s, double R);
// Eulerian support radius chi_dust(s, 1)
double dust_support(const GravityData& gd, double s);
// 4 pi int_0^{support} rho Z^2 dZ by adaptive quadrature in the Eulerian variable
double eulerian_mass_dust(const GravityData& gd, double s, double tol = 1e-10);

}  // namespace collapse
