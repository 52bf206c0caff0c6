#include "collapse/dust.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace collapse {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::optional<double> chi_dust(const GravityData& gd, double s, double r) {
  const double tau = 1.0 - gd.g(r) * s;
  if (!(tau > 0.0)) return std::nullopt;
  return std::cbrt(tau * tau);
}

std::optional<double> jacobian_dust(const GravityData& gd, double s, double r) {
  const double g = gd.g(r);
  const double tau = 1.0 - g * s;
  if (!(tau > 0.0)) return std::nullopt;
  // r g' = L g
  return tau * (tau - 2.0 / 3.0 * s * gd.L(r) * g);
}

double phi0(double tau) { return std::cbrt(tau * tau); }

double jacobian_phi0(double tau, double m_g) { return tau * tau + 2.0 / 3.0 * m_g * tau; }

double collapse_time(const GravityData& gd, double r) { return 1.0 / gd.g(r); }

double dust_velocity(double G, double chi0, double chi1, double chi) {
  return -std::sqrt(chi1 * chi1 + 2.0 * G * (1.0 / chi - 1.0 / chi0));
}

DustTrajectory integrate_dust_ode(double G, double chi0, double chi1, const DustOdeOptions& opt) {
  if (!(chi0 > 0.0)) throw std::invalid_argument("dust ODE needs chi0 > 0");
  if (!(opt.ds > 0.0)) throw std::invalid_argument("dust ODE needs ds > 0");
  DustTrajectory tr;
  auto energy = [G](double x, double v) { return 0.5 * v * v - G / x; };
  auto acc = [G](double x) { return -G / (x * x); };
  double s = 0.0, x = chi0, v = chi1;
  const double E0 = energy(x, v);
  tr.points.push_back({s, x, v, E0});
  for (;;) {
    if (x < opt.chi_floor) {
      tr.reached_floor = true;
      break;
    }
    double h = opt.ds;
    if (opt.adaptive && v < 0.0) h = std::min(h, opt.eta * (2.0 / 3.0) * x / std::abs(v));
    if (opt.s_end > 0.0) {
      if (s >= opt.s_end) break;
      h = std::min(h, opt.s_end - s);
    }
    if (h < opt.ds_min) {
      tr.step_failure = true;
      break;
    }
    // classical RK4 for (x, v)
    const double k1x = v, k1v = acc(x);
    const double x2 = x + 0.5 * h * k1x;
    if (!(x2 > 0.0)) { tr.step_failure = true; break; }
    const double k2x = v + 0.5 * h * k1v, k2v = acc(x2);
    const double x3 = x + 0.5 * h * k2x;
    if (!(x3 > 0.0)) { tr.step_failure = true; break; }
    const double k3x = v + 0.5 * h * k2v, k3v = acc(x3);
    const double x4 = x + h * k3x;
    if (!(x4 > 0.0)) { tr.step_failure = true; break; }
    const double k4x = v + h * k3v, k4v = acc(x4);
    const double xn = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    const double vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!(xn > 0.0) || !std::isfinite(vn)) {
      tr.step_failure = true;
      break;
    }
    s += h;
    x = xn;
    v = vn;
    const double E = energy(x, v);
    tr.points.push_back({s, x, v, E});
    const double scale = std::max(std::abs(E0), G / x);
    tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(E - E0) / scale);
  }
  tr.last_valid_s = s;
  tr.collapse_estimate = v < 0.0 ? s - (2.0 / 3.0) * x / v : std::numeric_limits<double>::infinity();
  return tr;
}

double mass_remaining(const GravityData& gd, double s) {
  if (s <= 1.0 / gd.g0()) return gd.mass_total();
  if (s >= 1.0 / gd.g1()) return 0.0;
  const double rc = gd.g_inverse(1.0 / s, 1e-15);
  if (std::isnan(rc)) throw std::runtime_error("g^-1 failed: time outside the collapse window");
  return gd.mass_outside(rc);
}

double dust_support(const GravityData& gd, double s) {
  const auto c = chi_dust(gd, s, 1.0);
  return c ? *c : 0.0;
}

namespace {

// innermost live label at time s
double live_edge(const GravityData& gd, double s) {
  if (s <= 1.0 / gd.g0()) return 0.0;
  if (s >= 1.0 / gd.g1()) return 1.0;
  return gd.g_inverse(1.0 / s, 1e-15);
}

double invert_eulerian(const GravityData& gd, double s, double R, double rc) {
  auto F = [&](double r) {
    const auto c = chi_dust(gd, s, r);
    return (c ? r * *c : 0.0) - R;
  };
  const double fa = F(rc), fb = F(1.0);
  if (fa >= 0.0) return rc;
  if (fb <= 0.0) return 1.0;
  boost::uintmax_t it = 200;
  const auto [a, b] =
      boost::math::tools::toms748_solve(F, rc, 1.0, fa, fb, boost::math::tools::eps_tolerance<double>(50), it);
  return 0.5 * (a + b);
}

}  // namespace

std::optional<double> eulerian_density_dust(const GravityData& gd, double s, double R) {
  const double Rmax = dust_support(gd, s);
  if (!(R > 0.0) || R > Rmax) return std::nullopt;
  const double rc = live_edge(gd, s);
  const double r = R == Rmax ? 1.0 : invert_eulerian(gd, s, R, rc);
  const auto J = jacobian_dust(gd, s, r);
  if (!J) return std::nullopt;
  if (!(*J > 0.0)) throw std::runtime_error("non-positive dust Jacobian: shell crossing");
  return gd.profile().w_alpha(r) / *J;
}

double eulerian_mass_dust(const GravityData& gd, double s, double tol) {
  const double Rmax = dust_support(gd, s);
  if (!(Rmax > 0.0)) return 0.0;
  const double rc = live_edge(gd, s);
  // Z = Rmax u^2: the collapsed core makes the integrand ~ Z^(1/2) at the origin
  auto f = [&](double u) {
    const double Z = Rmax * u * u;
    if (Z <= 0.0) return 0.0;
    const double r = u >= 1.0 ? 1.0 : invert_eulerian(gd, s, Z, rc);
    const auto J = jacobian_dust(gd, s, r);
    if (!J || !(*J > 0.0)) return 0.0;
    return 8.0 * kPi * gd.profile().w_alpha(r) / *J * Z * Z * Rmax * u;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, 0.0, 1.0, tol);
}

}  // namespace collapse
