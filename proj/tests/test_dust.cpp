#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "collapse/dust.hpp"
#include "collapse/fit.hpp"

using namespace collapse;

namespace {

std::shared_ptr<GravityData> polytrope(double n = 4.0) {
  return std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, n, 1.0));
}

// max relative error of a zero-energy trajectory against (1 - g s)^(2/3), for chi >= chi_min
double closed_form_error(const DustTrajectory& tr, double G, double chi_min) {
  const double g = 3.0 * std::sqrt(G / 2.0);
  double err = 0.0;
  for (const auto& p : tr.points) {
    if (p.chi < chi_min) break;
    const double ref = std::pow(1.0 - g * p.s, 2.0 / 3.0);
    err = std::max(err, std::abs(p.chi / ref - 1.0));
  }
  return err;
}

}  // namespace

TEST_CASE("closed-form dust profile") {
  auto gd = polytrope();
  for (double r : {0.0, 0.3, 0.8, 1.0}) {
    CHECK(*chi_dust(*gd, 0.0, r) == 1.0);
    CHECK(*jacobian_dust(*gd, 0.0, r) == 1.0);
    for (double tau : {0.9, 0.2, 1e-3}) {
      const double s = (1.0 - tau) / gd->g(r);
      CHECK(*chi_dust(*gd, s, r) == doctest::Approx(phi0(tau)).epsilon(1e-12));
      // tau form of the Jacobian
      CHECK(*jacobian_dust(*gd, s, r) ==
            doctest::Approx(jacobian_phi0(tau, gd->m_g(tau, r))).epsilon(1e-9));
    }
    CHECK_FALSE(chi_dust(*gd, 1.0 / gd->g(r) * 1.0001, r).has_value());
  }
  CHECK(jacobian_phi0(1.0, 0.0) == 1.0);
}

TEST_CASE("dust Jacobian matches a finite-difference evaluation") {
  auto gd = polytrope();
  const double s = 0.8 / gd->g0();
  for (double r : {0.2, 0.5, 0.9}) {
    const double h = 1e-4;
    auto chi = [&](double x) { return *chi_dust(*gd, s, x); };
    const double d = (chi(r - 2 * h) - 8 * chi(r - h) + 8 * chi(r + h) - chi(r + 2 * h)) / (12 * h);
    const double c = chi(r);
    CHECK(*jacobian_dust(*gd, s, r) == doctest::Approx(c * c * (c + r * d)).epsilon(1e-9));
  }
}

TEST_CASE("collapse ordering follows g") {
  auto gd = polytrope();
  double prev = 0.0;
  for (int k = 0; k <= 50; ++k) {
    const double t = collapse_time(*gd, k / 50.0);
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("zero-energy dust ODE reproduces the closed form") {
  const double G = 4.0 * std::numbers::pi / 3.0;
  const double g = 3.0 * std::sqrt(G / 2.0);
  DustOdeOptions opt;
  opt.ds = 1e-3;
  opt.eta = 1e-3;
  const auto tr = integrate_dust_ode(G, 1.0, -std::sqrt(2.0 * G), opt);
  CHECK(tr.reached_floor);
  CHECK_FALSE(tr.step_failure);
  CHECK(closed_form_error(tr, G, 1e-4) < 1e-6);
  CHECK(tr.max_energy_drift < 1e-10);
  CHECK(tr.collapse_estimate == doctest::Approx(1.0 / g).epsilon(1e-6));
  // velocity formula along the trajectory
  for (std::size_t i = 0; i < tr.points.size(); i += 97) {
    const auto& p = tr.points[i];
    CHECK(std::abs(p.chi_s - dust_velocity(G, 1.0, -std::sqrt(2.0 * G), p.chi)) <
          1e-8 * std::max(1.0, std::abs(p.chi_s)));
  }
}

TEST_CASE("dust ODE converges at fourth order") {
  const double G = 2.5;
  const double g = 3.0 * std::sqrt(G / 2.0);
  auto err = [&](double ds) {
    DustOdeOptions opt;
    opt.adaptive = false;
    opt.ds = ds;
    opt.s_end = 0.9 / g;
    return closed_form_error(integrate_dust_ode(G, 1.0, -std::sqrt(2.0 * G), opt), G, 0.0);
  };
  const double e1 = err(4e-3), e2 = err(2e-3);
  CHECK(std::log2(e1 / e2) > 3.8);
}

TEST_CASE("blow-up exponent of the dust ODE is 2/3") {
  const double G = 3.0;
  const double g = 3.0 * std::sqrt(G / 2.0);
  DustOdeOptions opt;
  opt.eta = 1e-3;
  const auto tr = integrate_dust_ode(G, 1.0, -std::sqrt(2.0 * G), opt);
  std::vector<double> x, y;
  for (const auto& p : tr.points)
    if (p.chi < 1e-2 && p.chi > 1e-5) {
      x.push_back(1.0 / g - p.s);
      y.push_back(p.chi);
    }
  const auto f = fit_power_law(x, y);
  CHECK(f.slope == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("step failure is reported with the last valid time") {
  DustOdeOptions opt;
  opt.ds = 1e-2;
  opt.eta = 0.05;
  opt.ds_min = 1e-3;
  const auto tr = integrate_dust_ode(1.0, 1.0, -std::sqrt(2.0), opt);
  CHECK(tr.step_failure);
  CHECK(tr.last_valid_s > 0.0);
  CHECK_THROWS(integrate_dust_ode(1.0, -1.0, 0.0));
}

TEST_CASE("remaining mass and the Eulerian mass integral") {
  auto gd = polytrope();
  const double s0 = 1.0 / gd->g0(), s1 = 1.0 / gd->g1();
  CHECK(mass_remaining(*gd, 0.5 * s0) == gd->mass_total());
  CHECK(mass_remaining(*gd, s1) == 0.0);
  double prev = gd->mass_total();
  for (int k = 1; k < 20; ++k) {
    const double s = s0 + (s1 - s0) * k / 20.0;
    const double m = mass_remaining(*gd, s);
    CHECK(m <= prev);
    prev = m;
    CHECK(eulerian_mass_dust(*gd, s) == doctest::Approx(m).epsilon(1e-6));
  }
  CHECK(mass_remaining(*gd, s1 * (1 - 1e-6)) < 1e-3 * gd->mass_total());
}

TEST_CASE("Eulerian dust density") {
  auto gd = polytrope();
  for (double R : {0.1, 0.5, 0.99})
    CHECK(*eulerian_density_dust(*gd, 0.0, R) == doctest::Approx(gd->profile().w_alpha(R)).epsilon(1e-12));
  CHECK_FALSE(eulerian_density_dust(*gd, 0.0, 1.5).has_value());
  // density along a label grows without bound as it collapses
  const double r = 0.5;
  double prev = 0.0;
  for (double tau : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double s = (1.0 - tau) / gd->g(r);
    const double rho = *eulerian_density_dust(*gd, s, r * *chi_dust(*gd, s, r));
    CHECK(rho > 5.0 * prev);
    prev = rho;
  }
}
