#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "collapse/dust.hpp"
#include "collapse/hydro.hpp"

using namespace collapse;

namespace {

std::shared_ptr<GravityData> polytrope(double n = 100.0) {
  return std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, n, 1.0));
}

double closed_form_error(const Trajectory& tr, std::size_t k) {
  const auto& f = tr.frames.back();
  const double ref = std::pow(1.0 - tr.rp.g[k] * f.s, 2.0 / 3.0);
  return std::abs(f.chi[k] - ref);
}

}  // namespace

TEST_CASE("rhs reduces to the dust forcing and to a uniform pull") {
  auto gd = polytrope();
  const auto rp = sample_profile(*gd, 200);
  SimState st;
  st.chi.assign(rp.r.size(), 0.8);
  st.chi_s.assign(rp.r.size(), 0.0);
  const auto a = rhs(st, rp, 0.0);
  REQUIRE(a);
  for (std::size_t k = 0; k < rp.r.size(); k += 17) CHECK((*a)[k] == doctest::Approx(-rp.G[k] / 0.64));

  GravityData uni(std::make_shared<UniformProfile>(1.2));
  const auto ru = sample_profile(uni, 100);
  SimState su;
  su.chi.assign(ru.r.size(), 0.7);
  su.chi_s.assign(ru.r.size(), 0.0);
  const auto au = rhs(su, ru, 0.1);
  REQUIRE(au);
  for (std::size_t k = 0; k < ru.r.size(); k += 9) CHECK((*au)[k] == doctest::Approx(-ru.G[0] / 0.49).epsilon(1e-12));

  // J <= 0 is reported with its label
  su.chi[50] = -0.1;
  std::size_t bad = 0;
  CHECK_FALSE(rhs(su, ru, 0.1, &bad));
  CHECK(bad >= 47);
  CHECK(bad <= 53);
}

TEST_CASE("dust data have zero energy") {
  auto gd = polytrope();
  const auto rp = sample_profile(*gd, 200);
  const auto st = init_from_phi_app(nullptr, 0.0, rp);
  for (std::size_t k = 0; k < rp.r.size(); ++k) {
    CHECK(st.chi[k] == 1.0);
    CHECK(st.chi_s[k] == doctest::Approx(-2.0 / 3.0 * rp.g[k]).epsilon(1e-15));
    CHECK(std::abs(0.5 * st.chi_s[k] * st.chi_s[k] - rp.G[k]) < 1e-12 * rp.G[k]);
  }
}

TEST_CASE("acceleration matches the second difference of a fine trajectory") {
  auto gd = polytrope();
  const auto rp = sample_profile(*gd, 400);
  HydroConfig cfg;
  cfg.intervals = 400;
  cfg.eps = 1e-3;
  cfg.dt_max = 1e-4;
  cfg.frame_every = 1e-4;
  cfg.s_end = 2e-4;
  cfg.eta = 1e9;
  auto init = init_from_phi_app(nullptr, 0.0, rp);
  const auto tr = run_from(rp, cfg, init, geometric_grid(1e-2, 1.0, 10));
  REQUIRE(tr.frames.size() == 3);
  SimState mid{tr.frames[1].s, tr.frames[1].chi, tr.frames[1].chi_s, 0};
  const auto a = rhs(mid, rp, cfg.eps);
  REQUIRE(a);
  double amax = 0.0, err = 0.0;
  for (std::size_t k = 0; k < rp.r.size(); ++k) {
    const double fd = (tr.frames[2].chi[k] - 2.0 * tr.frames[1].chi[k] + tr.frames[0].chi[k]) / 1e-8;
    amax = std::max(amax, std::abs((*a)[k]));
    err = std::max(err, std::abs(fd - (*a)[k]));
  }
  CHECK(err / amax < 1e-5);
}

TEST_CASE("pressureless run follows the closed-form dust solution") {
  auto gd = polytrope();
  HydroConfig cfg;
  cfg.intervals = 400;
  cfg.eps = 0.0;
  const auto tr = run(gd, cfg);
  CHECK_FALSE(tr.halted);
  const auto dc = compare_to_dust(tr, *gd);
  CHECK(dc.max_rel_err_chi < 1e-5);
  CHECK(dc.max_rel_err_t_star < 1e-4);
  CHECK(tr.max_label_energy_drift < 1e-8);
  CHECK(tr.events.size() == tr.rp.r.size());
  CHECK(dc.support_decreasing);
  // every label freezes, the outer ones after the inner ones
  for (std::size_t i = 1; i < tr.events.size(); ++i) CHECK(tr.events[i].s >= tr.events[i - 1].s);
  // dust ratios are 1 up to the integrator and stencil error
  CHECK(dc.dev_at_one == 0.0);
  for (std::size_t it = 0; it < dc.tau.size(); ++it)
    if (dc.tau[it] >= 1e-3) CHECK(dc.dev_chi[it] < 1e-6);
}

TEST_CASE("time stepping converges at fourth order") {
  auto gd = polytrope(4.0);
  const auto rp = sample_profile(*gd, 100);
  auto err = [&](double dt) {
    HydroConfig cfg;
    cfg.intervals = 100;
    cfg.eps = 0.0;
    cfg.eta = 1e9;
    cfg.dt_max = dt;
    cfg.frame_every = 1.0;
    cfg.s_end = 0.16;
    const auto tr = run_from(rp, cfg, init_from_phi_app(nullptr, 0.0, rp), geometric_grid(1e-2, 1.0, 10));
    double e = 0.0;
    for (std::size_t k = 0; k < rp.r.size(); k += 10) e = std::max(e, closed_form_error(tr, k));
    return e;
  };
  const double e1 = err(0.01), e2 = err(0.005);
  INFO("errors " << e1 << " " << e2);
  CHECK(std::log2(e1 / e2) > 3.8);
}

TEST_CASE("small-eps run keeps the diagnostics in range") {
  auto gd = polytrope();
  HydroConfig cfg;
  cfg.intervals = 200;
  cfg.eps = 1e-4;
  const auto rp = sample_profile(*gd, cfg.intervals);
  Hierarchy h(gd, exponents(1.2, 100.0, 2, cfg.eps), hydro_hierarchy_grid(rp, default_grid(100.0, 1e-3, 20).tau));
  const auto init = init_from_phi_app(&h, cfg.eps, rp);
  for (std::size_t k = 0; k < rp.r.size(); ++k) {
    CHECK(std::abs(init.chi[k] - 1.0) < 1e-12);
    // zero energy up to O(eps)
    CHECK(std::abs(0.5 * init.chi_s[k] * init.chi_s[k] - rp.G[k]) < 10.0 * cfg.eps * rp.G[k] * rp.n);
  }
  const auto tr = run(gd, cfg, &h);
  CHECK_FALSE(tr.halted);
  CHECK(tr.max_energy_drift < 1e-5);
  const auto dc = compare_to_dust(tr, *gd);
  CHECK(dc.dev_at_one < 10.0 * cfg.eps);
  CHECK(dc.support_decreasing);
  const auto rd = remainder_diagnostics(tr, h);
  CHECK(rd.g00_ok);
  CHECK(rd.d2_ok);
  for (double g : rd.g01_max) CHECK(std::isfinite(g));
}

TEST_CASE("remainder coefficients at eps = 0") {
  auto gd = polytrope();
  HydroConfig cfg;
  cfg.intervals = 200;
  cfg.eps = 0.0;
  const auto rp = sample_profile(*gd, cfg.intervals);
  Hierarchy h(gd, exponents(1.2, 100.0, 2, 0.0), hydro_hierarchy_grid(rp, default_grid(100.0, 1e-3, 20).tau));
  const auto tr = run(gd, cfg, &h);
  const auto rd = remainder_diagnostics(tr, h);
  for (std::size_t it = 0; it < rd.tau.size(); ++it) {
    CHECK(rd.g00_min[it] == 1.0);
    CHECK(rd.g00_max[it] == 1.0);
    CHECK(rd.g01_max[it] == 0.0);
    if (std::isfinite(rd.d2_min[it])) CHECK(rd.d2_min[it] == doctest::Approx(119.0 / 36.0).epsilon(1e-12));
  }
  // c[phi_0] follows tau^(delta - 2 + 2/n) near the axis
  CHECK(rd.c_slope_ok);
}

TEST_CASE("Eulerian reconstruction") {
  auto gd = polytrope(4.0);
  HydroConfig cfg;
  cfg.intervals = 1000;
  cfg.eps = 0.0;
  cfg.s_end = 0.1;
  cfg.frame_every = 0.05;
  const auto tr = run(gd, cfg);
  const auto& rp = tr.rp;
  const auto e0 = eulerian_reconstruct(tr.frames.front(), rp, 0.0);
  for (std::size_t k = 0; k < rp.r.size(); k += 50) {
    CHECK(e0.R[k] == doctest::Approx(rp.r[k]));
    CHECK(e0.rho[k] == doctest::Approx(rp.w_alpha[k]).epsilon(1e-9));
    CHECK(e0.u[k] == doctest::Approx(-2.0 / 3.0 * rp.g[k] * rp.r[k]).epsilon(1e-14));
  }
  for (const auto& f : tr.frames) CHECK(eulerian_reconstruct(f, rp, 0.0).mass_rel_err < 1e-6);
  // physical variables through the rescaling
  const auto ep = eulerian_reconstruct(tr.frames.back(), rp, 1e-3);
  const double eb = std::pow(1e-3, 1.0 / (4.0 - 3.0 * 1.2));
  CHECK(ep.eps_bar == doctest::Approx(eb));
  CHECK(ep.x_phys[10] == doctest::Approx(eb * ep.R[10]));
  CHECK(ep.rho_phys[10] == doctest::Approx(ep.rho[10] / (eb * eb * eb)));

  Frame bad = tr.frames.front();
  bad.chi[500] = 0.3;
  CHECK_THROWS_AS(eulerian_reconstruct(bad, rp, 0.0), std::runtime_error);
}

TEST_CASE("instability detector halts the run") {
  auto gd = polytrope(4.0);
  HydroConfig cfg;
  cfg.intervals = 100;
  cfg.eps = 0.0;
  cfg.chi_bound = 0.5;
  cfg.retries = 3;
  const auto tr = run(gd, cfg);
  CHECK(tr.halted);
  CHECK(tr.message.find("step failed") != std::string::npos);
  HydroConfig bad = cfg;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(run(gd, bad), std::invalid_argument);
}
