#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "collapse/profiles.hpp"

using namespace collapse;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<GravityData> polytrope(double gamma, double n, double a = 1.0) {
  return std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(gamma, n, a));
}

// exact mean density for integer alpha: (1 - x)^alpha expanded binomially
double exact_G(double r, double n, int alpha, double a) {
  if (r == 0.0) return 4.0 * kPi / 3.0 * std::pow(a, alpha);
  double sum = 0.0, binom = 1.0;
  for (int k = 0; k <= alpha; ++k) {
    sum += binom * ((k % 2) ? -1.0 : 1.0) * std::pow(r, n * k + 3) / (n * k + 3);
    binom = binom * (alpha - k) / (k + 1);
  }
  return 4.0 * kPi * std::pow(a, alpha) * sum / (r * r * r);
}

}  // namespace

TEST_CASE("uniform test profile gives constant g and vanishing L") {
  GravityData gd(std::make_shared<UniformProfile>(1.2));
  for (double r : {0.0, 0.3, 0.7, 1.0}) {
    CHECK(gd.g(r) == doctest::Approx(3.0 * std::sqrt(2.0 * kPi / 3.0)).epsilon(1e-13));
    CHECK(std::abs(gd.L(r)) < 1e-13);
  }
  CHECK(gd.g(0.5) == doctest::Approx(4.3416).epsilon(1e-4));
}

TEST_CASE("mean density matches the binomial closed form") {
  for (double n : {4.0, 100.0}) {
    auto gd = polytrope(1.2, n);
    for (double r : {0.0, 1e-3, 0.2, 0.5, 0.9, 0.97, 1.0})
      CHECK(gd->G(r) == doctest::Approx(exact_G(r, n, 5, 1.0)).epsilon(1e-13));
  }
}

TEST_CASE("mean density agrees with adaptive quadrature for non-integer alpha") {
  auto prof = std::make_shared<PolytropicProfile>(1.3, 6.0, 0.7);
  GravityData gd(prof);
  for (double r : {0.1, 0.6, 1.0}) {
    auto f = [&](double s) { return prof->w_alpha(s) * s * s; };
    const double m = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, r, 15, 1e-14);
    CHECK(gd.G(r) == doctest::Approx(4.0 * kPi * m / (r * r * r)).epsilon(1e-12));
  }
}

TEST_CASE("boundary value and identity for the polytrope") {
  auto gd = polytrope(1.2, 4.0);
  CHECK(gd->L(1.0) == doctest::Approx(-1.5).epsilon(1e-13));
  CHECK(gd->L(0.0) == 0.0);
  for (double r : {0.1, 0.5, 0.8}) {
    const double lhs = gd->L(r) + 1.5;
    const double rhs = 9.0 * kPi * gd->profile().w_alpha(r) / (gd->g(r) * gd->g(r));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
  }
  CHECK(gd->m_g(1.0, 0.4) == 0.0);
  CHECK(gd->m_g(0.5, 0.0) == 0.0);
  CHECK(gd->m_g(0.5, 0.5) == doctest::Approx(-0.5 * gd->L(0.5)));
  CHECK(gd->m_g(0.5, 0.5) > 0.0);
}

TEST_CASE("validation passes for polytropes") {
  for (double n : {4.0, 100.0}) {
    auto gd = polytrope(1.2, n);
    const auto rep = validate_profile(*gd);
    for (const auto& c : rep.checks) {
      INFO(c.name << ": " << c.detail);
      CHECK(c.pass);
    }
    CHECK(rep.c1 > 0.0);
    CHECK(rep.c1 <= rep.c2);
    CHECK(rep.identity_residual < 1e-8);
    CHECK(rep.taylor_exponent == doctest::Approx(n).epsilon(0.05 / n));
  }
}

TEST_CASE("identity residual converges at sixth order") {
  auto gd = polytrope(1.2, 4.0);
  auto residual = [&](int nr) {
    const auto Lfd = numeric_L(*gd, nr);
    double res = 0.0;
    // common interior points r in [0.25, 0.75]
    for (int k = nr / 4; k <= 3 * nr / 4; k += nr / 20) {
      const double r = static_cast<double>(k) / nr;
      const double Lid = 9.0 * kPi * gd->profile().w_alpha(r) / (gd->g(r) * gd->g(r)) - 1.5;
      res = std::max(res, std::abs(Lfd[k] - Lid));
    }
    return res;
  };
  const double e1 = residual(40), e2 = residual(80);
  const double order = std::log2(e1 / e2);
  INFO("errors " << e1 << " " << e2);
  CHECK(order > 5.5);
}

TEST_CASE("g is non-increasing and g_inverse inverts it") {
  auto gd = polytrope(1.2, 4.0);
  double prev = gd->g(0.0);
  for (int k = 1; k <= 200; ++k) {
    const double gk = gd->g(k / 200.0);
    CHECK(gk <= prev);
    prev = gk;
  }
  for (double r : {0.2, 0.5, 0.9, 1.0}) CHECK(gd->g_inverse(gd->g(r)) == doctest::Approx(r).epsilon(1e-10));
  CHECK(std::isnan(gd->g_inverse(gd->g(0.0) * 1.01)));
}

TEST_CASE("mass bookkeeping is consistent") {
  auto gd = polytrope(1.2, 4.0);
  for (double r : {0.0, 0.3, 0.8, 1.0})
    CHECK(gd->mass_within(r) + gd->mass_outside(r) == doctest::Approx(gd->mass_total()).epsilon(1e-13));
  CHECK(gd->mass_total() == doctest::Approx(gd->G(1.0)).epsilon(1e-13));
}

TEST_CASE("profile jets reproduce radial derivatives") {
  auto gd = polytrope(1.2, 4.0);
  const double r0 = 0.6;
  const auto pj = gd->jet(r0, 5);
  const double h = 1e-4;
  auto Lr = [&](double rho) { return gd->L(std::exp(rho)); };
  const double rho0 = std::log(r0);
  CHECK(pj.L.value() == doctest::Approx(gd->L(r0)).epsilon(1e-13));
  CHECK(pj.L.derivative(0, 1) == doctest::Approx((Lr(rho0 + h) - Lr(rho0 - h)) / (2 * h)).epsilon(1e-7));
  CHECK(pj.g2.value() == doctest::Approx(gd->g(r0) * gd->g(r0)).epsilon(1e-13));
  CHECK(pj.rw.value() == doctest::Approx(r0 * gd->profile().dw(r0)).epsilon(1e-13));
  CHECK(pj.inv_r2.derivative(0, 2) == doctest::Approx(4.0 / (r0 * r0)).epsilon(1e-13));
  // jets are available at the vacuum boundary for integer alpha
  const auto pb = gd->jet(1.0, 4);
  CHECK(pb.w.value() == 0.0);
  CHECK(pb.L.value() == doctest::Approx(-1.5).epsilon(1e-13));
}

TEST_CASE("tabulated profile reproduces the polytrope and flags a missing vacuum") {
  const double gamma = 1.2, n = 4.0;
  PolytropicProfile ref(gamma, n, 1.0);
  const std::string good = "tab_good.csv", bad = "tab_bad.csv";
  {
    std::ofstream a(good), b(bad);
    a << "r,w_alpha\n";
    b << "r,w_alpha\n";
    for (int k = 0; k <= 400; ++k) {
      const double r = k / 400.0;
      a << r << "," << ref.w_alpha(r) << "\n";
      b << r << "," << std::pow(ref.w(r) * 0.9 + 0.1, ref.alpha()) << "\n";
    }
  }
  ProfileSpec spec;
  spec.gamma = gamma;
  spec.n = n;
  spec.kind = ProfileKind::tabulated;
  spec.samples_path = good;
  GravityData gd(std::shared_ptr<const EnthalpyProfile>(make_profile(spec)));
  GravityData gref(std::make_shared<PolytropicProfile>(gamma, n, 1.0));
  CHECK(gd.g(0.5) == doctest::Approx(gref.g(0.5)).epsilon(1e-7));
  const auto good_rep = validate_profile(gd);
  CHECK(good_rep.checks[0].pass);
  CHECK(good_rep.checks[1].pass);
  CHECK(good_rep.identity_residual < 1e-4);
  spec.samples_path = bad;
  GravityData gbad(std::shared_ptr<const EnthalpyProfile>(make_profile(spec)));
  const auto rep = validate_profile(gbad);
  CHECK_FALSE(rep.checks.front().pass);
  spec.samples_path = "no_such_file.csv";
  CHECK_THROWS(make_profile(spec));
  std::remove(good.c_str());
  std::remove(bad.c_str());
}
