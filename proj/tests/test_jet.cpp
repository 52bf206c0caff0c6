#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "collapse/jet.hpp"

using collapse::Jet;

namespace {

// f(tau, rho) = exp(tau * rho) * (1 + tau)^(-1.3) evaluated through jets
Jet sample(int K, double t0, double r0) {
  const Jet t = Jet::tau_variable(K, t0);
  const Jet r = Jet::rho_variable(K, r0);
  return collapse::exp(t * r) * collapse::pow(1.0 + t, -1.3);
}

}  // namespace

TEST_CASE("jet arithmetic matches finite differences") {
  const double t0 = 0.4, r0 = -0.2;
  const Jet f = sample(6, t0, r0);
  auto F = [](double t, double r) { return std::exp(t * r) * std::pow(1.0 + t, -1.3); };
  CHECK(f.value() == doctest::Approx(F(t0, r0)).epsilon(1e-15));
  const double h = 1e-4;
  const double ft = (F(t0 + h, r0) - F(t0 - h, r0)) / (2 * h);
  const double fr = (F(t0, r0 + h) - F(t0, r0 - h)) / (2 * h);
  const double ftr = (F(t0 + h, r0 + h) - F(t0 + h, r0 - h) - F(t0 - h, r0 + h) + F(t0 - h, r0 - h)) / (4 * h * h);
  CHECK(f.derivative(1, 0) == doctest::Approx(ft).epsilon(1e-7));
  CHECK(f.derivative(0, 1) == doctest::Approx(fr).epsilon(1e-7));
  CHECK(f.derivative(1, 1) == doctest::Approx(ftr).epsilon(1e-6));
}

TEST_CASE("derivative operators commute with the expansion") {
  const Jet f = sample(6, 0.3, 0.1);
  const Jet ft = f.d_tau();
  const Jet fr = f.d_rho();
  CHECK(ft.order() == 5);
  for (int i = 0; i + 1 <= 5; ++i)
    for (int j = 0; i + j <= 4; ++j) {
      CHECK(ft.d_rho().derivative(i, j) == doctest::Approx(fr.d_tau().derivative(i, j)).epsilon(1e-13));
      CHECK(ft.derivative(i, j) == doctest::Approx(f.derivative(i + 1, j)).epsilon(1e-13));
    }
}

TEST_CASE("pow, log, exp and reciprocal are mutually consistent") {
  const Jet f = 2.0 + sample(5, 0.2, 0.3);
  const Jet a = collapse::pow(f, 2.5);
  const Jet b = collapse::exp(collapse::log(f) * 2.5);
  const Jet c = f * collapse::reciprocal(f);
  for (int d = 0; d <= 5; ++d)
    for (int j = 0; j <= d; ++j) {
      CHECK(a.at(d - j, j) == doctest::Approx(b.at(d - j, j)).epsilon(1e-12).scale(1.0));
      CHECK(c.at(d - j, j) == doctest::Approx(d == 0 ? 1.0 : 0.0).epsilon(1e-13).scale(1.0));
    }
}

TEST_CASE("pow with vanishing base") {
  Jet u(4);
  u.at(0, 1) = 2.0;  // u = 2 b
  const Jet five = collapse::pow(u, 5.0);
  CHECK(five.at(0, 4) == 0.0);
  const Jet cube = collapse::pow(u, 3.0);
  CHECK(cube.at(0, 3) == doctest::Approx(8.0));
  const Jet frac = collapse::pow(u, 4.5);
  for (int k = 0; k <= 4; ++k) CHECK(frac.at(0, k) == 0.0);
  CHECK_THROWS(collapse::pow(u, 2.5));
}

TEST_CASE("truncation and mixed order arithmetic") {
  const Jet a = sample(6, 0.1, 0.1);
  const Jet b = sample(3, 0.1, 0.1);
  CHECK((a * b).order() == 3);
  CHECK((a + b).order() == 3);
  CHECK(a.truncated(3).at(1, 2) == a.at(1, 2));
  CHECK_THROWS(b.truncated(4));
}
