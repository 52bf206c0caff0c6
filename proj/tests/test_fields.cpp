#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "collapse/dust.hpp"
#include "collapse/fields.hpp"

using namespace collapse;

namespace {

std::vector<double> sample(int N, double (*f)(double)) {
  std::vector<double> v(N + 1);
  for (int i = 0; i <= N; ++i) v[i] = f(static_cast<double>(i) / N);
  return v;
}

double bump_odd(double r) { return r < 1.0 ? r * std::exp(-1.0 / (1.0 - r * r)) : 0.0; }
double bump_odd2(double r) { return r < 1.0 ? r * r * r * std::exp(-1.0 / (1.0 - r * r)) * (1.0 + r * r) : 0.0; }
double gauss_odd(double r) { return r * std::exp(-r * r); }

double sup_err(const std::vector<double>& a, const std::vector<double>& b, std::size_t skip = 0) {
  double e = 0.0;
  for (std::size_t i = 0; i + skip < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

std::shared_ptr<GravityData> polytrope(double n) {
  return std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, n, 1.0));
}

}  // namespace

TEST_CASE("D_r on monomials is exact") {
  const int N = 50;
  const double h = 1.0 / N;
  const auto f1 = sample(N, [](double r) { return r; });
  for (double v : div_r(f1, h)) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
  const auto f3 = sample(N, [](double r) { return r * r * r; });
  const auto d3 = div_r(f3, h);
  for (int i = 0; i <= N; ++i) CHECK(d3[i] == doctest::Approx(5.0 * i * h * i * h).epsilon(1e-10).scale(1.0));
}

TEST_CASE("D_r converges at fourth order") {
  auto err = [](int N) {
    const double h = 1.0 / N;
    const auto f = sample(N, gauss_odd);
    const auto d = div_r(f, h);
    std::vector<double> ref(N + 1);
    for (int i = 0; i <= N; ++i) {
      const double r = i * h;
      ref[i] = std::exp(-r * r) * (1.0 - 2.0 * r * r) + 2.0 * std::exp(-r * r);
    }
    return sup_err(d, ref);
  };
  const double e1 = err(50), e2 = err(100);
  INFO(e1 << " " << e2);
  CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("D_j chain identity") {
  const int N = 400;
  const auto X = sample(N, gauss_odd);
  for (int j = 1; j <= 3; ++j) {
    const double d = dchain_identity_defect(j, X, 1.0 / N);
    INFO("j = " << j << " defect " << d);
    CHECK(d < 1e-5);
  }
  // the defect is a truncation error and shrinks with the grid
  const auto Xc = sample(100, gauss_odd);
  CHECK(dchain_identity_defect(2, Xc, 1.0 / 100) > dchain_identity_defect(2, X, 1.0 / N));
  CHECK_THROWS(dchain_identity_defect(0, X, 1.0 / N));
}

TEST_CASE("L_k is symmetric against the weighted inner products") {
  auto gd = polytrope(4.0);
  std::vector<double> defects;
  for (int N : {200, 400, 800}) {
    const auto rp = sample_profile(*gd, N);
    const auto f = sample(N, bump_odd), h = sample(N, bump_odd2);
    for (double k : {rp.alpha, rp.alpha + 1.0, rp.alpha + 2.0}) CHECK(adjoint_defect(k, f, h, rp) < 1e-4);
    defects.push_back(adjoint_defect(rp.alpha + 1.0, f, h, rp));
  }
  INFO(defects[0] << " " << defects[1] << " " << defects[2]);
  CHECK(defects[1] < defects[0]);
  CHECK(defects[2] < defects[1]);
  CHECK(std::log2(defects[0] / defects[1]) > 3.0);
}

TEST_CASE("L_k on f = r") {
  auto gd = polytrope(4.0);
  const auto rp = sample_profile(*gd, 200);
  const auto f = sample(200, [](double r) { return r; });
  for (double k : {0.0, 2.5}) {
    const auto L = elliptic_l(k, f, rp);
    for (std::size_t i = 0; i < L.size(); i += 10) CHECK(L[i] == doctest::Approx(-3.0 * (1.0 + k) * rp.dw[i]).scale(1.0));
  }
}

TEST_CASE("weights") {
  CHECK(weight_q(-2.2, 0.0) == 1.0);
  CHECK(weight_p(0.0, 0.0, 0.7) == doctest::Approx(1.0));
  for (double lam : {0.5, 1.0, 3.0}) CHECK(weight_p(lam, -2.0 / 100.0, 1.0) == doctest::Approx(std::pow(2.0, -lam)));
  CHECK(weight_p(2.0, 1.0, 3.0) == doctest::Approx(27.0 / 16.0));
}

TEST_CASE("weighted inner products") {
  GravityData uni(std::make_shared<UniformProfile>(1.2));
  const auto ru = sample_profile(uni, 120);
  const std::vector<double> one(ru.r.size(), 1.0);
  CHECK(weighted_norm2(one, 0.0, ru) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  auto gd = polytrope(4.0);
  const auto rp = sample_profile(*gd, 300);
  const auto f = sample(300, gauss_odd), g = sample(300, bump_odd);
  for (double k : {0.0, 1.0, 2.0}) {
    const double ip = weighted_inner(f, g, k, rp);
    CHECK(ip * ip <= weighted_norm2(f, k, rp) * weighted_norm2(g, k, rp));
  }
  // integrate_uniform is exact on cubics for odd interval counts as well
  for (int N : {12, 13}) {
    const auto c = sample(N, [](double r) { return r * r * r - r; });
    CHECK(integrate_uniform(c, 1.0 / N) == doctest::Approx(-0.25).epsilon(1e-13));
  }
}

TEST_CASE("energies of the zero field vanish") {
  auto gd = polytrope(4.0);
  const auto rp = sample_profile(*gd, 200);
  const std::vector<double> z(rp.r.size(), 0.0);
  const auto e = energies(2, 0.3, 1e-3, z, z, rp);
  CHECK(e.E == 0.0);
  CHECK(e.D == 0.0);
}

TEST_CASE("pressure") {
  GravityData uni(std::make_shared<UniformProfile>(1.2));
  const auto ru = sample_profile(uni, 100);
  const std::vector<double> one(ru.r.size(), 1.0);
  const auto pu = pressure_s(one, ru);
  REQUIRE(pu.ok);
  for (double p : pu.P) CHECK(std::abs(p) < 1e-12);

  // the dust configuration in s against the closed form in tau
  auto gd = polytrope(4.0);
  const int N = 800;
  const auto rp = sample_profile(*gd, N);
  const double s = 0.5 / gd->g0();
  std::vector<double> chi(rp.r.size());
  for (std::size_t k = 0; k < chi.size(); ++k) chi[k] = *chi_dust(*gd, s, rp.r[k]);
  const auto pr = pressure_s(chi, rp);
  REQUIRE(pr.ok);
  double err = 0.0, scale = 0.0;
  for (std::size_t k = 1; k + 8 < chi.size(); ++k) {
    const double tau = 1.0 - rp.g[k] * s;
    const double ref = pressure_phi0(*gd, tau, rp.r[k]);
    err = std::max(err, std::abs(pr.P[k] / (rp.g[k] * rp.g[k]) - ref));
    scale = std::max(scale, std::abs(ref));
  }
  INFO(err << " " << scale);
  CHECK(err < 1e-6 * scale);

  // at J = 1 only the w' term survives, linear in the amplitude
  auto gd2 = std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, 4.0, 2.0));
  const auto rp2 = sample_profile(*gd2, N);
  const auto one2 = std::vector<double>(rp2.r.size(), 1.0);
  const auto p1 = pressure_s(std::vector<double>(rp.r.size(), 1.0), rp), p2 = pressure_s(one2, rp2);
  const double ratio = 2.0;
  for (std::size_t k = 0; k < p1.P.size(); k += 40) CHECK(p2.P[k] == doctest::Approx(ratio * p1.P[k]).scale(1e-12));

  // J <= 0 is reported
  chi[300] = -1.0;
  CHECK_FALSE(pressure_s(chi, rp).ok);
}
