#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "collapse/residual.hpp"

using namespace collapse;

namespace {

const Hierarchy& shared_hierarchy() {
  static const Hierarchy h(std::make_shared<GravityData>(std::make_shared<PolytropicProfile>(1.2, 100.0, 1.0)),
                           exponents(1.2, 100.0, 2), default_grid(100.0, 1e-4, 40, 12, 120));
  return h;
}

}  // namespace

TEST_CASE("M = 0 leaves only the pressure of the dust profile") {
  const auto& h = shared_hierarchy();
  const double eps = 1e-3;
  const auto S = source_residual(h, 0, eps);
  for (std::size_t it = 0; it < h.nt(); it += 7)
    for (std::size_t ir = 0; ir < h.nr(); ir += 3) {
      const double ref = -eps * pressure_phi0(h.gravity(), h.grid().tau[it], h.grid().r[ir]);
      CHECK(std::abs(S.at(it, ir) - ref) <= 1e-10 * std::abs(ref) + 1e-300);
    }
}

TEST_CASE("eps = 0 gives a vanishing defect") {
  const auto& h = shared_hierarchy();
  for (int M : {0, 1, 2}) {
    const auto S = source_residual(h, M, 0.0);
    for (double v : S.value) CHECK(v == 0.0);
  }
}

TEST_CASE("eliminated and differenced second derivatives agree") {
  const auto& h = shared_hierarchy();
  for (int M : {0, 1, 2}) CHECK(residual_crosscheck(h, M, 1e-3, 1e-3, 0.3) < 1e-8);
}

TEST_CASE("halving eps divides the M = 1 defect by four") {
  const auto& h = shared_hierarchy();
  const auto a = residual_norms(h, source_residual(h, 1, 2e-4));
  const auto b = residual_norms(h, source_residual(h, 1, 1e-4));
  for (std::size_t it = 20; it < h.nt() - 20; it += 10) {
    INFO("tau " << h.grid().tau[it]);
    CHECK(std::log2(a.weighted[it] / b.weighted[it]) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("raising M lowers the defect at small eps") {
  const auto& h = shared_hierarchy();
  std::vector<ResidualNorms> n;
  for (int M : {0, 1, 2}) n.push_back(residual_norms(h, source_residual(h, M, 1e-4)));
  for (std::size_t it = 10; it + 1 < h.nt(); ++it) {
    CHECK(n[1].weighted[it] < n[0].weighted[it]);
    CHECK(n[2].weighted[it] < n[1].weighted[it]);
  }
}

TEST_CASE("non-positive phi_app is rejected") {
  CHECK_THROWS_AS(source_residual(shared_hierarchy(), 1, 1e6), std::runtime_error);
  CHECK_THROWS_AS(source_residual(shared_hierarchy(), 3, 1e-3), std::invalid_argument);
}

TEST_CASE("scaling study on the weighted norm") {
  const auto& h = shared_hierarchy();
  const auto scan = scaling_study(h, {0, 1}, {1e-3, 5e-4, 2.5e-4, 1.25e-4});
  REQUIRE(scan.summary.size() == 2);
  CHECK(scan.entries.size() == 8);
  for (const auto& s : scan.summary) {
    INFO("M = " << s.M << " eps slope " << s.eps_slope_weighted << " tau slope " << s.tau_slope_weighted);
    CHECK(s.eps_pass);
    CHECK(std::abs(s.eps_slope_weighted - (s.M + 1)) < 0.1);
    CHECK(std::abs(s.tau_slope_weighted - s.expected_tau_slope) < 0.1);
  }
  CHECK(scan.summary[0].eps_slope_sup == doctest::Approx(1.0).epsilon(1e-9));
}
