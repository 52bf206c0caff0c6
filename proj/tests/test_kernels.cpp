#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "collapse/kernels.hpp"

using namespace collapse::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree bit for bit") {
  if (!avx2_available()) {
    MESSAGE("no AVX2 on this CPU, equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(12345);
  for (std::size_t n : {5u, 8u, 13u, 64u, 1001u}) {
    const auto f = random_vec(rng, n), g = random_vec(rng, n), w = random_vec(rng, n);
    const auto k2 = random_vec(rng, n), k3 = random_vec(rng, n), k4 = random_vec(rng, n);
    std::vector<double> a(n, 0.0), b(n, 0.0);

    if (n >= 5) {
      scalar::fd1(f.data(), a.data(), 2, n - 2, 0.37);
      avx2::fd1(f.data(), b.data(), 2, n - 2, 0.37);
      CHECK(bit_equal(a, b));
      scalar::fd2(f.data(), a.data(), 2, n - 2, 1.9);
      avx2::fd2(f.data(), b.data(), 2, n - 2, 1.9);
      CHECK(bit_equal(a, b));
    }
    scalar::axpy(f.data(), g.data(), 0.125, a.data(), n);
    avx2::axpy(f.data(), g.data(), 0.125, b.data(), n);
    CHECK(bit_equal(a, b));
    scalar::rk4_combine(f.data(), g.data(), k2.data(), k3.data(), k4.data(), 1.0 / 6.0, a.data(), n);
    avx2::rk4_combine(f.data(), g.data(), k2.data(), k3.data(), k4.data(), 1.0 / 6.0, b.data(), n);
    CHECK(bit_equal(a, b));
    const double ds = scalar::weighted_dot(w.data(), f.data(), g.data(), n);
    const double dv = avx2::weighted_dot(w.data(), f.data(), g.data(), n);
    CHECK(std::memcmp(&ds, &dv, sizeof ds) == 0);
  }
}

TEST_CASE("scalar kernels match plain loops") {
  std::mt19937_64 rng(7);
  const std::size_t n = 40;
  const auto f = random_vec(rng, n), g = random_vec(rng, n), w = random_vec(rng, n);
  std::vector<double> out(n, 0.0);
  scalar::fd1(f.data(), out.data(), 2, n - 2, 1.0 / 12.0);
  for (std::size_t i = 2; i < n - 2; ++i)
    CHECK(out[i] == doctest::Approx((f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / 12.0));
  CHECK(out[0] == 0.0);
  CHECK(out[n - 1] == 0.0);
  double ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) ref += w[i] * f[i] * g[i];
  CHECK(scalar::weighted_dot(w.data(), f.data(), g.data(), n) == doctest::Approx(ref));
  // linear stencil is exact on quadratics for fd2
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = 0.5 * static_cast<double>(i * i);
  scalar::fd2(q.data(), out.data(), 2, n - 2, 1.0 / 12.0);
  for (std::size_t i = 2; i < n - 2; ++i) CHECK(out[i] == doctest::Approx(1.0));
}

TEST_CASE("dispatch") {
  CHECK(std::string(to_string(Isa::scalar)) == "scalar");
  CHECK(std::string(to_string(Isa::avx2)) == "avx2");
  CHECK(force_isa(Isa::scalar));
  CHECK(active_isa() == Isa::scalar);
  std::vector<double> y{1, 2, 3, 4, 5}, k{1, 1, 1, 1, 1}, out(5);
  axpy(y.data(), k.data(), 2.0, out.data(), 5);
  CHECK(out[4] == 7.0);
  if (avx2_available()) {
    CHECK(force_isa(Isa::avx2));
    CHECK(active_isa() == Isa::avx2);
    axpy(y.data(), k.data(), 2.0, out.data(), 5);
    CHECK(out[4] == 7.0);
  } else {
    CHECK_FALSE(force_isa(Isa::avx2));
  }
}
