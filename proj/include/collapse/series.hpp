#pragma once

// Partition sets, Faa di Bruno composition and the expansion coefficients of the
// epsilon-series: O~_j, the Jacobian modes, h_j and the hierarchy sources f_j.
//
// The coefficient templates work for any T with +, -, * by T and by double:
// plain doubles for oracles, Jets for pointwise evaluation with derivatives.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "collapse/jet.hpp"
#include "collapse/profiles.hpp"

namespace collapse {

// (lambda_1, ..., lambda_n) with sum lambda_i = k and sum i lambda_i = n
using Partition = std::vector<int>;

// memoized, immutable after first use
const std::vector<Partition>& partitions(int n, int k);
std::size_t partition_count_bruteforce(int n, int k);

// a (a-1) ... (a-k+1), accumulated in long double
double falling_factorial(double a, int k);
// n! / (lambda_1! ... lambda_n!)
double multinomial_weight(int n, const Partition& p);

inline double reciprocal_of(double v) { return 1.0 / v; }
inline Jet reciprocal_of(const Jet& v) { return reciprocal(v); }

namespace detail {
template <class T>
T power(const T& x, int e, const T& one) {
  T r = one;
  for (int i = 0; i < e; ++i) r = r * x;
  return r;
}
}  // namespace detail

// h_n for h = f o g with f = sum f_k x^k / k!, g = sum_{k>=1} g_k x^k / k!
template <class T>
T faa_di_bruno(std::span<const T> f, std::span<const T> g, int n) {
  if (n == 0) return f[0];
  T one = f[0] * 0.0 + 1.0;
  T acc = f[0] * 0.0;
  for (int k = 1; k <= n; ++k) {
    for (const auto& p : partitions(n, k)) {
      T term = one;
      for (int i = 1; i <= n; ++i)
        if (p[i - 1]) term = term * detail::power(g[i] * (1.0 / factorial(i)), p[i - 1], one);
      acc += f[k] * term * multinomial_weight(n, p);
    }
  }
  return acc;
}

// F_0..F_M of (1 + sum_{i>=1} eps^i x_i)^(-nu) = sum eps^j F_j / j!; x[0] is ignored.
// min_k drops partitions with fewer than min_k blocks (min_k = 2 gives O~ for nu = 2).
template <class T>
std::vector<T> inverse_power_coeffs(double nu, std::span<const T> x, int M, int min_k = 1) {
  T one = x[1] * 0.0 + 1.0;
  std::vector<T> F;
  F.reserve(M + 1);
  F.push_back(one);
  for (int j = 1; j <= M; ++j) {
    T acc = x[1] * 0.0;
    for (int k = std::max(1, min_k); k <= j; ++k) {
      const double ff = falling_factorial(-nu, k);
      for (const auto& p : partitions(j, k)) {
        T term = one;
        for (int i = 1; i <= j; ++i)
          if (p[i - 1]) term = term * detail::power(x[i], p[i - 1], one);
        acc += term * (ff * multinomial_weight(j, p));
      }
    }
    F.push_back(acc);
  }
  return F;
}

// O~_j built from phi_0..phi_{j-1} (k >= 2 partitions of (1 + sum eps^i phi_i/phi_0)^-2)
template <class T>
T o_tilde(int j, std::span<const T> phi) {
  if (j < 1) throw std::invalid_argument("o_tilde needs j >= 1");
  if (static_cast<int>(phi.size()) < j) throw std::invalid_argument("o_tilde: missing iterate");
  std::vector<T> x;
  x.reserve(j + 1);
  const T r0 = reciprocal_of(phi[0]);
  x.push_back(phi[0] * 0.0);
  for (int i = 1; i <= j; ++i) x.push_back(i < j ? phi[i] * r0 : phi[0] * 0.0);
  return inverse_power_coeffs<T>(2.0, x, j, 2)[j];
}

// Jacobian modes J_k = sum_{m+i+l=k} phi_m phi_i (phi_l + Lambda phi_l)
template <class T>
T jacobian_mode(int k, std::span<const T> phi, std::span<const T> lambda_phi) {
  if (static_cast<int>(phi.size()) <= k || static_cast<int>(lambda_phi.size()) <= k)
    throw std::invalid_argument("jacobian_mode: missing iterate or Lambda data");
  T acc = phi[0] * 0.0;
  for (int m = 0; m <= k; ++m)
    for (int i = 0; m + i <= k; ++i) {
      const int l = k - m - i;
      acc += phi[m] * phi[i] * (phi[l] + lambda_phi[l]);
    }
  return acc;
}

// h_j of (J/J_0)^(-gamma) = sum eps^j h_j / j! with modes Jbar_i = J_i / J_0; h_0 = 1
template <class T>
std::vector<T> h_modes(int M, double gamma, std::span<const T> jbar) {
  if (M == 0) return {jbar[0] * 0.0 + 1.0};
  return inverse_power_coeffs<T>(gamma, jbar, M);
}

// Right-hand side f_j as a jet of the requested order at (tau0, r0), given jets of
// phi_0..phi_{j-1} of order at least order + 2.
//   f_j = -(2/9) phi_0^-2 O~_j / j!
//         - (1/(g^2 r^2)) sum_{m+i=j-1} sum_{k<=i} phi_k phi_{i-k}
//             [(1+alpha) r w' Q_m + w Lambda Q_m],  Q_m = J_0^-gamma h_m / m!
Jet f_rhs(int j, int order, double tau0, const std::vector<Jet>& phi, const ProfileJet& pj, double gamma);

// Lambda f = M_g d_tau f + d_rho f with M_g = (tau - 1) L
Jet lambda_jet(const Jet& f, const Jet& m_g);
Jet m_g_jet(int order, double tau0, const ProfileJet& pj);

// Coefficients of sum eps^j x_j truncated at degree x.size() - 1
using TruncatedSeries = std::vector<double>;
TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b);
// (1 + u)^(-nu) for u without constant term, by the binomial series
TruncatedSeries series_inverse_power(const TruncatedSeries& u, double nu);

// The composition coefficients against direct truncated-series arithmetic on seeded random data:
// F_j of (1 + sum eps^i x_i)^(-nu) for nu in {2, gamma}, and h_j from Jacobian modes against
// ((phi^2 (phi + Lambda phi)) / J_0)^(-gamma) built by series multiplication.
struct SeriesOracleReport {
  int jmax = 4;
  double max_err_F = 0.0;
  double max_err_h = 0.0;
  int partition_nmax = 8;
  bool partitions_match = false;
  bool pass(double tol = 1e-12) const { return partitions_match && max_err_F < tol && max_err_h < tol; }
};
SeriesOracleReport series_oracle(double gamma, int jmax = 4, int partition_nmax = 8, unsigned seed = 7, int trials = 20);

// pressure P[phi] in tau-coordinates, w-regular form
//   phi^2 / (g^2 r^2) [(1+alpha) r w' J^-gamma - gamma w J^(-gamma-1) Lambda J]
Jet pressure_tau_jet(const Jet& phi, double tau0, const ProfileJet& pj, double gamma);

}  // namespace collapse
