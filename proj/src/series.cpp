#include "collapse/series.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <random>

namespace collapse {

namespace {

void enumerate(int part, int remaining_n, int remaining_k, Partition& cur, std::vector<Partition>& out) {
  // assign lambda_part for part = n..1, largest block size first
  if (part == 0) {
    if (remaining_n == 0 && remaining_k == 0) out.push_back(cur);
    return;
  }
  for (int c = std::min(remaining_k, remaining_n / part); c >= 0; --c) {
    cur[part - 1] = c;
    enumerate(part - 1, remaining_n - c * part, remaining_k - c, cur, out);
    cur[part - 1] = 0;
  }
}

}  // namespace

const std::vector<Partition>& partitions(int n, int k) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<Partition>> cache;
  if (n < 1 || k < 1 || k > n) {
    static const std::vector<Partition> empty;
    return empty;
  }
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({n, k});
  if (it != cache.end()) return it->second;
  std::vector<Partition> out;
  Partition cur(n, 0);
  enumerate(n, n, k, cur, out);
  return cache.emplace(std::make_pair(n, k), std::move(out)).first->second;
}

std::size_t partition_count_bruteforce(int n, int k) {
  // every tuple with 0 <= lambda_i <= n / i
  std::size_t count = 0;
  Partition cur(n, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i > n) {
      int s = 0, w = 0;
      for (int t = 1; t <= n; ++t) {
        s += cur[t - 1];
        w += t * cur[t - 1];
      }
      if (s == k && w == n) ++count;
      return;
    }
    for (int c = 0; c <= n / i; ++c) {
      cur[i - 1] = c;
      rec(i + 1);
    }
    cur[i - 1] = 0;
  };
  rec(1);
  return count;
}

double falling_factorial(double a, int k) {
  long double r = 1.0L;
  for (int i = 0; i < k; ++i) r *= static_cast<long double>(a) - i;
  return static_cast<double>(r);
}

double multinomial_weight(int n, const Partition& p) {
  long double r = factorial(n);
  for (int v : p) r /= factorial(v);
  return static_cast<double>(r);
}

Jet m_g_jet(int order, double tau0, const ProfileJet& pj) {
  return (Jet::tau_variable(order, tau0) - 1.0) * pj.L.truncated(std::min(order, pj.L.order()));
}

Jet lambda_jet(const Jet& f, const Jet& m_g) { return m_g * f.d_tau() + f.d_rho(); }

Jet pressure_tau_jet(const Jet& phi, double tau0, const ProfileJet& pj, double gamma) {
  const int K = phi.order() - 2;
  if (K < 0) throw std::invalid_argument("pressure needs a jet of order >= 2");
  const double alpha = 1.0 / (gamma - 1.0);
  const Jet mg = m_g_jet(K + 2, tau0, pj);
  const Jet J = phi * phi * (phi.truncated(K + 1) + lambda_jet(phi, mg));
  const Jet Jg = pow(J, -gamma);
  const Jet bracket = (1.0 + alpha) * pj.rw * Jg + pj.w * lambda_jet(Jg, mg);
  return (phi * phi * pj.inv_r2 / pj.g2 * bracket).truncated(K);
}

Jet f_rhs(int j, int K, double tau0, const std::vector<Jet>& phi, const ProfileJet& pj, double gamma) {
  if (j < 1) throw std::invalid_argument("f_rhs needs j >= 1");
  if (static_cast<int>(phi.size()) < j) throw std::invalid_argument("f_rhs: missing iterate");
  const double alpha = 1.0 / (gamma - 1.0);
  const int K1 = K + 1;
  const Jet mg = m_g_jet(K1, tau0, pj);
  std::vector<Jet> ph(j), lph(j);
  for (int c = 0; c < j; ++c) {
    if (phi[c].order() < K + 2) throw std::invalid_argument("f_rhs: iterate jet order too low");
    ph[c] = phi[c].truncated(K1);
    lph[c] = lambda_jet(phi[c].truncated(K + 2), mg);
  }
  const Jet J0 = jacobian_mode<Jet>(0, ph, lph);
  const Jet invJ0 = reciprocal(J0);
  std::vector<Jet> jbar(j);
  jbar[0] = Jet(K1, 1.0);
  for (int i = 1; i < j; ++i) jbar[i] = jacobian_mode<Jet>(i, ph, lph) * invJ0;
  const std::vector<Jet> h = h_modes<Jet>(j - 1, gamma, jbar);
  const Jet J0g = pow(J0, -gamma);

  Jet pressure(K);
  for (int m = 0; m <= j - 1; ++m) {
    const int i = j - 1 - m;
    Jet S(K1);
    for (int k = 0; k <= i; ++k) S += ph[k] * ph[i - k];
    const Jet Q = J0g * h[m] * (1.0 / factorial(m));
    const Jet bracket = (1.0 + alpha) * pj.rw * Q + pj.w * lambda_jet(Q, mg);
    pressure += S * bracket;
  }
  pressure = pressure * pj.inv_r2 / pj.g2;

  Jet f = -pressure;
  if (j >= 2) {
    const Jet ot = o_tilde<Jet>(j, ph);
    f += ot * pow(ph[0], -2.0) * (-2.0 / 9.0 / factorial(j));
  }
  return f.truncated(K);
}

TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b) {
  TruncatedSeries c(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; i + j < a.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

TruncatedSeries series_inverse_power(const TruncatedSeries& u, double nu) {
  TruncatedSeries out(u.size(), 0.0), up(u.size(), 0.0);
  up[0] = 1.0;
  double binom = 1.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] += binom * up[i];
    binom *= (-nu - static_cast<double>(k)) / static_cast<double>(k + 1);
    up = series_mul(up, u);
  }
  return out;
}

SeriesOracleReport series_oracle(double gamma, int jmax, int partition_nmax, unsigned seed, int trials) {
  SeriesOracleReport rep;
  rep.jmax = jmax;
  rep.partition_nmax = partition_nmax;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::size_t n = jmax + 1;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) x[i] = U(rng);
    TruncatedSeries u(x);
    u[0] = 0.0;
    for (double nu : {2.0, gamma}) {
      const auto F = inverse_power_coeffs<double>(nu, x, jmax);
      const auto ref = series_inverse_power(u, nu);
      for (int j = 0; j <= jmax; ++j)
        rep.max_err_F = std::max(rep.max_err_F, std::abs(F[j] / factorial(j) - ref[j]) / std::max(1.0, std::abs(ref[j])));
    }
    // phi_0 > 0 and phi_0 + Lambda phi_0 > 0 keep J_0 away from zero
    std::vector<double> phi(n), lam(n);
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = U(rng);
      lam[i] = U(rng);
    }
    phi[0] = 1.0 + 0.5 * std::abs(phi[0]);
    lam[0] = 0.2 * lam[0];
    const TruncatedSeries J = series_mul(series_mul(phi, phi), [&] {
      TruncatedSeries s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = phi[i] + lam[i];
      return s;
    }());
    TruncatedSeries Jbar(n), ubar(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) Jbar[i] = jacobian_mode<double>(static_cast<int>(i), phi, lam) / J[0];
    for (std::size_t i = 1; i < n; ++i) ubar[i] = J[i] / J[0];
    const auto h = h_modes<double>(jmax, gamma, Jbar);
    const auto ref = series_inverse_power(ubar, gamma);
    for (int j = 0; j <= jmax; ++j)
      rep.max_err_h = std::max(rep.max_err_h, std::abs(h[j] / factorial(j) - ref[j]) / std::max(1.0, std::abs(ref[j])));
  }
  rep.partitions_match = true;
  for (int a = 1; a <= partition_nmax; ++a)
    for (int k = 1; k <= a; ++k)
      if (partitions(a, k).size() != partition_count_bruteforce(a, k)) rep.partitions_match = false;
  return rep;
}

}  // namespace collapse
