#include "collapse/fields.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "collapse/kernels.hpp"

namespace collapse {

namespace {
constexpr double kPi = std::numbers::pi;

void check_size(std::span<const double> f) {
  if (f.size() < 6) throw std::invalid_argument("radial stencils need at least 6 samples");
}
}  // namespace

std::vector<double> uniform_grid(int intervals) {
  if (intervals < 1) throw std::invalid_argument("uniform_grid: need at least one interval");
  std::vector<double> r(intervals + 1);
  for (int k = 0; k <= intervals; ++k) r[k] = static_cast<double>(k) / intervals;
  r.back() = 1.0;
  return r;
}

std::vector<double> geometric_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw std::invalid_argument("geometric_grid: bad range");
  const int n = std::max(2, static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9)));
  std::vector<double> t(n + 1);
  const double q = std::log(hi / lo) / n;
  for (int i = 0; i <= n; ++i) t[i] = lo * std::exp(q * i);
  t.front() = lo;
  t.back() = hi;
  return t;
}

std::vector<double> d_dr(std::span<const double> f, double h, Parity p, std::size_t lo) {
  check_size(f);
  const std::size_t N = f.size() - 1;
  if (lo + 5 > N) throw std::invalid_argument("d_dr: active range too short");
  std::vector<double> d(f.size(), 0.0);
  const double c = 1.0 / (12.0 * h);
  kernels::fd1(f.data(), d.data(), std::max<std::size_t>(lo + 2, 2), N - 1, c);
  if (lo == 0) {
    const double s = p == Parity::even ? 1.0 : -1.0;
    // ghosts f(-k) = s f(k)
    d[0] = ((s * f[2] - 8.0 * s * f[1]) + (8.0 * f[1] - f[2])) * c;
    d[1] = ((s * f[1] - 8.0 * f[0]) + (8.0 * f[2] - f[3])) * c;
  } else {
    const double* g = f.data() + lo;
    d[lo] = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) * c;
    d[lo + 1] = (-3.0 * g[0] - 10.0 * g[1] + 18.0 * g[2] - 6.0 * g[3] + g[4]) * c;
  }
  const double* g = f.data() + N;
  d[N] = (25.0 * g[0] - 48.0 * g[-1] + 36.0 * g[-2] - 16.0 * g[-3] + 3.0 * g[-4]) * c;
  d[N - 1] = (3.0 * g[0] + 10.0 * g[-1] - 18.0 * g[-2] + 6.0 * g[-3] - g[-4]) * c;
  return d;
}

std::vector<double> d2_dr2(std::span<const double> f, double h, Parity p, std::size_t lo) {
  check_size(f);
  const std::size_t N = f.size() - 1;
  if (lo + 6 > N) throw std::invalid_argument("d2_dr2: active range too short");
  std::vector<double> d(f.size(), 0.0);
  const double c = 1.0 / (12.0 * h * h);
  kernels::fd2(f.data(), d.data(), std::max<std::size_t>(lo + 2, 2), N - 1, c);
  if (lo == 0) {
    const double s = p == Parity::even ? 1.0 : -1.0;
    d[0] = ((16.0 * (s * f[1] + f[1]) - 30.0 * f[0]) - (s * f[2] + f[2])) * c;
    d[1] = ((16.0 * (f[0] + f[2]) - 30.0 * f[1]) - (s * f[1] + f[3])) * c;
  } else {
    const double* g = f.data() + lo;
    d[lo] = (45.0 * g[0] - 154.0 * g[1] + 214.0 * g[2] - 156.0 * g[3] + 61.0 * g[4] - 10.0 * g[5]) * c;
    d[lo + 1] = (10.0 * g[0] - 15.0 * g[1] - 4.0 * g[2] + 14.0 * g[3] - 6.0 * g[4] + g[5]) * c;
  }
  const double* g = f.data() + N;
  d[N] = (45.0 * g[0] - 154.0 * g[-1] + 214.0 * g[-2] - 156.0 * g[-3] + 61.0 * g[-4] - 10.0 * g[-5]) * c;
  d[N - 1] = (10.0 * g[0] - 15.0 * g[-1] - 4.0 * g[-2] + 14.0 * g[-3] - 6.0 * g[-4] + g[-5]) * c;
  return d;
}

std::vector<double> div_r(std::span<const double> f, double h) {
  std::vector<double> d = d_dr(f, h, Parity::odd);
  d[0] *= 3.0;
  for (std::size_t k = 1; k < f.size(); ++k) d[k] += 2.0 * f[k] / (k * h);
  return d;
}

std::vector<double> dj_chain(int j, std::span<const double> f, double h) {
  if (j < 0 || j > 6) throw std::invalid_argument("dj_chain: order outside the supported range 0..6");
  std::vector<double> cur(f.begin(), f.end());
  for (int step = 0; step < j; ++step) cur = step % 2 == 0 ? div_r(cur, h) : d_dr(cur, h, Parity::even);
  return cur;
}

std::vector<double> dbar_chain(int j, std::span<const double> f, double h) {
  if (j == 0) return {f.begin(), f.end()};
  return dj_chain(j - 1, d_dr(f, h, Parity::even), h);
}

RadialProfile sample_profile(const GravityData& gd, int intervals) {
  RadialProfile rp;
  const auto& p = gd.profile();
  rp.h = 1.0 / intervals;
  rp.alpha = p.alpha();
  rp.gamma = p.gamma();
  rp.n = p.flatness();
  rp.r = uniform_grid(intervals);
  const std::size_t n = rp.r.size();
  rp.w.resize(n);
  rp.dw.resize(n);
  rp.rw.resize(n);
  rp.w_alpha.resize(n);
  rp.G.resize(n);
  rp.g.resize(n);
  rp.L.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = rp.r[k];
    rp.w[k] = std::max(0.0, p.w(r));
    rp.dw[k] = p.dw(r);
    rp.rw[k] = r * rp.dw[k];
    rp.w_alpha[k] = p.w_alpha(r);
    rp.G[k] = gd.G(r);
    rp.g[k] = gd.g(r);
    rp.L[k] = gd.L(r);
  }
  return rp;
}

std::vector<double> elliptic_l(double k, std::span<const double> f, const RadialProfile& rp) {
  const auto Df = div_r(f, rp.h);
  const auto dDf = d_dr(Df, rp.h, Parity::even);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = -rp.w[i] * dDf[i] - (1.0 + k) * rp.dw[i] * Df[i];
  return out;
}

std::vector<double> elliptic_l_star(double k, std::span<const double> f, const RadialProfile& rp) {
  const auto df = d_dr(f, rp.h, Parity::even);
  const auto Ddf = div_r(df, rp.h);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = -rp.w[i] * Ddf[i] - (1.0 + k) * rp.dw[i] * df[i];
  return out;
}

namespace {

// composite Simpson, with the 3/8 rule on the last three intervals when N is odd
std::vector<double> quadrature_weights(std::size_t N, double h) {
  if (N < 4) throw std::invalid_argument("integrate_uniform: need at least 4 intervals");
  std::vector<double> q(N + 1, 0.0);
  const std::size_t ns = N % 2 ? N - 3 : N;
  for (std::size_t i = 0; i + 2 <= ns; i += 2) {
    q[i] += h / 3.0;
    q[i + 1] += 4.0 * h / 3.0;
    q[i + 2] += h / 3.0;
  }
  if (N % 2) {
    q[ns] += 3.0 * h / 8.0;
    q[ns + 1] += 9.0 * h / 8.0;
    q[ns + 2] += 9.0 * h / 8.0;
    q[ns + 3] += 3.0 * h / 8.0;
  }
  return q;
}

}  // namespace

double integrate_uniform(std::span<const double> F, double h) {
  const auto q = quadrature_weights(F.size() - 1, h);
  std::vector<double> one(F.size(), 1.0);
  return kernels::weighted_dot(q.data(), F.data(), one.data(), F.size());
}

double weighted_inner(std::span<const double> f, std::span<const double> g, double k, const RadialProfile& rp) {
  if (f.size() != rp.r.size() || g.size() != rp.r.size()) throw std::invalid_argument("weighted_inner: size mismatch");
  auto q = quadrature_weights(rp.r.size() - 1, rp.h);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] *= std::pow(rp.w[i], rp.alpha + k) * rp.r[i] * rp.r[i];
  return kernels::weighted_dot(q.data(), f.data(), g.data(), q.size());
}

double adjoint_defect(double k, std::span<const double> f, std::span<const double> h, const RadialProfile& rp) {
  const auto Lh = elliptic_l(k, h, rp);
  const auto Df = div_r(f, rp.h), Dh = div_r(h, rp.h);
  // weighted_inner carries w^(alpha + shift)
  const double lhs = weighted_inner(f, Lh, k - rp.alpha, rp);
  const double rhs = weighted_inner(Df, Dh, k + 1.0 - rp.alpha, rp);
  return std::abs(lhs - rhs) / std::abs(rhs);
}

double dchain_identity_defect(int j, std::span<const double> X, double h, std::size_t skip_right) {
  if (j < 1) throw std::invalid_argument("dchain identity needs j >= 1");
  const std::size_t n = X.size();
  std::vector<double> Y(n);
  Y[0] = d_dr(X, h, Parity::odd)[0];
  for (std::size_t i = 1; i < n; ++i) Y[i] = X[i] / (i * h);
  const auto lhs = dj_chain(j, X, h);
  const auto B = dbar_chain(j - 1, Y, h);
  const auto dB = d_dr(B, h, dbar_parity(j - 1));
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i + skip_right < n; ++i) {
    const double rhs = i * h * dB[i] + (j + 2.0) * B[i];
    diff = std::max(diff, std::abs(lhs[i] - rhs));
    scale = std::max(scale, std::abs(lhs[i]));
  }
  return diff / scale;
}

PressureResult pressure_s(std::span<const double> chi, const RadialProfile& rp, std::size_t lo) {
  const std::size_t n = chi.size();
  if (n != rp.r.size()) throw std::invalid_argument("pressure_s: size mismatch");
  PressureResult res;
  res.P.assign(n, 0.0);
  res.J.assign(n, 0.0);
  const auto chi_r = d_dr(chi, rp.h, Parity::even, lo);
  std::vector<double> Jg(n, 0.0);
  for (std::size_t k = lo; k < n; ++k) {
    const double c = chi[k];
    const double J = c * c * (c + rp.r[k] * chi_r[k]);
    res.J[k] = J;
    if (!(J > 0.0)) {
      if (res.ok) res.bad_index = k;
      res.ok = false;
      continue;
    }
    Jg[k] = std::pow(J, -rp.gamma);
  }
  if (!res.ok) return res;
  const auto dJg = d_dr(Jg, rp.h, Parity::even, lo);
  for (std::size_t k = std::max<std::size_t>(lo, 1); k < n; ++k) {
    const double r = rp.r[k];
    const double c = chi[k];
    res.P[k] = c * c / (r * r) * ((1.0 + rp.alpha) * rp.rw[k] * Jg[k] + rp.w[k] * r * dJg[k]);
  }
  if (lo == 0) {
    // r -> 0: r w' / r^2 -> w''(0) and r d_r F / r^2 -> F''(0) for even F
    const auto d2w = d2_dr2(rp.w, rp.h, Parity::even);
    const auto d2J = d2_dr2(Jg, rp.h, Parity::even);
    res.P[0] = chi[0] * chi[0] * ((1.0 + rp.alpha) * d2w[0] * Jg[0] + rp.w[0] * d2J[0]);
  }
  return res;
}

double r_dL(const GravityData& gd, double r) {
  const auto& p = gd.profile();
  const double a = p.alpha();
  const double w = std::max(0.0, p.w(r));
  const double g = gd.g(r);
  const double wa1 = a == 1.0 ? 1.0 : std::pow(w, a - 1.0);
  return 9.0 * kPi * (a * wa1 * r * p.dw(r) - 2.0 * p.w_alpha(r) * gd.L(r)) / (g * g);
}

double pressure_phi0(const GravityData& gd, double tau, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("pressure_phi0 needs r > 0");
  const auto& p = gd.profile();
  const double gamma = p.gamma(), alpha = p.alpha();
  const double L = gd.L(r);
  const double M = (tau - 1.0) * L;
  const double J = tau * tau + 2.0 / 3.0 * M * tau;
  // Lambda J = M d_tau J + r d_r J with d_tau M = L and r d_r M = (tau - 1) r L'
  const double lamJ = M * (2.0 * tau + 2.0 / 3.0 * (M + tau * L)) + 2.0 / 3.0 * tau * (tau - 1.0) * r_dL(gd, r);
  const double g = gd.g(r);
  const double phi2 = std::pow(tau, 4.0 / 3.0);
  const double w = std::max(0.0, p.w(r));
  const double Jg = std::pow(J, -gamma);
  return phi2 / (g * g * r * r) * ((1.0 + alpha) * r * p.dw(r) * Jg - gamma * w * Jg / J * lamJ);
}

double weight_p(double mu, double nu, double x) {
  if (x < 0.0) throw std::invalid_argument("weight_p needs x >= 0");
  const double e = mu + nu;
  if (x == 0.0) return e > 0.0 ? 0.0 : (e == 0.0 ? 1.0 : INFINITY);
  return std::pow(x, e) / std::pow(1.0 + x, mu);
}

GridField::GridField(std::string n, std::vector<double> t, std::vector<double> rr)
    : name(std::move(n)), tau(std::move(t)), r(std::move(rr)), value(tau.size() * r.size(), 0.0) {}

void GridField::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tau,r," << (name.empty() ? "value" : name) << ",dtau,rdr\n";
  char buf[160];
  const bool d = has_derivatives();
  for (std::size_t it = 0; it < tau.size(); ++it)
    for (std::size_t ir = 0; ir < r.size(); ++ir) {
      const std::size_t i = index(it, ir);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", tau[it], r[ir], value[i], d ? dtau[i] : NAN,
                    d ? rdr[i] : NAN);
      out << buf;
    }
}

EnergyPair energies(int N, double tau, double eps, std::span<const double> H, std::span<const double> H_tau,
                    const RadialProfile& rp) {
  const double gm = rp.gamma;
  std::vector<double> qE(rp.r.size()), qD(rp.r.size());
  for (std::size_t i = 0; i < rp.r.size(); ++i) {
    const double x = std::pow(rp.r[i], rp.n) / tau;
    qE[i] = weight_q(-(gm + 1.0) / 2.0, x);
    qD[i] = weight_q(-(gm + 2.0) / 2.0, x);
  }
  EnergyPair e;
  for (int j = 0; j <= N; ++j) {
    const auto DHt = dj_chain(j, H_tau, rp.h);
    const auto DH = dj_chain(j, H, rp.h);
    auto DH1 = dj_chain(j + 1, H, rp.h);
    std::vector<double> eE(DH1.size()), eD(DH1.size());
    for (std::size_t i = 0; i < DH1.size(); ++i) {
      eE[i] = qE[i] * DH1[i];
      eD[i] = qD[i] * DH1[i];
    }
    const double nHt = weighted_norm2(DHt, j, rp), nH = weighted_norm2(DH, j, rp);
    e.E += std::pow(tau, gm - 5.0 / 3.0) * nHt + std::pow(tau, gm - 14.0 / 3.0) * nH +
           eps * std::pow(tau, -gm - 1.0) * weighted_norm2(eE, j + 1, rp);
    e.D += std::pow(tau, gm - 8.0 / 3.0) * nHt + std::pow(tau, gm - 14.0 / 3.0) * nH +
           eps * std::pow(tau, -gm - 2.0) * weighted_norm2(eD, j + 1, rp);
  }
  return e;
}

}  // namespace collapse
