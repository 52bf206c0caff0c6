#include "collapse/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "collapse/dust.hpp"
#include "collapse/fit.hpp"
#include "collapse/kernels.hpp"

namespace collapse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinActive = 6;

std::vector<double> jacobian(std::span<const double> chi, const RadialProfile& rp, std::size_t lo) {
  const auto chi_r = d_dr(chi, rp.h, Parity::even, lo);
  std::vector<double> J(chi.size(), 0.0);
  for (std::size_t k = lo; k < chi.size(); ++k) J[k] = chi[k] * chi[k] * (chi[k] + rp.r[k] * chi_r[k]);
  return J;
}

std::vector<double> r_dr(std::span<const double> f, const RadialProfile& rp, std::size_t lo) {
  auto d = d_dr(f, rp.h, Parity::even, lo);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= rp.r[k];
  return d;
}

// exact for cubics: each interval integrates the cubic through four neighbouring nodes
double integrate_nonuniform(std::span<const double> x, std::span<const double> f) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("integrate_nonuniform needs 4 nodes");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t b = std::min(i > 0 ? i - 1 : 0, n - 4);
    const double a = x[i], c = x[i + 1];
    // 3-point Gauss-Legendre on [a, c] with the Lagrange cubic
    static const double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    for (int q = 0; q < 3; ++q) {
      const double t = 0.5 * (a + c) + 0.5 * (c - a) * gx[q];
      double p = 0.0;
      for (std::size_t j = b; j < b + 4; ++j) {
        double l = 1.0;
        for (std::size_t m = b; m < b + 4; ++m)
          if (m != j) l *= (t - x[m]) / (x[j] - x[m]);
        p += l * f[j];
      }
      sum += 0.5 * (c - a) * gw[q] * p;
    }
  }
  return sum;
}

double hermite(double f0, double d0, double f1, double d1, double dt, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * dt * d0 + (-2 * t3 + 3 * t2) * f1 +
         (t3 - t2) * dt * d1;
}

}  // namespace

bool Slices::has(std::size_t it, std::size_t k) const { return !std::isnan(chi[index(it, k)]); }

std::optional<std::vector<double>> rhs(const SimState& st, const RadialProfile& rp, double eps,
                                       std::size_t* bad_index, std::vector<double>* J_out) {
  const std::size_t n = st.chi.size();
  if (n != rp.r.size()) throw std::invalid_argument("rhs: state and profile sizes differ");
  std::vector<double> a(n, 0.0);
  if (eps > 0.0) {
    auto pr = pressure_s(st.chi, rp, st.lo);
    if (!pr.ok) {
      if (bad_index) *bad_index = pr.bad_index;
      return std::nullopt;
    }
    for (std::size_t k = st.lo; k < n; ++k) a[k] = -rp.G[k] / (st.chi[k] * st.chi[k]) - eps * pr.P[k];
    if (J_out) *J_out = std::move(pr.J);
  } else {
    for (std::size_t k = st.lo; k < n; ++k) a[k] = -rp.G[k] / (st.chi[k] * st.chi[k]);
    if (J_out) *J_out = jacobian(st.chi, rp, st.lo);
  }
  return a;
}

HierarchyGrid hydro_hierarchy_grid(const RadialProfile& rp, std::vector<double> tau) {
  HierarchyGrid g;
  g.tau = std::move(tau);
  g.r.assign(rp.r.begin() + 1, rp.r.end());
  return g;
}

SimState init_from_phi_app(const Hierarchy* h, double eps, const RadialProfile& rp) {
  const std::size_t n = rp.r.size();
  SimState st;
  st.chi.assign(n, 1.0);
  st.chi_s.resize(n);
  for (std::size_t k = 0; k < n; ++k) st.chi_s[k] = -2.0 / 3.0 * rp.g[k];
  if (!h || eps == 0.0) return st;
  if (h->nr() + 1 != n) throw std::invalid_argument("hierarchy r-grid does not match the label grid");
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(h->grid().r[k - 1] - rp.r[k]) > 1e-5)
      throw std::invalid_argument("hierarchy r-grid does not match the label grid");
  const std::size_t top = h->nt() - 1;
  if (h->grid().tau[top] != 1.0) throw std::invalid_argument("hierarchy tau-grid must end at 1");
  for (std::size_t k = 1; k < n; ++k) {
    double chi = 1.0, dtau = 2.0 / 3.0, e = 1.0;
    for (int j = 1; j <= h->M(); ++j) {
      e *= eps;
      chi += e * h->phi(j, top, k - 1);
      dtau += e * h->dtau_phi(j, top, k - 1);
    }
    st.chi[k] = chi;
    st.chi_s[k] = -rp.g[k] * dtau;
  }
  return st;
}

EnergySample total_energy(const SimState& st, const RadialProfile& rp, double eps) {
  const std::size_t n = rp.r.size();
  std::vector<double> K(n, 0.0), U(n, 0.0), W(n, 0.0);
  const auto J = eps > 0.0 ? jacobian(st.chi, rp, st.lo) : std::vector<double>(n, 0.0);
  for (std::size_t k = st.lo; k < n; ++k) {
    const double r2 = rp.r[k] * rp.r[k];
    const double dm = 4.0 * kPi * rp.w_alpha[k] * r2;
    K[k] = 0.5 * r2 * st.chi_s[k] * st.chi_s[k] * dm;
    W[k] = -rp.G[k] * r2 / st.chi[k] * dm;
    // eps alpha rho^(gamma-1) per unit mass, rho^(gamma-1) = w / J^(gamma-1)
    if (eps > 0.0 && rp.w[k] > 0.0) U[k] = eps * rp.alpha * rp.w[k] * std::pow(J[k], 1.0 - rp.gamma) * dm;
  }
  EnergySample e;
  e.s = st.s;
  e.kinetic = integrate_uniform(K, rp.h);
  e.internal = integrate_uniform(U, rp.h);
  e.gravitational = integrate_uniform(W, rp.h);
  return e;
}

Trajectory run(std::shared_ptr<const GravityData> gd, const HydroConfig& cfg, const Hierarchy* h,
               std::vector<double> tau_nodes) {
  const auto rp = sample_profile(*gd, cfg.intervals);
  if (tau_nodes.empty()) tau_nodes = h ? h->grid().tau : geometric_grid(1e-4, 1.0, 40);
  return run_from(rp, cfg, init_from_phi_app(h, cfg.eps, rp), std::move(tau_nodes));
}

Trajectory run_from(const RadialProfile& profile, const HydroConfig& cfg, SimState st, std::vector<double> tau_nodes) {
  if (!(cfg.eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (!(cfg.cfl > 0.0 && cfg.cfl < 1.0)) throw std::invalid_argument("CFL must lie in (0, 1)");
  if (cfg.intervals < 8) throw std::invalid_argument("hydro needs at least 8 intervals");
  if (st.chi.size() != profile.r.size() || st.chi_s.size() != profile.r.size())
    throw std::invalid_argument("initial state does not match the label grid");
  Trajectory tr;
  tr.cfg = cfg;
  tr.rp = profile;
  const auto& rp = tr.rp;
  const std::size_t n = rp.r.size();
  const double eps = cfg.eps;
  if (tau_nodes.back() != 1.0) throw std::invalid_argument("slice tau-nodes must end at 1");
  const std::size_t T = tau_nodes.size();
  Slices& sl = tr.slices;
  sl.tau = tau_nodes;
  sl.nr = n;
  sl.chi.assign(T * n, kNaN);
  sl.chi_s.assign(T * n, kNaN);
  sl.rchi_r.assign(T * n, kNaN);
  sl.J.assign(T * n, kNaN);

  tr.chi0 = st.chi;
  tr.chi1 = st.chi_s;

  std::vector<double> J;
  std::size_t bad = 0;
  auto acc = rhs(st, rp, eps, &bad, &J);
  if (!acc) {
    tr.halted = true;
    tr.message = "initial data has J <= 0 at r = " + std::to_string(rp.r[bad]);
    return tr;
  }
  auto rchi_r = r_dr(st.chi, rp, 0);
  auto rchis_r = r_dr(st.chi_s, rp, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = sl.index(T - 1, k);
    sl.chi[i] = st.chi[k];
    sl.chi_s[i] = st.chi_s[k];
    sl.rchi_r[i] = rchi_r[k];
    sl.J[i] = st.chi[k] * st.chi[k] * (st.chi[k] + rchi_r[k]);
  }
  std::vector<long> next(n, static_cast<long>(T) - 2);

  std::vector<double> E0_label(n);
  for (std::size_t k = 0; k < n; ++k) E0_label[k] = 0.5 * st.chi_s[k] * st.chi_s[k] - rp.G[k] / st.chi[k];
  const EnergySample e0 = total_energy(st, rp, eps);
  tr.energy.push_back(e0);
  const double e_scale = std::abs(e0.kinetic) + std::abs(e0.internal) + std::abs(e0.gravitational);
  bool any_frozen = false;

  auto push_frame = [&] { tr.frames.push_back({st.s, st.chi, st.chi_s, J, st.lo}); };
  push_frame();
  double next_frame = cfg.frame_every;

  std::vector<double> cn(n), vn(n);
  while (st.lo < n) {
    // freeze everything up to the outermost label past the floors
    long last = -1;
    for (std::size_t k = st.lo; k < n; ++k)
      if (J[k] < cfg.J_floor || st.chi[k] < cfg.chi_floor) last = static_cast<long>(k);
    // the one-sided stencils need a few evolving labels; the last ones are closed out together
    if (last >= 0 && n - static_cast<std::size_t>(last) - 1 < kMinActive) last = static_cast<long>(n) - 1;
    if (last >= 0) {
      for (std::size_t k = st.lo; k <= static_cast<std::size_t>(last); ++k) {
        CollapseEvent ev;
        ev.k = k;
        ev.r = rp.r[k];
        ev.s = st.s;
        ev.t_star = st.chi_s[k] < 0.0 ? st.s - 2.0 / 3.0 * st.chi[k] / st.chi_s[k]
                                      : std::numeric_limits<double>::infinity();
        ev.t_star_dust = 1.0 / rp.g[k];
        ev.J = J[k];
        ev.chi = st.chi[k];
        ev.forced = !(J[k] < cfg.J_floor || st.chi[k] < cfg.chi_floor);
        tr.events.push_back(ev);
        st.chi_s[k] = 0.0;
      }
      st.lo = static_cast<std::size_t>(last) + 1;
      any_frozen = true;
      if (st.lo >= n) break;
      acc = rhs(st, rp, eps, &bad, &J);
      if (!acc) {
        tr.halted = true;
        tr.message = "J <= 0 after freezing at r = " + std::to_string(rp.r[bad]);
        break;
      }
    }
    if (cfg.s_end > 0.0 && st.s >= cfg.s_end) break;
    if (tr.steps >= cfg.max_steps) {
      tr.halted = true;
      tr.message = "step limit reached";
      break;
    }

    double dt = cfg.dt_max;
    for (std::size_t k = st.lo; k < n; ++k) {
      if (st.chi_s[k] < 0.0) dt = std::min(dt, cfg.eta * (2.0 / 3.0) * st.chi[k] / -st.chi_s[k]);
      if (eps > 0.0 && rp.w[k] > 0.0) {
        const double c = std::sqrt(eps * rp.gamma * rp.w[k] * std::pow(st.chi[k], 4) * std::pow(J[k], -rp.gamma - 1));
        if (c > 0.0) dt = std::min(dt, cfg.cfl * rp.h / c);
      }
    }
    if (cfg.s_end > 0.0) dt = std::min(dt, cfg.s_end - st.s);

    const std::size_t lo = st.lo, m = n - lo;
    std::vector<double> a_new, J_new;
    bool ok = false;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
      SimState s2{st.s + 0.5 * dt, st.chi, st.chi_s, lo};
      kernels::axpy(st.chi.data() + lo, st.chi_s.data() + lo, 0.5 * dt, s2.chi.data() + lo, m);
      kernels::axpy(st.chi_s.data() + lo, acc->data() + lo, 0.5 * dt, s2.chi_s.data() + lo, m);
      auto a2 = rhs(s2, rp, eps, &bad);
      if (a2) {
        SimState s3{st.s + 0.5 * dt, st.chi, st.chi_s, lo};
        kernels::axpy(st.chi.data() + lo, s2.chi_s.data() + lo, 0.5 * dt, s3.chi.data() + lo, m);
        kernels::axpy(st.chi_s.data() + lo, a2->data() + lo, 0.5 * dt, s3.chi_s.data() + lo, m);
        auto a3 = rhs(s3, rp, eps, &bad);
        if (a3) {
          SimState s4{st.s + dt, st.chi, st.chi_s, lo};
          kernels::axpy(st.chi.data() + lo, s3.chi_s.data() + lo, dt, s4.chi.data() + lo, m);
          kernels::axpy(st.chi_s.data() + lo, a3->data() + lo, dt, s4.chi_s.data() + lo, m);
          auto a4 = rhs(s4, rp, eps, &bad);
          if (a4) {
            cn = st.chi;
            vn = st.chi_s;
            kernels::rk4_combine(st.chi.data() + lo, st.chi_s.data() + lo, s2.chi_s.data() + lo,
                                 s3.chi_s.data() + lo, s4.chi_s.data() + lo, dt / 6.0, cn.data() + lo, m);
            kernels::rk4_combine(st.chi_s.data() + lo, acc->data() + lo, a2->data() + lo, a3->data() + lo,
                                 a4->data() + lo, dt / 6.0, vn.data() + lo, m);
            bool finite = true;
            for (std::size_t k = lo; k < n && finite; ++k)
              if (!std::isfinite(cn[k]) || !std::isfinite(vn[k]) || !(cn[k] > 0.0) || cn[k] > cfg.chi_bound) {
                finite = false;
                bad = k;
              }
            if (finite) {
              SimState trial{st.s + dt, cn, vn, lo};
              auto an = rhs(trial, rp, eps, &bad, &J_new);
              if (an) {
                a_new = std::move(*an);
                ok = true;
                break;
              }
            }
          }
        }
      }
      ++tr.rejected;
      dt *= 0.5;
    }
    if (!ok) {
      tr.halted = true;
      std::ostringstream os;
      os << "step failed at s = " << st.s << " near r = " << rp.r[bad] << " (J <= 0 or unbounded growth)";
      tr.message = os.str();
      break;
    }

    // fixed-tau slices crossed during the step
    const auto rchi_r_new = r_dr(cn, rp, lo);
    const auto rchis_r_new = r_dr(vn, rp, lo);
    const double s_old = st.s, s_new = st.s + dt;
    for (std::size_t k = lo; k < n; ++k) {
      const double tau_new = 1.0 - rp.g[k] * s_new;
      while (next[k] >= 0 && tau_nodes[next[k]] >= tau_new) {
        const double s_star = (1.0 - tau_nodes[next[k]]) / rp.g[k];
        const double t = std::clamp((s_star - s_old) / dt, 0.0, 1.0);
        const std::size_t i = sl.index(static_cast<std::size_t>(next[k]), k);
        const double c = hermite(st.chi[k], st.chi_s[k], cn[k], vn[k], dt, t);
        const double rc = hermite(rchi_r[k], rchis_r[k], rchi_r_new[k], rchis_r_new[k], dt, t);
        sl.chi[i] = c;
        sl.chi_s[i] = hermite(st.chi_s[k], (*acc)[k], vn[k], a_new[k], dt, t);
        sl.rchi_r[i] = rc;
        sl.J[i] = c * c * (c + rc);
        --next[k];
      }
    }

    st.s = s_new;
    st.chi = std::move(cn);
    st.chi_s = std::move(vn);
    cn.assign(n, 0.0);
    vn.assign(n, 0.0);
    acc = std::move(a_new);
    J = std::move(J_new);
    rchi_r = rchi_r_new;
    rchis_r = rchis_r_new;
    ++tr.steps;

    if (!any_frozen) {
      if (eps == 0.0)
        for (std::size_t k = lo; k < n; ++k) {
          const double E = 0.5 * st.chi_s[k] * st.chi_s[k] - rp.G[k] / st.chi[k];
          const double scale = std::max(rp.G[k] / st.chi[k], 1e-300);
          tr.max_label_energy_drift = std::max(tr.max_label_energy_drift, std::abs(E - E0_label[k]) / scale);
        }
      const auto e = total_energy(st, rp, eps);
      tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(e.total() - e0.total()) / e_scale);
      if (st.s >= next_frame) tr.energy.push_back(e);
    }
    if (st.s >= next_frame) {
      push_frame();
      while (next_frame <= st.s) next_frame += cfg.frame_every;
    }
  }
  if (tr.frames.back().s != st.s) push_frame();
  tr.s_final = st.s;
  return tr;
}

DustComparison compare_to_dust(const Trajectory& tr, const GravityData& gd, double s_limit_fraction, double r_max) {
  const auto& rp = tr.rp;
  const auto& sl = tr.slices;
  const std::size_t n = rp.r.size(), T = sl.tau.size();
  DustComparison dc;
  dc.s_limit = s_limit_fraction / gd.g0();
  auto chi_err = [&](double s, std::size_t k, double chi) {
    const auto cd = chi_dust(gd, s, rp.r[k]);
    if (cd) dc.max_rel_err_chi = std::max(dc.max_rel_err_chi, std::abs(chi / *cd - 1.0));
  };
  for (const auto& f : tr.frames) {
    if (f.s > dc.s_limit) continue;
    for (std::size_t k = f.lo; k < n; ++k) chi_err(f.s, k, f.chi[k]);
  }
  for (std::size_t it = 0; it < T; ++it)
    for (std::size_t k = 0; k < n; ++k) {
      if (!sl.has(it, k)) continue;
      const double s = (1.0 - sl.tau[it]) / rp.g[k];
      if (s <= dc.s_limit) chi_err(s, k, sl.chi[sl.index(it, k)]);
    }
  for (const auto& ev : tr.events)
    if (std::isfinite(ev.t_star))
      dc.max_rel_err_t_star = std::max(dc.max_rel_err_t_star, std::abs(ev.t_star / ev.t_star_dust - 1.0));

  dc.tau = sl.tau;
  dc.dev_chi.assign(T, 0.0);
  dc.dev_J.assign(T, 0.0);
  dc.resolved.assign(T, 0);
  for (std::size_t it = 0; it < T; ++it) {
    const double tau = sl.tau[it];
    const double phi0v = std::cbrt(tau * tau);
    for (std::size_t k = 0; k < n; ++k) {
      if (rp.r[k] > r_max * (1.0 + 1e-12)) break;
      if (!sl.has(it, k)) continue;
      ++dc.resolved[it];
      const std::size_t i = sl.index(it, k);
      const double Jd = jacobian_phi0(tau, (tau - 1.0) * rp.L[k]);
      dc.dev_chi[it] = std::max(dc.dev_chi[it], std::abs(sl.chi[i] / phi0v - 1.0));
      dc.dev_J[it] = std::max(dc.dev_J[it], std::abs(sl.J[i] / Jd - 1.0));
    }
  }
  dc.dev_at_one = std::max(dc.dev_chi[T - 1], dc.dev_J[T - 1]);
  std::size_t counted = 0;
  while (counted < n && rp.r[counted] <= r_max * (1.0 + 1e-12)) ++counted;
  std::size_t full = T - 1;
  for (std::size_t it = T; it-- > 0;) {
    if (dc.resolved[it] != counted) break;
    full = it;
  }
  for (std::size_t it = full; it < T; ++it) dc.max_dev = std::max({dc.max_dev, dc.dev_chi[it], dc.dev_J[it]});
  // last decade in which every label is still resolved
  dc.trend_lo = sl.tau[full];
  dc.trend_hi = std::min(1.0, 10.0 * dc.trend_lo);
  dc.trend_monotone = dc.trend_lo < 1.0;
  for (std::size_t it = full; it + 1 < T && sl.tau[it + 1] <= dc.trend_hi * (1.0 + 1e-12); ++it) {
    const double a = std::max(dc.dev_chi[it], dc.dev_J[it]);
    const double b = std::max(dc.dev_chi[it + 1], dc.dev_J[it + 1]);
    if (a > b) dc.trend_monotone = false;
  }

  // support radius chi(s, 1) while the boundary label evolves
  dc.support_decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& f : tr.frames) {
    if (f.lo >= n) break;
    const double c = f.chi[n - 1];
    if (!(c < prev)) dc.support_decreasing = false;
    prev = c;
    dc.support_final = c;
  }
  return dc;
}

RemainderDiagnostics remainder_diagnostics(const Trajectory& tr, const Hierarchy& h, double m, int energy_order,
                                           double c_tau_lo, double c_tau_hi) {
  const auto& rp = tr.rp;
  const auto& sl = tr.slices;
  const std::size_t n = rp.r.size(), T = sl.tau.size();
  if (h.nt() != T || h.nr() + 1 != n) throw std::invalid_argument("remainder diagnostics: grid mismatch");
  const double eps = tr.cfg.eps, gm = rp.gamma;
  const auto app = h.phi_app(eps);
  RemainderDiagnostics rd;
  rd.m = m;
  rd.energy_order = energy_order;
  rd.tau = sl.tau;
  rd.theta_sup.assign(T, 0.0);
  rd.g00_min.assign(T, 1.0);
  rd.g00_max.assign(T, 1.0);
  rd.g01_max.assign(T, 0.0);
  rd.d2_min.assign(T, std::numeric_limits<double>::infinity());
  rd.c_ratio_sup.assign(T, 0.0);
  rd.E.assign(T, kNaN);
  rd.D.assign(T, kNaN);
  std::vector<double> H(n), Ht(n);
  for (std::size_t it = 0; it < T; ++it) {
    const double tau = sl.tau[it];
    const double phi0v = std::cbrt(tau * tau);
    bool complete = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (!sl.has(it, k)) {
        complete = false;
        continue;
      }
      const std::size_t i = sl.index(it, k);
      const double pa = k == 0 ? phi0v : app.at(it, k - 1);
      const double pa_t = k == 0 ? 2.0 / 3.0 * phi0v / tau : app.dtau[app.index(it, k - 1)];
      const double phi = sl.chi[i];
      const double theta = phi - pa;
      rd.theta_sup[it] = std::max(rd.theta_sup[it], std::abs(theta) / phi0v);
      const double theta_t = -sl.chi_s[i] / rp.g[k] - pa_t;
      const double r = rp.r[k];
      H[k] = std::pow(tau, -m) * r * theta;
      Ht[k] = -m * std::pow(tau, -m - 1.0) * r * theta + std::pow(tau, -m) * r * theta_t;
      rd.d2_min[it] = std::min(rd.d2_min[it], m * (m - 1.0) - 4.0 * tau * tau / (9.0 * pa * pa * pa));
      const double c = std::pow(phi, 4) / (rp.g[k] * rp.g[k] * std::pow(sl.J[i], gm + 1.0));
      const double x = std::pow(r, rp.n) / tau;
      rd.c_ratio_sup[it] = std::max(rd.c_ratio_sup[it], c / weight_q(-gm - 1.0, x));
      if (k == 0) continue;
      const double mg = (tau - 1.0) * rp.L[k];
      const double g00 = 1.0 - eps * gm * rp.w[k] * c * mg * mg / (r * r);
      const double g01 = -eps * gm * rp.w[k] * c * mg / r;
      rd.g00_min[it] = std::min(rd.g00_min[it], g00);
      rd.g00_max[it] = std::max(rd.g00_max[it], g00);
      rd.g01_max[it] = std::max(rd.g01_max[it], std::abs(g01));
    }
    if (complete) {
      const auto e = energies(energy_order, tau, eps, H, Ht, rp);
      rd.E[it] = e.E;
      rd.D[it] = e.D;
    }
  }
  rd.g00_ok = true;
  rd.d2_ok = true;
  for (std::size_t it = 0; it < T; ++it) {
    if (!(rd.g00_min[it] > 0.9 && rd.g00_max[it] < 1.1)) rd.g00_ok = false;
    if (std::isfinite(rd.d2_min[it]) && !(rd.d2_min[it] > 0.0)) rd.d2_ok = false;
  }
  const auto fit = fit_power_law(rd.tau, rd.c_ratio_sup, c_tau_lo, c_tau_hi);
  rd.c_slope = fit.slope;
  const auto& p = h.params();
  rd.c_slope_expected = p.delta - 2.0 + 2.0 / p.n;
  rd.c_slope_ok = fit.points >= 2 && std::abs(rd.c_slope - rd.c_slope_expected) <= 0.1;
  return rd;
}

EulerianFrame eulerian_reconstruct(const Frame& f, const RadialProfile& rp, double eps) {
  const std::size_t n = rp.r.size();
  EulerianFrame ef;
  ef.s = f.s;
  std::vector<double> R(n, 0.0);
  for (std::size_t k = f.lo; k < n; ++k) R[k] = rp.r[k] * f.chi[k];
  for (std::size_t k = f.lo + 1; k < n; ++k)
    if (!(R[k] > R[k - 1])) {
      std::ostringstream os;
      os << "shell crossing: R(r) not increasing at r = " << rp.r[k] << ", s = " << f.s;
      throw std::runtime_error(os.str());
    }
  const auto dR = d_dr(R, rp.h, Parity::odd, f.lo);
  for (std::size_t k = f.lo; k < n; ++k) {
    // J = chi^2 (chi + r chi_r) = chi^2 dR/dr
    const double J = f.chi[k] * f.chi[k] * dR[k];
    if (!(J > 0.0)) {
      std::ostringstream os;
      os << "non-positive Jacobian at r = " << rp.r[k] << ", s = " << f.s;
      throw std::runtime_error(os.str());
    }
    ef.R.push_back(R[k]);
    ef.rho.push_back(rp.w_alpha[k] / J);
    ef.u.push_back(f.chi_s[k] * rp.r[k]);
  }
  // int 4 pi rho R^2 dR over the Eulerian nodes
  if (f.lo == 0) {
    std::vector<double> F(ef.R.size());
    for (std::size_t i = 0; i < F.size(); ++i) F[i] = 4.0 * kPi * ef.rho[i] * ef.R[i] * ef.R[i];
    ef.mass = integrate_nonuniform(ef.R, F);
    std::vector<double> m0(n);
    for (std::size_t k = 0; k < n; ++k) m0[k] = 4.0 * kPi * rp.w_alpha[k] * rp.r[k] * rp.r[k];
    ef.mass_expected = integrate_uniform(m0, rp.h);
    ef.mass_rel_err = std::abs(ef.mass / ef.mass_expected - 1.0);
  }
  if (eps > 0.0) {
    ef.eps_bar = std::pow(eps, 1.0 / (4.0 - 3.0 * rp.gamma));
    const double eb = ef.eps_bar;
    ef.t_phys = std::pow(eb, 1.5) * f.s;
    for (std::size_t i = 0; i < ef.R.size(); ++i) {
      ef.x_phys.push_back(eb * ef.R[i]);
      ef.rho_phys.push_back(ef.rho[i] / (eb * eb * eb));
      ef.u_phys.push_back(ef.u[i] / std::sqrt(eb));
    }
  }
  return ef;
}

}  // namespace collapse

namespace collapse {

TunedRun run_on_collapse_surface(std::shared_ptr<const GravityData> gd, const HydroConfig& cfg, const Hierarchy& h,
                                 int iterations, double tau_measure_max) {
  const auto rp = sample_profile(*gd, cfg.intervals);
  const auto app = h.phi_app(cfg.eps);
  TunedRun out;
  SimState init = init_from_phi_app(&h, cfg.eps, rp);
  const std::size_t n = rp.r.size();
  for (int iter = 0;; ++iter) {
    out.trajectory = run_from(rp, cfg, init, h.grid().tau);
    const auto& sl = out.trajectory.slices;
    // shift of the collapse time per label, read off the smallest resolved slice:
    // phi ~ phi_app (1 + c / tau)^(2/3) collapses at dust-tau = -c
    std::vector<double> shift(n, 0.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t it = 0; it < sl.tau.size(); ++it) {
        if (!sl.has(it, k)) continue;
        const double tau = sl.tau[it];
        if (tau > tau_measure_max) break;
        const double pa = k == 0 ? std::cbrt(tau * tau) : app.at(it, k - 1);
        const double ratio = sl.chi[sl.index(it, k)] / pa;
        shift[k] = tau * (std::pow(ratio, 1.5) - 1.0) / rp.g[k];
        break;
      }
      worst = std::max(worst, std::abs(shift[k]) * rp.g[k]);
    }
    out.max_shift.push_back(worst);
    out.shift = shift;
    if (iter == iterations) break;
    // zero-energy dust: d t* / d|chi_s(0)| = -1 / (5 G)
    for (std::size_t k = 0; k < n; ++k) init.chi_s[k] -= 5.0 * rp.G[k] * shift[k];
  }
  out.chi1_correction.resize(n);
  const auto base = init_from_phi_app(&h, cfg.eps, rp);
  for (std::size_t k = 0; k < n; ++k) out.chi1_correction[k] = init.chi_s[k] - base.chi_s[k];
  return out;
}

}  // namespace collapse
