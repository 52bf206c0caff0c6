#include "collapse/residual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "collapse/fit.hpp"
#include "collapse/series.hpp"

namespace collapse {

namespace {

void check_order(const Hierarchy& h, int M) {
  if (M < 0 || M > h.M()) throw std::invalid_argument("residual: truncation order exceeds the hierarchy");
}

double pressure_at(const Hierarchy& h, const Jet& phi, std::size_t it, const ProfileJet& pj) {
  return pressure_tau_jet(phi, h.grid().tau[it], pj, h.gravity().profile().gamma()).value();
}

double truncated_app(const Hierarchy& h, int M, double eps, std::size_t it, std::size_t ir, Jet& out) {
  out = h.phi_jet(0, it, ir);
  double e = 1.0;
  for (int j = 1; j <= M; ++j) {
    e *= eps;
    out += h.phi_jet(j, it, ir) * e;
  }
  return out.value();
}

}  // namespace

GridField source_residual(const Hierarchy& h, int M, double eps) {
  check_order(h, M);
  GridField S("S", h.grid().tau, h.grid().r);
  for (std::size_t ir = 0; ir < h.nr(); ++ir) {
    const ProfileJet pj = h.profile_jet(ir);
    for (std::size_t it = 0; it < h.nt(); ++it) {
      Jet app;
      if (!(truncated_app(h, M, eps, it, ir, app) > 0.0))
        throw std::runtime_error("phi_app <= 0 at tau = " + std::to_string(h.grid().tau[it]) +
                                 ", r = " + std::to_string(h.grid().r[ir]));
      const double mg = (h.grid().tau[it] - 1.0) * h.gravity().L(h.grid().r[ir]);
      if (!(app.value() + lambda_op(mg, app.at(1, 0), app.at(0, 1)) > 0.0))
        throw std::runtime_error("J[phi_app] <= 0 at tau = " + std::to_string(h.grid().tau[it]) +
                                 ", r = " + std::to_string(h.grid().r[ir]));
      const double p0 = h.phi(0, it, ir);
      double y = 0.0, src = 0.0, e = 1.0;
      for (int j = 1; j <= M; ++j) {
        e *= eps;
        y += e * h.phi(j, it, ir);
        src += e * h.source(j, it, ir);
      }
      y /= p0;
      const double nonlinear = -2.0 / 9.0 / (p0 * p0) * y * y * (3.0 + 2.0 * y) / ((1.0 + y) * (1.0 + y));
      const double press = eps == 0.0 ? 0.0 : eps * pressure_at(h, app, it, pj);
      S.at(it, ir) = nonlinear - src - press;
    }
  }
  return S;
}

double residual_crosscheck(const Hierarchy& h, int M, double eps, double tau_lo, double tau_hi) {
  check_order(h, M);
  const auto S = source_residual(h, M, eps);
  const auto& tau = h.grid().tau;
  const double dx = std::log(tau[1] / tau[0]);
  double worst = 0.0;
  for (std::size_t ir = 0; ir < h.nr(); ++ir) {
    const ProfileJet pj = h.profile_jet(ir);
    for (std::size_t it = 3; it + 3 < h.nt(); ++it) {
      if (tau[it] < tau_lo || tau[it] > tau_hi) continue;
      Jet app;
      auto D = [&](int k) {
        Jet a;
        truncated_app(h, M, eps, it + k, ir, a);
        return a.at(1, 0);
      };
      const double a = truncated_app(h, M, eps, it, ir, app);
      const double dtt = (-D(-3) + 9.0 * D(-2) - 45.0 * D(-1) + 45.0 * D(1) - 9.0 * D(2) + D(3)) / (60.0 * dx * tau[it]);
      const double grav = 2.0 / 9.0 / (a * a);
      const double press = eps == 0.0 ? 0.0 : eps * pressure_at(h, app, it, pj);
      const double fd = -dtt - grav - press;
      const double scale = std::abs(dtt) + grav + std::abs(press);
      worst = std::max(worst, std::abs(fd - S.at(it, ir)) / scale);
    }
  }
  return worst;
}

ResidualNorms residual_norms(const Hierarchy& h, const GridField& S) {
  ResidualNorms out;
  const auto& r = h.grid().r;
  const auto& prof = h.gravity().profile();
  std::vector<double> wr(r.size());
  for (std::size_t ir = 0; ir < r.size(); ++ir) wr[ir] = prof.w_alpha(r[ir]) * r[ir] * r[ir];
  for (std::size_t it = 0; it < h.nt(); ++it) {
    double sup = 0.0, acc = 0.0;
    for (std::size_t ir = 0; ir < r.size(); ++ir) {
      const double v = S.at(it, ir);
      sup = std::max(sup, std::abs(v));
      if (ir > 0) {
        const double u = S.at(it, ir - 1);
        acc += 0.5 * (r[ir] - r[ir - 1]) * (u * u * wr[ir - 1] + v * v * wr[ir]);
      }
    }
    out.tau.push_back(h.grid().tau[it]);
    out.sup.push_back(sup);
    out.weighted.push_back(std::sqrt(acc));
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ResidualScan scaling_study(const Hierarchy& h, const std::vector<int>& M_list, const std::vector<double>& eps_list,
                           double tau_lo, double tau_hi, double tol) {
  ResidualScan scan;
  scan.tau_lo = tau_lo > 0.0 ? tau_lo : 10.0 * h.grid().tau.front();
  scan.tau_hi = tau_hi;
  const double lo = scan.tau_lo * (1 - 1e-12), hi = scan.tau_hi * (1 + 1e-12);
  const double delta = h.params().delta;
  for (int M : M_list) {
    std::vector<const ScanEntry*> mine;
    for (double eps : eps_list) {
      ScanEntry e;
      e.M = M;
      e.eps = eps;
      e.norms = residual_norms(h, source_residual(h, M, eps));
      if (eps > 0.0) {
        e.tau_slope_sup = fit_power_law(e.norms.tau, e.norms.sup, lo, hi).slope;
        e.tau_slope_weighted = fit_power_law(e.norms.tau, e.norms.weighted, lo, hi).slope;
      }
      scan.entries.push_back(std::move(e));
    }
    for (const auto& e : scan.entries)
      if (e.M == M && e.eps > 0.0) mine.push_back(&e);

    ScanSummary s;
    s.M = M;
    s.expected_eps_slope = M + 1.0;
    s.expected_tau_slope = -4.0 / 3.0 + (M + 1) * delta;
    if (mine.size() >= 2) {
      std::vector<double> es, sup_slopes, w_slopes;
      for (const auto* e : mine) es.push_back(e->eps);
      for (std::size_t it = 0; it < h.nt(); ++it) {
        const double t = h.grid().tau[it];
        if (t < lo || t > hi) continue;
        std::vector<double> ys, yw;
        for (const auto* e : mine) {
          ys.push_back(e->norms.sup[it]);
          yw.push_back(e->norms.weighted[it]);
        }
        sup_slopes.push_back(fit_power_law(es, ys).slope);
        w_slopes.push_back(fit_power_law(es, yw).slope);
      }
      s.eps_slope_sup = median(sup_slopes);
      s.eps_slope_weighted = median(w_slopes);
      for (double v : sup_slopes) s.eps_slope_spread = std::max(s.eps_slope_spread, std::abs(v - s.expected_eps_slope));
      for (double v : w_slopes) s.eps_slope_spread = std::max(s.eps_slope_spread, std::abs(v - s.expected_eps_slope));
      s.eps_pass = s.eps_slope_spread <= tol;
    }
    if (!mine.empty()) {
      const auto* smallest = *std::min_element(mine.begin(), mine.end(),
                                               [](const ScanEntry* a, const ScanEntry* b) { return a->eps < b->eps; });
      s.tau_slope_sup = smallest->tau_slope_sup;
      s.tau_slope_weighted = smallest->tau_slope_weighted;
      s.tau_pass = std::abs(s.tau_slope_sup - s.expected_tau_slope) <= tol &&
                   std::abs(s.tau_slope_weighted - s.expected_tau_slope) <= tol;
      s.norms_agree = std::abs(s.tau_slope_sup - s.tau_slope_weighted) <= 0.05 &&
                      (mine.size() < 2 || std::abs(s.eps_slope_sup - s.eps_slope_weighted) <= 0.05);
    }
    s.pass = (mine.size() < 2 || s.eps_pass) && s.tau_pass && s.norms_agree;
    scan.summary.push_back(s);
  }
  return scan;
}

}  // namespace collapse
