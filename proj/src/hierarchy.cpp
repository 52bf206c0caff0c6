#include "collapse/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "collapse/fit.hpp"
#include "collapse/series.hpp"

namespace collapse {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

constexpr int kStored = 6;  // coefficients of an order-2 jet

}  // namespace

ExpansionParams exponents(double gamma, double n, int M, double epsilon, int lemma_a) {
  if (!(gamma > 1.0 && gamma < 4.0 / 3.0)) throw ExponentError("1 < gamma < 4/3", "gamma = " + fmt(gamma));
  if (!(n >= 1.0) || n != std::floor(n)) throw ExponentError("n positive integer", "n = " + fmt(n));
  if (M < 0) throw std::invalid_argument("expansion order M must be >= 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  ExpansionParams p;
  p.gamma = gamma;
  p.n = n;
  p.M = M;
  p.epsilon = epsilon;
  p.lemma_a = lemma_a;
  p.gammabar = 4.0 / 3.0 - gamma;
  p.alpha = 1.0 / (gamma - 1.0);
  p.N = static_cast<int>(std::floor(p.alpha + 1e-9)) + 6;
  p.delta = 2.0 * (4.0 / 3.0 - gamma - 1.0 / n);
  p.delta_star = p.delta - p.N / n;
  p.lambda = 2.0 * p.N / n;
  p.delta_bar = std::min(p.delta_star, p.delta / 2.0);
  p.j_switch = static_cast<int>(std::floor(1.0 / (3.0 * p.gammabar)));

  if (!(p.delta > 0.0)) throw ExponentError("delta > 0", "delta = " + fmt(p.delta));
  const double need = (2.0 * p.N + 2.0) / n;
  if (!(p.delta > need))
    throw ExponentError("delta > (2N+2)/n", "delta = " + fmt(p.delta) + " <= " + fmt(need));
  if (!(p.lambda < 1.0)) throw ExponentError("lambda = 2N/n < 1", "lambda = " + fmt(p.lambda));
  const int j = static_cast<int>(std::floor(2.0 / (3.0 * p.delta)));
  const double lo = j * p.delta + 2.0 / n, hi = (j + 1) * p.delta - lemma_a / n;
  if (!(lo < 2.0 / 3.0 && 2.0 / 3.0 < hi))
    throw ExponentError("gap condition around 2/3",
                        "floor(2/(3 delta)) = " + std::to_string(j) + ", bounds " + fmt(lo) + " < 2/3 < " + fmt(hi));
  if (j != p.j_switch)
    throw ExponentError("floor(2/(3 delta)) = floor(1/(3 gammabar))",
                        std::to_string(j) + " vs " + std::to_string(p.j_switch));
  p.M_full = static_cast<int>(std::floor(1.0 + 3.0 / p.delta_bar)) + 1;
  return p;
}

const char* to_string(SOperator s) { return s == SOperator::S1 ? "S1" : "S2"; }

SOperator operator_for(int j, const ExpansionParams& p) { return j <= p.j_switch ? SOperator::S1 : SOperator::S2; }

int jet_order(int j, int M) {
  const int K = 2 + 2 * (M - j);
  if (K > kMaxJetOrder) throw std::invalid_argument("expansion order too high for the jet order limit");
  return K;
}

namespace {

// int over each cell [x_i, x_{i+1}] of g on a uniform grid, sixth order
// (centered 6-point rule inside, one-sided 6-point rules in the two cells at each end)
std::vector<double> cell_integrals(std::span<const double> g, double h) {
  const std::size_t T = g.size() - 1;
  std::vector<double> v(T);
  if (T < 5) {
    for (std::size_t i = 0; i < T; ++i) v[i] = 0.5 * h * (g[i] + g[i + 1]);
    return v;
  }
  static constexpr double c[6] = {11, -93, 802, 802, -93, 11};
  static constexpr double e0[6] = {475, 1427, -798, 482, -173, 27};
  static constexpr double e1[6] = {-27, 637, 1022, -258, 77, -11};
  const double s = h / 1440.0;
  for (std::size_t i = 0; i < T; ++i) {
    double acc = 0.0;
    if (i == 0)
      for (int k = 0; k < 6; ++k) acc += e0[k] * g[k];
    else if (i == 1)
      for (int k = 0; k < 6; ++k) acc += e1[k] * g[k];
    else if (i == T - 1)
      for (int k = 0; k < 6; ++k) acc += e0[k] * g[T - k];
    else if (i == T - 2)
      for (int k = 0; k < 6; ++k) acc += e1[k] * g[T - k];
    else
      for (int k = 0; k < 6; ++k) acc += c[k] * g[i - 2 + k];
    v[i] = s * acc;
  }
  return v;
}

// int_{x_0}^{x_i} g dx
std::vector<double> cumulative(std::span<const double> g, double h) {
  const auto v = cell_integrals(g, h);
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) c[i + 1] = c[i] + v[i];
  return c;
}

// int_{x_i}^{x_T} g dx, summed from the top so that no large lower-end values cancel
std::vector<double> cumulative_from_top(std::span<const double> g, double h) {
  const auto v = cell_integrals(g, h);
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t i = v.size(); i-- > 0;) c[i] = c[i + 1] + v[i];
  return c;
}

}  // namespace

SResult s_operator(SOperator which, std::span<const double> tau, std::span<const double> f, bool asymptotic) {
  const std::size_t T1 = tau.size();
  if (T1 < 6 || f.size() != T1) throw std::invalid_argument("s_operator: need >= 6 matching samples");
  const double h = std::log(tau[1] / tau[0]);
  for (std::size_t i = 1; i < T1; ++i)
    if (std::abs(std::log(tau[i] / tau[i - 1]) / h - 1.0) > 1e-8)
      throw std::invalid_argument("s_operator: tau-grid must be geometric");
  SResult res;
  const double t0 = tau[0];

  // power-law tail of f on (0, tau_min). A clean power law (consistent local exponents
  // over the first cells) is trusted and may be reported divergent. A transitional
  // source (drifting exponent or a nearby sign change) flattens towards tau -> 0, so its
  // first-cell exponent bounds the tail; it is clamped to keep the tail finite.
  double p = std::numeric_limits<double>::quiet_NaN();
  double q = 7.0 / 3.0;
  bool clean = false;
  if (f[0] != 0.0) {
    std::array<double, 3> loc{};
    bool same_sign = true;
    for (int i = 0; i < 3; ++i) {
      if (!(f[i] * f[i + 1] > 0.0)) same_sign = false;
      else loc[i] = std::log(f[i + 1] / f[i]) / h;
    }
    if (same_sign) {
      p = loc[0];
      const auto [mn, mx] = std::minmax_element(loc.begin(), loc.end());
      clean = asymptotic && *mx - *mn <= 0.25;
      q = p + 7.0 / 3.0;
      if (clean && !(q > 0.0))
        throw DivergenceError("inner integral diverges: source exponent " + fmt(p) + " <= -7/3", p);
      if (!clean) q = std::max(q, 1.0 / 3.0);
    } else if (f[0] * f[1] > 0.0) {
      p = std::log(f[1] / f[0]) / h;
      q = std::max(p + 7.0 / 3.0, 1.0 / 3.0);
    }
  }
  const double Itail = f[0] * std::pow(t0, 7.0 / 3.0) / q;
  res.tail_exponent = p;

  std::vector<double> g(T1);
  for (std::size_t i = 0; i < T1; ++i) g[i] = f[i] * std::pow(tau[i], 7.0 / 3.0);
  auto I = cumulative(g, h);
  for (auto& v : I) v += Itail;

  std::vector<double> k(T1);
  for (std::size_t i = 0; i < T1; ++i) k[i] = I[i] * std::pow(tau[i], -5.0 / 3.0);
  res.phi.resize(T1);
  if (which == SOperator::S1) {
    const auto K = cumulative_from_top(k, h);
    for (std::size_t i = 0; i < T1; ++i) res.phi[i] = -std::pow(tau[i], 4.0 / 3.0) * K[i];
  } else {
    const auto K = cumulative(k, h);
    double Ktail = 0.0;
    if (Itail != 0.0) {
      if (clean && !(q > 5.0 / 3.0))
        throw DivergenceError("outer integral of S2 diverges: source exponent " + fmt(p) + " <= -2/3", p);
      Ktail = Itail * std::pow(t0, -5.0 / 3.0) / (clean ? q - 5.0 / 3.0 : std::max(q - 5.0 / 3.0, 1.0 / 3.0));
    }
    for (std::size_t i = 0; i < T1; ++i) res.phi[i] = std::pow(tau[i], 4.0 / 3.0) * (Ktail + K[i]);
  }
  res.dphi.resize(T1);
  for (std::size_t i = 0; i < T1; ++i)
    res.dphi[i] = 4.0 / 3.0 * res.phi[i] / tau[i] + std::pow(tau[i], -4.0 / 3.0) * I[i];
  res.inner = std::move(I);
  return res;
}

HierarchyGrid default_grid(double n, double tau_min, int per_decade, int coarse, int dense, double rho_width) {
  HierarchyGrid g;
  g.tau = geometric_grid(tau_min, 1.0, per_decade);
  const double r_dense = std::exp(-rho_width / n);
  for (int k = 1; k < coarse; ++k) {
    const double r = static_cast<double>(k) / coarse;
    if (r < r_dense) g.r.push_back(r);
  }
  for (int i = 0; i < dense; ++i) g.r.push_back(std::exp(-rho_width / n * (1.0 - static_cast<double>(i) / (dense - 1))));
  g.r.back() = 1.0;
  return g;
}

Hierarchy::Hierarchy(std::shared_ptr<const GravityData> gd, ExpansionParams params, HierarchyGrid grid,
                     HierarchyOptions opt)
    : gd_(std::move(gd)), params_(std::move(params)), opt_(opt), grid_(std::move(grid)) {
  if (grid_.tau.size() < 8) throw std::invalid_argument("hierarchy: tau-grid too short");
  if (std::abs(grid_.tau.back() - 1.0) > 1e-14) throw std::invalid_argument("hierarchy: tau-grid must end at 1");
  for (double r : grid_.r)
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("hierarchy: r-grid must lie in (0, 1]");
  const int M = params_.M;
  if (M == 0) return;
  const int K0 = jet_order(1, M) + 2;
  // jets at r = 1 need w^alpha to be a polynomial, or alpha beyond the jet order
  const double a = gd_->profile().alpha();
  if (grid_.r.back() == 1.0 && !(std::abs(a - std::round(a)) <= 1e-9 * a || a > K0)) grid_.r.back() = 1.0 - 1e-6;

  const std::size_t nt = grid_.tau.size(), nr = grid_.r.size();
  jets_.assign(static_cast<std::size_t>(M) * nt * nr * kStored, 0.0);
  src_.assign(static_cast<std::size_t>(M) * nt * nr, 0.0);
  tails_.assign(static_cast<std::size_t>(M) * nr, 0.0);

  unsigned threads = opt.threads > 0 ? static_cast<unsigned>(opt.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nr)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t ir = next.fetch_add(1);
      if (ir >= nr) return;
      try {
        solve_column(ir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next = nr;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

void Hierarchy::solve_column(std::size_t ir) {
  const int M = params_.M;
  const std::size_t nt = grid_.tau.size(), nr = grid_.r.size();
  const double r = grid_.r[ir];
  const int K0 = jet_order(1, M) + 2;
  const ProfileJet pj = gd_->jet(r, K0);
  const double gamma = gd_->profile().gamma();

  // extended column grid: ext nodes below tau_min, then the stored grid
  const double h = std::log(grid_.tau[1] / grid_.tau[0]);
  const double rn = std::pow(r, params_.n);
  const double tau_lo = std::max(opt_.tau_floor, opt_.depth * rn);
  const bool asymptotic = opt_.depth * rn >= opt_.tau_floor;
  const std::size_t ext =
      tau_lo < grid_.tau[0] ? static_cast<std::size_t>(std::ceil(std::log(grid_.tau[0] / tau_lo) / h)) : 0;
  std::vector<double> tau(ext + nt);
  for (std::size_t k = 0; k < ext; ++k) tau[k] = grid_.tau[0] * std::exp(-static_cast<double>(ext - k) * h);
  std::copy(grid_.tau.begin(), grid_.tau.end(), tau.begin() + ext);
  const std::size_t T = tau.size();

  // phis[it][j]
  std::vector<std::vector<Jet>> phis(T);
  for (std::size_t it = 0; it < T; ++it) phis[it].push_back(pow(Jet::tau_variable(K0, tau[it]), 2.0 / 3.0));

  for (int j = 1; j <= M; ++j) {
    const int K = jet_order(j, M);
    std::vector<Jet> f(T);
    for (std::size_t it = 0; it < T; ++it) {
      f[it] = f_rhs(j, K, tau[it], phis[it], pj, gamma);
      if (it >= ext) src_[(static_cast<std::size_t>(j - 1) * nt + it - ext) * nr + ir] = f[it].value();
    }
    std::vector<SResult> S(K + 1);
    std::vector<double> Fb(T);
    for (int b = 0; b <= K; ++b) {
      for (std::size_t it = 0; it < T; ++it) Fb[it] = f[it].at(0, b) * factorial(b);
      try {
        S[b] = s_operator(operator_for(j, params_), tau, Fb, asymptotic);
      } catch (const DivergenceError& e) {
        throw DivergenceError("phi_" + std::to_string(j) + " at r = " + fmt(r) + ", rho-order " + std::to_string(b) +
                                  ": " + e.what(),
                              e.exponent());
      }
    }
    tails_[static_cast<std::size_t>(j - 1) * nr + ir] = S[0].tail_exponent;

    for (std::size_t it = 0; it < T; ++it) {
      const double t0 = tau[it];
      Jet c(K);
      for (int b = 0; b <= K; ++b) c.at(0, b) = S[b].phi[it] / factorial(b);
      for (int b = 0; b < K; ++b) c.at(1, b) = S[b].dphi[it] / factorial(b);
      // (a+2)(a+1) c_{a+2,b} = (4/9) [tau^-2 phi]_{a,b} + f_{a,b}
      for (int a = 0; a + 2 <= K; ++a)
        for (int b = 0; a + 2 + b <= K; ++b) {
          double s = 0.0, ti = std::pow(t0, -2.0);
          for (int i = 0; i <= a; ++i) {
            s += (i + 1) * ti * c.at(a - i, b);
            ti *= -1.0 / t0;
          }
          c.at(a + 2, b) = (4.0 / 9.0 * s + f[it].at(a, b)) / ((a + 2.0) * (a + 1.0));
        }
      if (it >= ext) {
        double* dst = &jets_[((static_cast<std::size_t>(j - 1) * nt + it - ext) * nr + ir) * kStored];
        for (int k = 0; k < kStored; ++k) dst[k] = c.data()[k];
      }
      phis[it].push_back(c);
    }
  }
}

Jet Hierarchy::phi_jet(int j, std::size_t it, std::size_t ir) const {
  if (j == 0) return pow(Jet::tau_variable(2, grid_.tau[it]), 2.0 / 3.0);
  if (j < 0 || j > params_.M) throw std::out_of_range("phi_jet: no such iterate");
  Jet c(2);
  const double* src = &jets_[((static_cast<std::size_t>(j - 1) * nt() + it) * nr() + ir) * kStored];
  for (int k = 0; k < kStored; ++k) c.data()[k] = src[k];
  return c;
}

double Hierarchy::phi(int j, std::size_t it, std::size_t ir) const { return phi_jet(j, it, ir).value(); }
double Hierarchy::dtau_phi(int j, std::size_t it, std::size_t ir) const { return phi_jet(j, it, ir).at(1, 0); }
double Hierarchy::rdr_phi(int j, std::size_t it, std::size_t ir) const { return phi_jet(j, it, ir).at(0, 1); }

double Hierarchy::source(int j, std::size_t it, std::size_t ir) const {
  if (j < 1 || j > params_.M) throw std::out_of_range("source: no such index");
  return src_[(static_cast<std::size_t>(j - 1) * nt() + it) * nr() + ir];
}

GridField Hierarchy::field(int j) const {
  GridField g("phi" + std::to_string(j), grid_.tau, grid_.r);
  g.dtau.resize(g.value.size());
  g.rdr.resize(g.value.size());
  for (std::size_t it = 0; it < nt(); ++it)
    for (std::size_t ir = 0; ir < nr(); ++ir) {
      const Jet c = phi_jet(j, it, ir);
      const std::size_t i = g.index(it, ir);
      g.value[i] = c.value();
      g.dtau[i] = c.at(1, 0);
      g.rdr[i] = c.at(0, 1);
    }
  return g;
}

Jet Hierarchy::phi_app_jet(double eps, std::size_t it, std::size_t ir) const {
  Jet s = phi_jet(0, it, ir);
  double e = 1.0;
  for (int j = 1; j <= params_.M; ++j) {
    e *= eps;
    s += phi_jet(j, it, ir) * e;
  }
  return s;
}

GridField Hierarchy::phi_app(double eps) const {
  GridField g("phi_app", grid_.tau, grid_.r);
  g.dtau.resize(g.value.size());
  g.rdr.resize(g.value.size());
  for (std::size_t it = 0; it < nt(); ++it)
    for (std::size_t ir = 0; ir < nr(); ++ir) {
      const Jet c = phi_app_jet(eps, it, ir);
      const std::size_t i = g.index(it, ir);
      g.value[i] = c.value();
      g.dtau[i] = c.at(1, 0);
      g.rdr[i] = c.at(0, 1);
    }
  return g;
}

ProfileJet Hierarchy::profile_jet(std::size_t ir) const { return gd_->jet(grid_.r[ir], 2); }

OdeResidual ode_residual(const Hierarchy& h, int j) {
  OdeResidual out;
  const auto& tau = h.grid().tau;
  const double dx = std::log(tau[1] / tau[0]);
  for (std::size_t ir = 0; ir < h.nr(); ++ir)
    for (std::size_t it = 3; it + 3 < h.nt(); ++it) {
      auto D = [&](int k) { return h.dtau_phi(j, it + k, ir); };
      const double d2 = (-D(-3) + 9.0 * D(-2) - 45.0 * D(-1) + 45.0 * D(1) - 9.0 * D(2) + D(3)) / (60.0 * dx * tau[it]);
      const double lin = 4.0 / 9.0 * h.phi(j, it, ir) / (tau[it] * tau[it]);
      const double f = h.source(j, it, ir);
      const double scale = std::abs(d2) + std::abs(lin) + std::abs(f);
      if (!(scale > 1e-200)) continue;  // underflowed near-axis values
      const double rel = std::abs(d2 - lin - f) / scale;
      if (rel > out.max_relative) {
        out.max_relative = rel;
        out.at_tau = tau[it];
        out.at_r = h.grid().r[ir];
      }
    }
  return out;
}

GainReport verify_gain(const Hierarchy& h, int j, double tau_lo, double tau_hi, double tol) {
  const auto& P = h.params();
  GainReport g;
  g.j = j;
  g.tau_lo = tau_lo;
  g.tau_hi = tau_hi;
  g.expected_slope = 2.0 / 3.0 + j * P.delta;
  g.expected_slope_dtau = g.expected_slope - 1.0;
  for (std::size_t it = 0; it < h.nt(); ++it) {
    const double t = h.grid().tau[it];
    double e = 0.0, ed = 0.0;
    for (std::size_t ir = 0; ir < h.nr(); ++ir) {
      const double r = h.grid().r[ir];
      const double wgt = j == 0 ? 1.0 : weight_p(P.lambda, -2.0 / P.n, std::pow(r, P.n) / t);
      if (!(wgt > 0.0)) continue;
      e = std::max(e, std::abs(h.phi(j, it, ir)) / wgt);
      ed = std::max(ed, std::abs(h.dtau_phi(j, it, ir)) / wgt);
    }
    g.tau.push_back(t);
    g.envelope.push_back(e);
    g.envelope_dtau.push_back(ed);
  }
  g.fitted_slope = fit_power_law(g.tau, g.envelope, tau_lo * (1 - 1e-12), tau_hi * (1 + 1e-12)).slope;
  g.fitted_slope_dtau = fit_power_law(g.tau, g.envelope_dtau, tau_lo * (1 - 1e-12), tau_hi * (1 + 1e-12)).slope;
  for (double d = h.grid().tau.front(); d < 0.99; d *= 10.0) {
    try {
      g.decade_slopes.emplace_back(d, fit_power_law(g.tau, g.envelope, d * (1 - 1e-12), d * 10 * (1 + 1e-12)).slope);
    } catch (const std::exception&) {
    }
  }
  g.pass = std::abs(g.fitted_slope - g.expected_slope) <= tol &&
           std::abs(g.fitted_slope_dtau - g.expected_slope_dtau) <= tol;
  return g;
}

namespace {

// J[phi] / J[phi_0] and positivity over the grid for a given eps
std::pair<double, double> jacobian_ratio_range(const Hierarchy& h, double eps, bool& positive) {
  double lo = INFINITY, hi = -INFINITY;
  positive = true;
  for (std::size_t ir = 0; ir < h.nr(); ++ir) {
    const double L = h.gravity().L(h.grid().r[ir]);
    for (std::size_t it = 0; it < h.nt(); ++it) {
      const double t = h.grid().tau[it];
      const double mg = (t - 1.0) * L;
      const Jet a = h.phi_app_jet(eps, it, ir);
      const Jet z = h.phi_jet(0, it, ir);
      if (!(a.value() > 0.0)) positive = false;
      const double Ja = a.value() * a.value() * (a.value() + lambda_op(mg, a.at(1, 0), a.at(0, 1)));
      const double J0 = z.value() * z.value() * (z.value() + lambda_op(mg, z.at(1, 0), z.at(0, 1)));
      lo = std::min(lo, Ja / J0);
      hi = std::max(hi, Ja / J0);
    }
  }
  return {lo, hi};
}

}  // namespace

PhiAppReport check_phi_app(const Hierarchy& h, double eps) {
  PhiAppReport rep;
  const auto& P = h.params();
  for (std::size_t it = 0; it < h.nt(); ++it) {
    const double t = h.grid().tau[it];
    for (std::size_t ir = 0; ir < h.nr(); ++ir) {
      const double a = h.phi_app_jet(eps, it, ir).value();
      const double z = std::pow(t, 2.0 / 3.0);
      if (eps > 0.0) rep.fitted_C = std::max(rep.fitted_C, std::abs(a / z - 1.0) / (eps * std::pow(t, P.delta)));
    }
  }
  bool pos = true;
  std::tie(rep.jac_min, rep.jac_max) = jacobian_ratio_range(h, eps, pos);
  rep.positive = pos;
  auto ok = [&](double e) {
    bool p = true;
    const auto [lo, hi] = jacobian_ratio_range(h, e, p);
    return p && lo >= 0.9 && hi <= 1.1;
  };
  double a = 0.0, b = 1.0;
  if (ok(b)) {
    rep.eps_max = b;
  } else {
    for (int k = 0; k < 40; ++k) {
      const double m = 0.5 * (a + b);
      (ok(m) ? a : b) = m;
    }
    rep.eps_max = a;
  }
  return rep;
}

}  // namespace collapse
