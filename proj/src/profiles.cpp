#include "collapse/profiles.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace collapse {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double gl8(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 8>::integrate(f, a, b);
}

// coefficients of p(u) composed with u(b) = r0 (e^b - 1), truncated at b^order
std::vector<double> compose_with_log_radius(const std::vector<double>& p, double r0, int order) {
  std::vector<double> u(order + 1, 0.0);
  double f = 1.0;
  for (int k = 1; k <= order; ++k) {
    f /= k;
    u[k] = r0 * f;
  }
  std::vector<double> result(order + 1, 0.0);
  std::vector<double> power(order + 1, 0.0);
  power[0] = 1.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    for (int k = 0; k <= order; ++k) result[k] += p[m] * power[k];
    std::vector<double> next(order + 1, 0.0);
    for (int i = 0; i <= order; ++i)
      if (power[i] != 0.0)
        for (int j = 1; i + j <= order; ++j) next[i + j] += power[i] * u[j];
    power.swap(next);
  }
  return result;
}

}  // namespace

ProfileKind parse_profile_kind(const std::string& s) {
  if (s == "polytropic") return ProfileKind::polytropic;
  if (s == "tabulated") return ProfileKind::tabulated;
  if (s == "uniform") return ProfileKind::uniform;
  throw std::invalid_argument("unknown profile kind: " + s);
}

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::polytropic: return "polytropic";
    case ProfileKind::tabulated: return "tabulated";
    case ProfileKind::uniform: return "uniform";
  }
  return "unknown";
}

EnthalpyProfile::EnthalpyProfile(double gamma, double n) : gamma_(gamma), n_(n) {
  if (!(gamma > 1.0)) throw std::invalid_argument("gamma must exceed 1");
}

double EnthalpyProfile::w_alpha(double r) const {
  const double v = w(r);
  return v > 0.0 ? std::pow(v, alpha()) : 0.0;
}

// ---------------------------------------------------------------------------

PolytropicProfile::PolytropicProfile(double gamma, double n, double a)
    : EnthalpyProfile(gamma, n), a_(a) {
  if (!(a > 0.0)) throw std::invalid_argument("polytropic amplitude must be positive");
  if (!(n > 0.0)) throw std::invalid_argument("flatness must be positive");
}

double PolytropicProfile::w(double r) const { return a_ * (1.0 - std::pow(r, flatness())); }

double PolytropicProfile::dw(double r) const {
  const double n = flatness();
  return -a_ * n * std::pow(r, n - 1.0);
}

double PolytropicProfile::deficit(double r) const {
  const double x = std::pow(r, flatness());
  if (x >= 1.0) return std::pow(a_, alpha());
  return -std::pow(a_, alpha()) * std::expm1(alpha() * std::log1p(-x));
}

std::vector<double> PolytropicProfile::rho_coeffs(double r0, int order) const {
  const double n = flatness();
  const double x = std::pow(r0, n);
  std::vector<double> c(order + 1);
  c[0] = a_ * (1.0 - x);
  double t = a_ * x;
  for (int k = 1; k <= order; ++k) {
    t *= n / k;
    c[k] = -t;
  }
  return c;
}

UniformProfile::UniformProfile(double gamma) : EnthalpyProfile(gamma, 1.0) {}

std::vector<double> UniformProfile::rho_coeffs(double, int order) const {
  std::vector<double> c(order + 1, 0.0);
  c[0] = 1.0;
  return c;
}

// ---------------------------------------------------------------------------

struct TabulatedProfile::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> s;
};

TabulatedProfile::TabulatedProfile(double gamma, double n, std::vector<double> r,
                                   std::vector<double> w_alpha)
    : EnthalpyProfile(gamma, n) {
  if (r.size() != w_alpha.size() || r.size() < 8)
    throw std::invalid_argument("tabulated profile needs at least 8 (r, w_alpha) samples");
  h_ = (r.back() - r.front()) / static_cast<double>(r.size() - 1);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double expected = r.front() + h_ * static_cast<double>(i);
    if (std::abs(r[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw std::invalid_argument("tabulated profile samples must be uniformly spaced in r");
  }
  if (std::abs(r.front()) > 1e-12 || std::abs(r.back() - 1.0) > 1e-12)
    throw std::invalid_argument("tabulated profile must cover [0, 1]");
  std::vector<double> w(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (w_alpha[i] < 0.0) throw std::invalid_argument("negative w_alpha sample");
    w[i] = std::pow(w_alpha[i], 1.0 / alpha());
  }
  // even extension at r = 0 fixes w'(0) = 0
  spline_ = std::make_unique<Spline>(
      Spline{boost::math::interpolators::cardinal_cubic_b_spline<double>(w.data(), w.size(), 0.0, h_, 0.0)});
}

TabulatedProfile::~TabulatedProfile() = default;

double TabulatedProfile::w(double r) const { return spline_->s(std::clamp(r, 0.0, 1.0)); }
double TabulatedProfile::dw(double r) const { return spline_->s.prime(std::clamp(r, 0.0, 1.0)); }
double TabulatedProfile::d2w(double r) const { return spline_->s.double_prime(std::clamp(r, 0.0, 1.0)); }

double TabulatedProfile::d3w(double r) const {
  const double eta = 1e-4 * h_;
  const double lo = std::max(0.0, r - eta);
  const double hi = std::min(1.0, r + eta);
  return (d2w(hi) - d2w(lo)) / (hi - lo);
}

double TabulatedProfile::deficit(double r) const { return w0_alpha() - w_alpha(r); }

std::vector<double> TabulatedProfile::rho_coeffs(double r0, int order) const {
  const std::vector<double> p{w(r0), dw(r0), d2w(r0) / 2.0, d3w(r0) / 6.0};
  return compose_with_log_radius(p, r0, order);
}

void read_profile_samples(const std::string& path, std::vector<double>& r, std::vector<double>& w_alpha) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile samples: " + path);
  r.clear();
  w_alpha.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char c = line.front();
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a = 0.0, b = 0.0;
    if (!(ss >> a >> b)) throw std::runtime_error("malformed profile sample line: " + line);
    r.push_back(a);
    w_alpha.push_back(b);
  }
}

std::unique_ptr<EnthalpyProfile> make_profile(const ProfileSpec& spec) {
  switch (spec.kind) {
    case ProfileKind::polytropic: return std::make_unique<PolytropicProfile>(spec.gamma, spec.n, spec.a);
    case ProfileKind::uniform: return std::make_unique<UniformProfile>(spec.gamma);
    case ProfileKind::tabulated: {
      std::vector<double> r, wa;
      read_profile_samples(spec.samples_path, r, wa);
      return std::make_unique<TabulatedProfile>(spec.gamma, spec.n, std::move(r), std::move(wa));
    }
  }
  throw std::invalid_argument("unknown profile kind");
}

// ---------------------------------------------------------------------------
// Gravity

namespace {
constexpr double kLogSwitch = 0.5;
}

GravityData::GravityData(std::shared_ptr<const EnthalpyProfile> profile, int cells)
    : profile_(std::move(profile)) {
  w0a_ = profile_->w0_alpha();
  int c = cells;
  for (;;) {
    build(c);
    const double coarse = mass_total_;
    const double coarse_mid = deficit_integral(0.9);
    GravityData fine(*this);
    fine.build(2 * c);
    const double rel = std::abs(fine.mass_total_ - coarse) / std::abs(fine.mass_total_);
    const double rel_mid = std::abs(fine.deficit_integral(0.9) - coarse_mid) / std::max(1e-300, w0a_);
    if (std::getenv("COLLAPSE_DEBUG")) std::fprintf(stderr, "cells %d rel %g rel_mid %g\n", c, rel, rel_mid);
    if (rel < 1e-11 && rel_mid < 1e-11) break;
    if (c >= (1 << 16)) throw std::runtime_error("gravity quadrature did not converge; profile is under-resolved");
    c *= 2;
  }
}

void GravityData::build(int cells) {
  cells_ = cells;
  h_ = 1.0 / cells;
  cum_deficit_.assign(cells + 1, 0.0);
  cum_outer_.assign(cells + 1, 0.0);
  const auto& p = *profile_;
  auto dfun = [&](double s) { return p.deficit(s) * s * s; };
  auto mfun = [&](double s) { return p.w_alpha(s) * s * s; };
  for (int k = 1; k <= cells; ++k) {
    const double rk = k * h_;
    if (rk <= kLogSwitch)
      cum_deficit_[k] = deficit_integral(rk);
    else
      cum_deficit_[k] = cum_deficit_[k - 1] + gl8(dfun, rk - h_, rk);
  }
  for (int k = cells - 1; k >= 0; --k) cum_outer_[k] = cum_outer_[k + 1] + gl8(mfun, k * h_, (k + 1) * h_);
  mass_total_ = 4.0 * kPi * cum_outer_[0];
}

double GravityData::deficit_integral(double r) const {
  if (r <= 0.0) return 0.0;
  const auto& p = *profile_;
  if (r <= kLogSwitch || cum_deficit_.empty()) {
    // integrate in t = log s, the integrand decays like s^(n+3)
    const double n = std::max(1.0, p.flatness());
    const double t1 = std::log(r);
    const double t0 = t1 - 60.0 / (n + 3.0);
    const int sub = 48;
    const double dt = (t1 - t0) / sub;
    auto f = [&](double t) {
      const double s = std::exp(t);
      return p.deficit(s) * s * s * s;
    };
    double acc = 0.0;
    for (int i = 0; i < sub; ++i) acc += gl8(f, t0 + i * dt, t0 + (i + 1) * dt);
    return acc;
  }
  const int k = std::min(cells_ - 1, static_cast<int>(r / h_));
  auto dfun = [&](double s) { return p.deficit(s) * s * s; };
  return cum_deficit_[k] + gl8(dfun, k * h_, r);
}

double GravityData::outer_integral(double r) const {
  if (r >= 1.0) return 0.0;
  r = std::max(r, 0.0);
  const int k = std::min(cells_ - 1, static_cast<int>(r / h_));
  const auto& p = *profile_;
  auto mfun = [&](double s) { return p.w_alpha(s) * s * s; };
  return cum_outer_[k + 1] + gl8(mfun, r, (k + 1) * h_);
}

double GravityData::G(double r) const {
  const double G0 = 4.0 * kPi / 3.0 * w0a_;
  if (r <= 0.0) return G0;
  return G0 - 4.0 * kPi * deficit_integral(r) / (r * r * r);
}

double GravityData::G_deficit(double r) const {
  if (r <= 0.0) return 0.0;
  return 4.0 * kPi * deficit_integral(r) / (r * r * r);
}

double GravityData::g(double r) const { return 3.0 * std::sqrt(G(r) / 2.0); }

double GravityData::rdG(double r) const {
  if (r <= 0.0) return 0.0;
  const double E = 4.0 * kPi * deficit_integral(r) / (r * r * r);
  return 3.0 * E - 4.0 * kPi * profile_->deficit(r);
}

double GravityData::L(double r) const {
  if (r <= 0.0) return 0.0;
  return rdG(r) / (2.0 * G(r));
}

double GravityData::mass_within(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return mass_total_;
  return 4.0 * kPi * (w0a_ * r * r * r / 3.0 - deficit_integral(r));
}

double GravityData::mass_outside(double r) const { return 4.0 * kPi * outer_integral(r); }

double GravityData::g_inverse(double target, double tol) const {
  const double ga = g(0.0);
  const double gb = g(1.0);
  if (!(target <= ga && target >= gb)) return std::numeric_limits<double>::quiet_NaN();
  auto f = [&](double r) { return g(r) - target; };
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto [lo, hi] = boost::math::tools::bisect(f, 0.0, 1.0, done);
  return 0.5 * (lo + hi);
}

ProfileJet GravityData::jet(double r0, int K) const {
  if (!(r0 > 0.0)) throw std::invalid_argument("profile jet requires r > 0");
  const auto& p = *profile_;
  ProfileJet pj;
  pj.r = r0;
  const std::vector<double> wc = p.rho_coeffs(r0, K + 1);
  const Jet w_full = rho_series(K + 1, wc.data());
  pj.w = w_full.truncated(K);
  pj.rw = w_full.d_rho();

  // deficit jet: constant from the cancellation-free evaluation, the rest from w^alpha
  const Jet wa = pow(pj.w, p.alpha());
  std::vector<double> d(K + 1);
  d[0] = p.deficit(r0);
  for (int k = 1; k <= K; ++k) d[k] = -wa.at(0, k);

  // E = 4 pi int_0^r deficit s^2 / r^3 obeys d_rho E = 4 pi deficit - 3E
  std::vector<double> E(K + 2);
  E[0] = 4.0 * kPi * deficit_integral(r0) / (r0 * r0 * r0);
  for (int k = 0; k <= K; ++k) E[k + 1] = (4.0 * kPi * d[k] - 3.0 * E[k]) / (k + 1);
  const double G0 = 4.0 * kPi / 3.0 * w0a_;
  std::vector<double> Gc(K + 1), dG(K + 1);
  for (int k = 0; k <= K; ++k) {
    Gc[k] = -E[k];
    dG[k] = -(k + 1) * E[k + 1];
  }
  Gc[0] += G0;
  const Jet Gj = rho_series(K, Gc.data());
  const Jet dGj = rho_series(K, dG.data());
  pj.g2 = Gj * 4.5;
  pj.L = dGj / (Gj * 2.0);

  std::vector<double> ir(K + 1);
  double t = 1.0 / (r0 * r0);
  for (int k = 0; k <= K; ++k) {
    ir[k] = t;
    t *= -2.0 / (k + 1);
  }
  pj.inv_r2 = rho_series(K, ir.data());
  return pj;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ProfileCheck& c) { return c.pass; });
}

std::vector<double> numeric_L(const GravityData& gd, int nr) {
  const double h = 1.0 / nr;
  std::vector<double> lg(nr + 1);
  for (int k = 0; k <= nr; ++k) lg[k] = std::log(gd.g(k * h));
  std::vector<double> L(nr + 1, std::numeric_limits<double>::quiet_NaN());
  for (int k = 3; k <= nr - 3; ++k) {
    const double d = (45.0 * (lg[k + 1] - lg[k - 1]) - 9.0 * (lg[k + 2] - lg[k - 2]) + (lg[k + 3] - lg[k - 3])) /
                     (60.0 * h);
    L[k] = k * h * d;
  }
  return L;
}

ValidationReport validate_profile(const GravityData& gd, const ValidationOptions& opt) {
  const auto& p = gd.profile();
  const double n = p.flatness();
  const int nr = opt.nr > 0 ? opt.nr : std::max(2000, static_cast<int>(200.0 * n));
  const double h = 1.0 / nr;
  ValidationReport rep;
  std::ostringstream os;

  // (w1) positivity inside, vacuum at r = 1
  {
    bool pos = true;
    double worst_r = 0.0;
    for (int k = 0; k < nr; ++k)
      if (!(p.w(k * h) > 0.0)) {
        pos = false;
        worst_r = k * h;
        break;
      }
    const double w1 = p.w(1.0);
    const bool vac = std::abs(w1) <= 1e-10 * std::max(1.0, p.w(0.0));
    os.str("");
    os << "w(1)=" << w1;
    if (!pos) os << "; w<=0 at r=" << worst_r;
    rep.checks.push_back({"w1", pos && vac, os.str()});
  }
  // (w2) outward slope at the boundary
  {
    const double d = p.dw(1.0);
    os.str("");
    os << "w'(1)=" << d;
    rep.checks.push_back({"w2", d < 0.0, os.str()});
  }
  // (w3) g monotone, -L/r^n bounded, identity residual
  {
    bool mono = true;
    double prev = gd.g(0.0);
    const double slack = 1e-13 * prev;
    double bad_r = 0.0;
    for (int k = 1; k <= nr; ++k) {
      const double gk = gd.g(k * h);
      if (gk > prev + slack) {
        mono = false;
        bad_r = k * h;
        break;
      }
      prev = gk;
    }
    os.str("");
    os << (mono ? "g non-increasing" : "g increases near r=") << (mono ? "" : std::to_string(bad_r));
    rep.checks.push_back({"g_monotone", mono, os.str()});

    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    const double lmin = std::log(opt.r_log_min);
    for (int i = 0; i < opt.n_log; ++i) {
      const double r = std::exp(lmin * (1.0 - static_cast<double>(i) / (opt.n_log - 1)));
      const double v = -gd.L(r) / std::pow(r, n);
      c1 = std::min(c1, v);
      c2 = std::max(c2, v);
    }
    rep.c1 = c1;
    rep.c2 = c2;
    os.str("");
    os << "c1=" << c1 << " c2=" << c2;
    rep.checks.push_back({"L_bounds", c1 > 0.0 && std::isfinite(c2) && c1 <= c2, os.str()});

    const auto Lfd = numeric_L(gd, nr);
    double res = 0.0;
    for (int k = 3; k <= nr - 3; ++k) {
      const double r = k * h;
      const double Lid = 9.0 * kPi * p.w_alpha(r) / (gd.g(r) * gd.g(r)) - 1.5;
      res = std::max(res, std::abs(Lfd[k] - Lid));
    }
    rep.identity_residual = res;
    os.str("");
    os << "max |L_fd - L_identity| = " << res;
    rep.checks.push_back({"gravity_identity", res < opt.identity_tol, os.str()});

    rep.L_at_one = gd.L(1.0);
  }
  // local exponent of g(0) - g(r) = 4.5 E / (g(0) + g(r)) near the centre
  {
    const double ra = std::pow(10.0, -120.0 / n);
    const double rb = std::pow(10.0, -60.0 / n);
    auto gdef = [&](double r) { return 4.5 * gd.G_deficit(r) / (gd.g(0.0) + gd.g(r)); };
    const double da = gdef(ra), db = gdef(rb);
    rep.taylor_exponent = (da > 0.0 && db > 0.0) ? std::log(db / da) / std::log(rb / ra) : 0.0;
  }
  return rep;
}

}  // namespace collapse
