#pragma once

// Enthalpy profiles w(r) on [0,1] and the gravity data derived from them.

#include <memory>
#include <string>
#include <vector>

#include "collapse/jet.hpp"

namespace collapse {

enum class ProfileKind { polytropic, tabulated, uniform };

struct ProfileSpec {
  double gamma = 1.2;
  double n = 100.0;
  double a = 1.0;
  ProfileKind kind = ProfileKind::polytropic;
  std::string samples_path;
};

ProfileKind parse_profile_kind(const std::string& s);
std::string to_string(ProfileKind k);

class EnthalpyProfile {
 public:
  virtual ~EnthalpyProfile() = default;

  double gamma() const { return gamma_; }
  double alpha() const { return 1.0 / (gamma_ - 1.0); }
  double flatness() const { return n_; }

  virtual double w(double r) const = 0;
  virtual double dw(double r) const = 0;
  // w(0)^alpha - w(r)^alpha, evaluated without cancellation for flat profiles
  virtual double deficit(double r) const = 0;
  // coefficients of w(r0 e^b) in powers of b, k = 0..order
  virtual std::vector<double> rho_coeffs(double r0, int order) const = 0;

  double w_alpha(double r) const;
  double w0_alpha() const { return w_alpha(0.0); }

 protected:
  EnthalpyProfile(double gamma, double n);

 private:
  double gamma_;
  double n_;
};

// w = a (1 - r^n)
class PolytropicProfile final : public EnthalpyProfile {
 public:
  PolytropicProfile(double gamma, double n, double a);
  double w(double r) const override;
  double dw(double r) const override;
  double deficit(double r) const override;
  std::vector<double> rho_coeffs(double r0, int order) const override;
  double amplitude() const { return a_; }

 private:
  double a_;
};

// w^alpha = 1 everywhere; test profile without a vacuum boundary
class UniformProfile final : public EnthalpyProfile {
 public:
  explicit UniformProfile(double gamma);
  double w(double) const override { return 1.0; }
  double dw(double) const override { return 0.0; }
  double deficit(double) const override { return 0.0; }
  std::vector<double> rho_coeffs(double r0, int order) const override;
};

// Samples of (r, w^alpha) on a uniform grid, interpolated as a cubic B-spline in w.
class TabulatedProfile final : public EnthalpyProfile {
 public:
  TabulatedProfile(double gamma, double n, std::vector<double> r, std::vector<double> w_alpha);
  ~TabulatedProfile() override;
  double w(double r) const override;
  double dw(double r) const override;
  double deficit(double r) const override;
  std::vector<double> rho_coeffs(double r0, int order) const override;
  double d2w(double r) const;
  double d3w(double r) const;

 private:
  struct Spline;
  std::unique_ptr<Spline> spline_;
  double h_;
};

std::unique_ptr<EnthalpyProfile> make_profile(const ProfileSpec& spec);
// two-column CSV (r, w_alpha); header lines starting with a non-digit are skipped
void read_profile_samples(const std::string& path, std::vector<double>& r, std::vector<double>& w_alpha);

// rho-jets of profile quantities at a fixed radius r0 > 0, all of the requested order
struct ProfileJet {
  double r = 0.0;
  Jet w;        // w
  Jet rw;       // r dw/dr
  Jet g2;       // g^2 = 9G/2
  Jet L;        // r d log g / dr
  Jet inv_r2;   // 1/r^2
};

class GravityData {
 public:
  explicit GravityData(std::shared_ptr<const EnthalpyProfile> profile, int cells = 2048);

  const EnthalpyProfile& profile() const { return *profile_; }
  std::shared_ptr<const EnthalpyProfile> profile_ptr() const { return profile_; }

  double G(double r) const;
  // G(0) - G(r) without cancellation
  double G_deficit(double r) const;
  double g(double r) const;
  double L(double r) const;
  // r dG/dr = 4 pi w^alpha - 3G without cancellation
  double rdG(double r) const;
  double g0() const { return g(0.0); }
  double g1() const { return g(1.0); }

  // 4 pi int_0^r w^alpha s^2 ds and 4 pi int_r^1 w^alpha s^2 ds
  double mass_within(double r) const;
  double mass_outside(double r) const;
  double mass_total() const { return mass_total_; }

  // r with g(r) = target; nullopt-like NaN if target outside [g(1), g(0)]
  double g_inverse(double target, double tol = 1e-14) const;

  // M_g = (tau - 1) L(r)
  double m_g(double tau, double r) const { return (tau - 1.0) * L(r); }

  ProfileJet jet(double r0, int order) const;

  int cells() const { return cells_; }

 private:
  double deficit_integral(double r) const;  // int_0^r deficit(s) s^2 ds
  double outer_integral(double r) const;    // int_r^1 w^alpha s^2 ds
  void build(int cells);

  std::shared_ptr<const EnthalpyProfile> profile_;
  int cells_ = 0;
  double h_ = 0.0;
  double w0a_ = 0.0;
  double mass_total_ = 0.0;
  std::vector<double> cum_deficit_;  // at cell edges
  std::vector<double> cum_outer_;    // at cell edges, from the right
};

struct ProfileCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ProfileCheck> checks;
  double c1 = 0.0;
  double c2 = 0.0;
  double identity_residual = 0.0;  // max |L_fd - L_identity| on the interior grid
  double taylor_exponent = 0.0;    // local exponent of g(0) - g(r) near r = 0
  double L_at_one = 0.0;
  bool all_pass() const;
};

struct ValidationOptions {
  int nr = 0;  // 0 selects max(2000, 200 n)
  double identity_tol = 1e-8;
  double r_log_min = 1e-3;
  int n_log = 400;
};

ValidationReport validate_profile(const GravityData& gd, const ValidationOptions& opt = {});

// sixth-order finite-difference L = r d log g / dr on a uniform grid of nr intervals
std::vector<double> numeric_L(const GravityData& gd, int nr);

}  // namespace collapse
