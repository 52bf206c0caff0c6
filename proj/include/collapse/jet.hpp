#pragma once

// Truncated bivariate Taylor series in (tau, rho), rho = log r.
// Coefficient c(i, j) multiplies a^i b^j where a = tau - tau0, b = rho - rho0,
// so the mixed derivative d_tau^i d_rho^j f equals i! j! c(i, j).

#include <array>
#include <cmath>
#include <stdexcept>

namespace collapse {

inline constexpr int kMaxJetOrder = 10;

class Jet {
 public:
  static constexpr int kMaxCoeffs = (kMaxJetOrder + 1) * (kMaxJetOrder + 2) / 2;

  Jet() = default;
  explicit Jet(int order, double value = 0.0) : order_(order) {
    if (order < 0 || order > kMaxJetOrder) throw std::invalid_argument("jet order out of range");
    c_[0] = value;
  }

  static Jet tau_variable(int order, double tau0) {
    Jet j(order, tau0);
    if (order >= 1) j.at(1, 0) = 1.0;
    return j;
  }
  static Jet rho_variable(int order, double rho0) {
    Jet j(order, rho0);
    if (order >= 1) j.at(0, 1) = 1.0;
    return j;
  }

  static constexpr int index(int i, int j) { return (i + j) * (i + j + 1) / 2 + j; }
  static constexpr int coeff_count(int order) { return (order + 1) * (order + 2) / 2; }

  int order() const { return order_; }
  double value() const { return c_[0]; }
  double& at(int i, int j) { return c_[index(i, j)]; }
  double at(int i, int j) const { return c_[index(i, j)]; }
  double* data() { return c_.data(); }
  const double* data() const { return c_.data(); }

  // d_tau^i d_rho^j at the expansion point
  double derivative(int i, int j) const;

  Jet truncated(int order) const;
  Jet d_tau() const;
  Jet d_rho() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& operator+=(double s) { c_[0] += s; return *this; }
  Jet& operator-=(double s) { c_[0] -= s; return *this; }

  friend Jet operator*(const Jet& a, const Jet& b);

 private:
  int order_ = 0;
  std::array<double, kMaxCoeffs> c_{};
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator-(Jet a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, Jet a);
Jet operator/(const Jet& a, const Jet& b);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

// f^nu. A vanishing constant term is allowed for non-negative integer nu and
// for nu larger than the jet order (all retained coefficients vanish).
Jet pow(const Jet& f, double nu);
Jet exp(const Jet& f);
Jet log(const Jet& f);
Jet sqrt(const Jet& f);
Jet reciprocal(const Jet& f);

// Jet depending on rho only, from coefficients of b^k.
Jet rho_series(int order, const double* coeffs);

double factorial(int k);

}  // namespace collapse
