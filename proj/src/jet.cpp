#include "collapse/jet.hpp"

#include <algorithm>

namespace collapse {

double factorial(int k) {
  static const auto table = [] {
    std::array<double, 2 * kMaxJetOrder + 2> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  if (k < 0 || k >= static_cast<int>(table.size())) throw std::out_of_range("factorial");
  return table[k];
}

double Jet::derivative(int i, int j) const {
  if (i + j > order_) throw std::out_of_range("jet derivative beyond order");
  return at(i, j) * factorial(i) * factorial(j);
}

Jet Jet::truncated(int order) const {
  if (order > order_) throw std::invalid_argument("cannot raise jet order");
  Jet r(order);
  std::copy_n(c_.begin(), coeff_count(order), r.c_.begin());
  return r;
}

Jet Jet::d_tau() const {
  if (order_ == 0) throw std::invalid_argument("d_tau of order-0 jet");
  Jet r(order_ - 1);
  for (int d = 0; d < order_; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      r.at(i, j) = (i + 1) * at(i + 1, j);
    }
  return r;
}

Jet Jet::d_rho() const {
  if (order_ == 0) throw std::invalid_argument("d_rho of order-0 jet");
  Jet r(order_ - 1);
  for (int d = 0; d < order_; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      r.at(i, j) = (j + 1) * at(i, j + 1);
    }
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  order_ = std::min(order_, o.order_);
  const int n = coeff_count(order_);
  for (int k = 0; k < n; ++k) c_[k] += o.c_[k];
  std::fill(c_.begin() + n, c_.end(), 0.0);
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  order_ = std::min(order_, o.order_);
  const int n = coeff_count(order_);
  for (int k = 0; k < n; ++k) c_[k] -= o.c_[k];
  std::fill(c_.begin() + n, c_.end(), 0.0);
  return *this;
}

Jet& Jet::operator*=(double s) {
  const int n = coeff_count(order_);
  for (int k = 0; k < n; ++k) c_[k] *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  const int K = std::min(a.order_, b.order_);
  Jet r(K);
  for (int d1 = 0; d1 <= K; ++d1) {
    for (int j1 = 0; j1 <= d1; ++j1) {
      const double x = a.at(d1 - j1, j1);
      if (x == 0.0) continue;
      for (int d2 = 0; d2 <= K - d1; ++d2) {
        const int base = Jet::index(d1 - j1 + d2, j1);
        const double* bc = &b.c_[d2 * (d2 + 1) / 2];
        // index(i1+i2, j1+j2) with i2 = d2 - j2 is base + j2 along the same diagonal
        for (int j2 = 0; j2 <= d2; ++j2) r.c_[base + j2] += x * bc[j2];
      }
    }
  }
  return r;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator-(Jet a) { return a *= -1.0; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, Jet a) {
  a *= -1.0;
  return a += s;
}
Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

namespace {

// sum_k coef[k] u^k with u free of a constant term
Jet horner(const Jet& u, const double* coef) {
  const int K = u.order();
  Jet r(K, coef[K]);
  for (int k = K - 1; k >= 0; --k) {
    r = r * u;
    r += coef[k];
  }
  return r;
}

Jet integer_power(Jet base, unsigned e) {
  Jet r(base.order(), 1.0);
  while (e) {
    if (e & 1u) r = r * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return r;
}

}  // namespace

Jet pow(const Jet& f, double nu) {
  const int K = f.order();
  const double f0 = f.value();
  if (f0 == 0.0) {
    // exponents like 1 / (1.2 - 1) miss the integer by an ulp
    const double nr = std::round(nu);
    if (nu >= 0.0 && std::abs(nu - nr) <= 1e-9 * std::max(1.0, nu) && nr <= 64.0)
      return integer_power(f, static_cast<unsigned>(nr));
    if (nu > K) return Jet(K);
    throw std::domain_error("pow of jet with vanishing value and non-smooth exponent");
  }
  if (f0 < 0.0 && nu != std::floor(nu)) throw std::domain_error("pow of negative jet");
  Jet u = f * (1.0 / f0);
  u -= 1.0;
  std::array<double, kMaxJetOrder + 1> coef{};
  coef[0] = 1.0;
  for (int k = 1; k <= K; ++k) coef[k] = coef[k - 1] * (nu - (k - 1)) / k;
  return horner(u, coef.data()) * std::pow(f0, nu);
}

Jet exp(const Jet& f) {
  const int K = f.order();
  Jet u = f;
  u.at(0, 0) = 0.0;
  std::array<double, kMaxJetOrder + 1> coef{};
  for (int k = 0; k <= K; ++k) coef[k] = 1.0 / factorial(k);
  return horner(u, coef.data()) * std::exp(f.value());
}

Jet log(const Jet& f) {
  const int K = f.order();
  const double f0 = f.value();
  if (!(f0 > 0.0)) throw std::domain_error("log of non-positive jet");
  Jet u = f * (1.0 / f0);
  u -= 1.0;
  std::array<double, kMaxJetOrder + 1> coef{};
  for (int k = 1; k <= K; ++k) coef[k] = ((k % 2) ? 1.0 : -1.0) / k;
  Jet r = horner(u, coef.data());
  r.at(0, 0) = std::log(f0);
  return r;
}

Jet sqrt(const Jet& f) { return pow(f, 0.5); }
Jet reciprocal(const Jet& f) { return pow(f, -1.0); }

Jet rho_series(int order, const double* coeffs) {
  Jet r(order);
  for (int k = 0; k <= order; ++k) r.at(0, k) = coeffs[k];
  return r;
}

}  // namespace collapse
