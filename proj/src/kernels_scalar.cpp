#include "collapse/kernels.hpp"

namespace collapse::kernels::scalar {

void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  for (std::size_t i = lo; i < hi; ++i) out[i] = ((f[i - 2] - 8.0 * f[i - 1]) + (8.0 * f[i + 1] - f[i + 2])) * c;
}

void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  for (std::size_t i = lo; i < hi; ++i)
    out[i] = ((16.0 * (f[i - 1] + f[i + 1]) - 30.0 * f[i]) - (f[i - 2] + f[i + 2])) * c;
}

void axpy(const double* y, const double* k, double c, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + c * k[i];
}

void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + c * ((k1[i] + k4[i]) + 2.0 * (k2[i] + k3[i]));
}

double weighted_dot(const double* w, const double* f, const double* g, std::size_t n) {
  double l[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int j = 0; j < 4; ++j) l[j] += (w[i + j] * f[i + j]) * g[i + j];
  double s = (l[0] + l[1]) + (l[2] + l[3]);
  for (; i < n; ++i) s += (w[i] * f[i]) * g[i];
  return s;
}

}  // namespace collapse::kernels::scalar
