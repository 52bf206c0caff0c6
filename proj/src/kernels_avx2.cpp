#include <immintrin.h>

#include "collapse/kernels.hpp"

namespace collapse::kernels::avx2 {

void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  const __m256d eight = _mm256_set1_pd(8.0), vc = _mm256_set1_pd(c);
  std::size_t i = lo;
  for (; i + 4 <= hi; i += 4) {
    const __m256d a = _mm256_sub_pd(_mm256_loadu_pd(f + i - 2), _mm256_mul_pd(eight, _mm256_loadu_pd(f + i - 1)));
    const __m256d b = _mm256_sub_pd(_mm256_mul_pd(eight, _mm256_loadu_pd(f + i + 1)), _mm256_loadu_pd(f + i + 2));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_add_pd(a, b), vc));
  }
  scalar::fd1(f, out, i, hi, c);
}

void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  const __m256d k16 = _mm256_set1_pd(16.0), k30 = _mm256_set1_pd(30.0), vc = _mm256_set1_pd(c);
  std::size_t i = lo;
  for (; i + 4 <= hi; i += 4) {
    const __m256d inner = _mm256_add_pd(_mm256_loadu_pd(f + i - 1), _mm256_loadu_pd(f + i + 1));
    const __m256d outer = _mm256_add_pd(_mm256_loadu_pd(f + i - 2), _mm256_loadu_pd(f + i + 2));
    const __m256d a = _mm256_sub_pd(_mm256_mul_pd(k16, inner), _mm256_mul_pd(k30, _mm256_loadu_pd(f + i)));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(a, outer), vc));
  }
  scalar::fd2(f, out, i, hi, c);
}

void axpy(const double* y, const double* k, double c, double* out, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(vc, _mm256_loadu_pd(k + i))));
  scalar::axpy(y + i, k + i, c, out + i, n - i);
}

void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c), two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_add_pd(_mm256_loadu_pd(k1 + i), _mm256_loadu_pd(k4 + i));
    const __m256d m = _mm256_mul_pd(two, _mm256_add_pd(_mm256_loadu_pd(k2 + i), _mm256_loadu_pd(k3 + i)));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(vc, _mm256_add_pd(e, m))));
  }
  scalar::rk4_combine(y + i, k1 + i, k2 + i, k3 + i, k4 + i, c, out + i, n - i);
}

double weighted_dot(const double* w, const double* f, const double* g, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(f + i)), _mm256_loadu_pd(g + i));
    acc = _mm256_add_pd(acc, p);
  }
  alignas(32) double l[4];
  _mm256_store_pd(l, acc);
  double s = (l[0] + l[1]) + (l[2] + l[3]);
  for (; i < n; ++i) s += (w[i] * f[i]) * g[i];
  return s;
}

}  // namespace collapse::kernels::avx2
