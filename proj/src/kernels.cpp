#include "collapse/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace collapse::kernels {

namespace {

Isa detect() {
  const char* env = std::getenv("COLLAPSE_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return avx2_available() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const char* to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_available()) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

#if defined(__x86_64__) || defined(_M_X64)
#define COLLAPSE_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define COLLAPSE_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  COLLAPSE_DISPATCH(fd1, f, out, lo, hi, c);
}
void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c) {
  COLLAPSE_DISPATCH(fd2, f, out, lo, hi, c);
}
void axpy(const double* y, const double* k, double c, double* out, std::size_t n) {
  COLLAPSE_DISPATCH(axpy, y, k, c, out, n);
}
void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n) {
  COLLAPSE_DISPATCH(rk4_combine, y, k1, k2, k3, k4, c, out, n);
}
double weighted_dot(const double* w, const double* f, const double* g, std::size_t n) {
  return COLLAPSE_DISPATCH(weighted_dot, w, f, g, n);
}

}  // namespace collapse::kernels
