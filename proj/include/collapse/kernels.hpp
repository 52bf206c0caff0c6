#pragma once

// Hot loops with a scalar reference and an AVX2 variant picked at runtime.
// Both variants perform the same operations in the same order (no FMA), so their
// results are bit-identical; the tests hold them to exact equality.

#include <cstddef>

namespace collapse::kernels {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);
bool avx2_available();
// AVX2 when the CPU has it, unless COLLAPSE_SIMD=scalar is set
Isa active_isa();
// override for tests and benchmarks; ignored (returns false) if avx2 is unavailable
bool force_isa(Isa isa);

// out[i] = ((f[i-2] - 8 f[i-1]) + (8 f[i+1] - f[i+2])) * c, lo <= i < hi
void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
// out[i] = ((16 (f[i-1] + f[i+1]) - 30 f[i]) - (f[i-2] + f[i+2])) * c, lo <= i < hi
void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
// out = y + c k
void axpy(const double* y, const double* k, double c, double* out, std::size_t n);
// out = y + c ((k1 + k4) + 2 (k2 + k3))
void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n);
// sum w f g accumulated in four interleaved lanes, combined as (l0 + l1) + (l2 + l3), then the tail
double weighted_dot(const double* w, const double* f, const double* g, std::size_t n);

namespace scalar {
void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
void axpy(const double* y, const double* k, double c, double* out, std::size_t n);
void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n);
double weighted_dot(const double* w, const double* f, const double* g, std::size_t n);
}  // namespace scalar

namespace avx2 {
void fd1(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
void fd2(const double* f, double* out, std::size_t lo, std::size_t hi, double c);
void axpy(const double* y, const double* k, double c, double* out, std::size_t n);
void rk4_combine(const double* y, const double* k1, const double* k2, const double* k3, const double* k4, double c,
                 double* out, std::size_t n);
double weighted_dot(const double* w, const double* f, const double* g, std::size_t n);
}  // namespace avx2

}  // namespace collapse::kernels
