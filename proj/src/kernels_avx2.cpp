// AVX2 kernel variants. This translation unit is the only one compiled with
// -mavx2; callers reach it through the runtime dispatch table only after
// __builtin_cpu_supports("avx2") verified the ISA. No FMA intrinsics are
// used, so the elementwise kernels match the scalar reference bit for bit
// under -ffp-contract=off; reductions differ only by summation order.

#include <immintrin.h>

#include <cstddef>

#include "src/kernels_impl.hpp"

namespace ncoadj::kern::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, swapped));
}

double sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(
        acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4),
                                             _mm256_loadu_pd(y + i + 4)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sumsq_dev(const double* x, std::size_t n, double center) {
  __m256d c = _mm256_set1_pd(center);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), c);
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

double weighted_sumsq(const double* w, const double* r, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d t0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(r + i));
    __m256d t1 =
        _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(r + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(t0, t0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(t1, t1));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    double t = w[i] * r[i];
    acc += t * t;
  }
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yi = _mm256_loadu_pd(y + i);
    yi = _mm256_add_pd(yi, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, yi);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void arm_sums(const int* a, const double* y, std::size_t n, double& sum1,
              double& sum0, std::size_t& n1) {
  __m256d s1 = _mm256_setzero_pd();
  __m256d s0 = _mm256_setzero_pd();
  __m256d cnt = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d av = _mm256_cvtepi32_pd(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i)));
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d ay = _mm256_mul_pd(av, yv);
    s1 = _mm256_add_pd(s1, ay);
    s0 = _mm256_add_pd(s0, _mm256_sub_pd(yv, ay));
    cnt = _mm256_add_pd(cnt, av);
  }
  double t1 = hsum(s1), t0 = hsum(s0), tc = hsum(cnt);
  std::size_t k = static_cast<std::size_t>(tc);
  for (; i < n; ++i) {
    if (a[i]) {
      t1 += y[i];
      ++k;
    } else {
      t0 += y[i];
    }
  }
  sum1 = t1;
  sum0 = t0;
  n1 = k;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{sum, dot, sumsq_dev, weighted_sumsq, axpy, arm_sums};
  return ops;
}

}  // namespace ncoadj::kern::detail
