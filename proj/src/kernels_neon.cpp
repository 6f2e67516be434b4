// NEON kernel variants for aarch64. Same contract as the AVX2 unit: no fused
// multiply-add, so elementwise kernels are bit-identical to the scalar
// reference and only reduction order differs.

#include <arm_neon.h>

#include <cstddef>

#include "src/kernels_impl.hpp"

namespace ncoadj::kern::detail {
namespace {

double sum(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc1 =
        vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sumsq_dev(const double* x, std::size_t n, double center) {
  float64x2_t c = vdupq_n_f64(center);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(x + i), c);
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    double d = x[i] - center;
    out += d * d;
  }
  return out;
}

double weighted_sumsq(const double* w, const double* r, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vld1q_f64(w + i), vld1q_f64(r + i));
    acc = vaddq_f64(acc, vmulq_f64(t, t));
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    double t = w[i] * r[i];
    out += t * t;
  }
  return out;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t yi = vld1q_f64(y + i);
    yi = vaddq_f64(yi, vmulq_f64(av, vld1q_f64(x + i)));
    vst1q_f64(y + i, yi);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void arm_sums(const int* a, const double* y, std::size_t n, double& sum1,
              double& sum0, std::size_t& n1) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t k = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t av = vcvtq_f64_s64(vmovl_s32(vld1_s32(a + i)));
    float64x2_t yv = vld1q_f64(y + i);
    float64x2_t ay = vmulq_f64(av, yv);
    s1 += vaddvq_f64(ay);
    s0 += vaddvq_f64(vsubq_f64(yv, ay));
    k += static_cast<std::size_t>(vaddvq_f64(av));
  }
  for (; i < n; ++i) {
    if (a[i]) {
      s1 += y[i];
      ++k;
    } else {
      s0 += y[i];
    }
  }
  sum1 = s1;
  sum0 = s0;
  n1 = k;
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops{sum, dot, sumsq_dev, weighted_sumsq, axpy, arm_sums};
  return ops;
}

}  // namespace ncoadj::kern::detail
