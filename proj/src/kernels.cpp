#include "ncoadj/kernels.hpp"

#include <atomic>
#include <mutex>

#include "ncoadj/errors.hpp"
#include "src/kernels_impl.hpp"

namespace ncoadj::kern {

namespace detail {

// Reference implementations: plain sequential loops. Reduction results from
// other ISAs are compared against these in tests (order-of-summation
// tolerance); elementwise kernels must match them bit for bit.
namespace scalar {

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sumsq_dev(const double* x, std::size_t n, double center) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

double weighted_sumsq(const double* w, const double* r, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = w[i] * r[i];
    acc += t * t;
  }
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void arm_sums(const int* a, const double* y, std::size_t n, double& sum1,
              double& sum0, std::size_t& n1) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
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

}  // namespace scalar

const Ops& scalar_ops() {
  static const Ops ops{scalar::sum,   scalar::dot,
                       scalar::sumsq_dev, scalar::weighted_sumsq,
                       scalar::axpy,  scalar::arm_sums};
  return ops;
}

}  // namespace detail

namespace {

struct Dispatch {
  const detail::Ops* ops;
  Isa isa;
};

Dispatch detect() {
#if defined(NCOADJ_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2"))
    return {&detail::avx2_ops(), Isa::avx2};
#endif
#if defined(NCOADJ_HAVE_NEON)
  return {&detail::neon_ops(), Isa::neon};
#endif
  return {&detail::scalar_ops(), Isa::scalar};
}

std::atomic<const detail::Ops*> g_ops{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};
std::mutex g_init_mutex;

const detail::Ops& ops() {
  const detail::Ops* p = g_ops.load(std::memory_order_acquire);
  if (p) return *p;
  std::lock_guard<std::mutex> lock(g_init_mutex);
  p = g_ops.load(std::memory_order_relaxed);
  if (!p) {
    Dispatch d = detect();
    g_isa.store(d.isa, std::memory_order_relaxed);
    g_ops.store(d.ops, std::memory_order_release);
    p = d.ops;
  }
  return *p;
}

}  // namespace

std::string isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa active() {
  ops();  // ensure detection ran
  return g_isa.load(std::memory_order_relaxed);
}

std::vector<Isa> available() {
  std::vector<Isa> out{Isa::scalar};
#if defined(NCOADJ_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) out.push_back(Isa::avx2);
#endif
#if defined(NCOADJ_HAVE_NEON)
  out.push_back(Isa::neon);
#endif
  return out;
}

void force(Isa isa) {
  std::lock_guard<std::mutex> lock(g_init_mutex);
  switch (isa) {
    case Isa::scalar:
      g_isa.store(Isa::scalar, std::memory_order_relaxed);
      g_ops.store(&detail::scalar_ops(), std::memory_order_release);
      return;
    case Isa::avx2:
#if defined(NCOADJ_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2")) {
        g_isa.store(Isa::avx2, std::memory_order_relaxed);
        g_ops.store(&detail::avx2_ops(), std::memory_order_release);
        return;
      }
#endif
      break;
    case Isa::neon:
#if defined(NCOADJ_HAVE_NEON)
      g_isa.store(Isa::neon, std::memory_order_relaxed);
      g_ops.store(&detail::neon_ops(), std::memory_order_release);
      return;
#else
      break;
#endif
  }
  throw validation_error("kernel implementation '" + isa_name(isa) +
                         "' is not available on this machine");
}

double sum(const double* x, std::size_t n) { return ops().sum(x, n); }

double dot(const double* x, const double* y, std::size_t n) {
  return ops().dot(x, y, n);
}

double sumsq_dev(const double* x, std::size_t n, double center) {
  return ops().sumsq_dev(x, n, center);
}

double weighted_sumsq(const double* w, const double* r, std::size_t n) {
  return ops().weighted_sumsq(w, r, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  ops().axpy(a, x, y, n);
}

void arm_sums(const int* a, const double* y, std::size_t n, double& sum1,
              double& sum0, std::size_t& n1) {
  ops().arm_sums(a, y, n, sum1, sum0, n1);
}

}  // namespace ncoadj::kern
