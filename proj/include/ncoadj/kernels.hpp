#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Low-level numeric primitives used by the hot loops (OLS columns, arm
// statistics, permutation tests, sandwich accumulation). Each primitive has a
// scalar reference implementation plus SIMD variants; the implementation is
// chosen once at runtime from CPU capabilities. Elementwise kernels (axpy)
// are bit-identical across implementations; reductions may differ by
// summation order only.

namespace ncoadj::kern {

enum class Isa { scalar, avx2, neon };

std::string isa_name(Isa isa);

// Implementation in use (after lazy detection).
Isa active();

// Implementations usable on this machine; always contains Isa::scalar.
std::vector<Isa> available();

// Test hook: pin the implementation. Throws validation_error if `isa` is not
// available on this machine.
void force(Isa isa);

double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);

// Sum of (x[i] - center)^2.
double sumsq_dev(const double* x, std::size_t n, double center);

// Sum of (w[i] * r[i])^2.
double weighted_sumsq(const double* w, const double* r, std::size_t n);

// y[i] += a * x[i].
void axpy(double a, const double* x, double* y, std::size_t n);

// Single pass over a 0/1 treatment vector: sums of y per arm and the
// treated count.
void arm_sums(const int* a, const double* y, std::size_t n, double& sum1,
              double& sum0, std::size_t& n1);

}  // namespace ncoadj::kern
