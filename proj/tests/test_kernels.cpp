#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "ncoadj/errors.hpp"
#include "ncoadj/kernels.hpp"
#include "ncoadj/rng.hpp"

using namespace ncoadj;

namespace {

// Pin an ISA for the duration of a scope, restoring the previous one.
struct IsaGuard {
  kern::Isa saved;
  IsaGuard() : saved(kern::active()) {}
  ~IsaGuard() { kern::force(saved); }
};

std::vector<double> random_vec(rng::Stream& s, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * s.normal();
  return v;
}

// Absolute-plus-relative closeness for reductions that may reassociate.
bool near(double a, double b, double rel = 1e-11) {
  return std::fabs(a - b) <= rel * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

const std::size_t kLengths[] = {0,  1,  2,  3,  4,   5,   7,   8,    9,   15,
                                16, 17, 31, 32, 33,  64,  100, 257,  1000, 1001};

}  // namespace

TEST_CASE("kernel scalar reference values") {
  IsaGuard guard;
  kern::force(kern::Isa::scalar);

  double x[] = {1.0, 2.0, 3.0, 4.0};
  double y[] = {2.0, -1.0, 0.5, 3.0};
  CHECK(kern::sum(x, 4) == 10.0);
  CHECK(kern::dot(x, y, 4) == 13.5);
  CHECK(kern::sumsq_dev(x, 4, 2.5) == 5.0);
  CHECK(kern::weighted_sumsq(x, y, 4) == doctest::Approx(4.0 + 4.0 + 2.25 + 144.0));

  double acc[] = {1.0, 1.0, 1.0, 1.0};
  kern::axpy(2.0, x, acc, 4);
  CHECK(acc[0] == 3.0);
  CHECK(acc[3] == 9.0);

  int a[] = {1, 0, 1, 0};
  double s1 = 0, s0 = 0;
  std::size_t n1 = 0;
  kern::arm_sums(a, x, 4, s1, s0, n1);
  CHECK(s1 == 4.0);
  CHECK(s0 == 6.0);
  CHECK(n1 == 2);

  CHECK(kern::sum(x, 0) == 0.0);
  CHECK(kern::weighted_sumsq(x, y, 0) == 0.0);
}

TEST_CASE("every available ISA matches the scalar reference") {
  IsaGuard guard;
  auto isas = kern::available();
  REQUIRE(std::find(isas.begin(), isas.end(), kern::Isa::scalar) != isas.end());

  rng::Stream s(20260822);
  for (std::size_t n : kLengths) {
    auto x = random_vec(s, n, 3.0);
    auto y = random_vec(s, n, 0.5);
    std::vector<int> a(n);
    for (auto& t : a) t = s.bernoulli(0.4) ? 1 : 0;

    kern::force(kern::Isa::scalar);
    double rsum = kern::sum(x.data(), n);
    double rdot = kern::dot(x.data(), y.data(), n);
    double rdev = kern::sumsq_dev(x.data(), n, 0.25);
    double rwss = kern::weighted_sumsq(x.data(), y.data(), n);
    std::vector<double> racc = y;
    kern::axpy(-1.75, x.data(), racc.data(), n);
    double rs1 = 0, rs0 = 0;
    std::size_t rn1 = 0;
    kern::arm_sums(a.data(), x.data(), n, rs1, rs0, rn1);

    for (kern::Isa isa : isas) {
      if (isa == kern::Isa::scalar) continue;
      kern::force(isa);
      INFO("isa=", kern::isa_name(isa), " n=", n);
      // Reductions may reassociate; bound the drift tightly.
      CHECK(near(kern::sum(x.data(), n), rsum));
      CHECK(near(kern::dot(x.data(), y.data(), n), rdot));
      CHECK(near(kern::sumsq_dev(x.data(), n, 0.25), rdev));
      CHECK(near(kern::weighted_sumsq(x.data(), y.data(), n), rwss));
      // axpy is elementwise: bit-identical.
      std::vector<double> acc = y;
      kern::axpy(-1.75, x.data(), acc.data(), n);
      CHECK(std::memcmp(acc.data(), racc.data(), n * sizeof(double)) == 0);
      double s1 = 0, s0 = 0;
      std::size_t n1 = 0;
      kern::arm_sums(a.data(), x.data(), n, s1, s0, n1);
      CHECK(n1 == rn1);
      CHECK(near(s1, rs1));
      CHECK(near(s0, rs0));
    }
  }
}

TEST_CASE("ISA dispatch contract") {
  IsaGuard guard;
  auto isas = kern::available();
  for (kern::Isa isa : isas) {
    kern::force(isa);
    CHECK(kern::active() == isa);
    CHECK_FALSE(kern::isa_name(kern::active()).empty());
  }
#if !defined(__aarch64__)
  CHECK_THROWS_AS(kern::force(kern::Isa::neon), validation_error);
#endif
#if !defined(__x86_64__) && !defined(_M_X64)
  CHECK_THROWS_AS(kern::force(kern::Isa::avx2), validation_error);
#endif
}
