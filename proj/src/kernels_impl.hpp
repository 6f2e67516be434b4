#pragma once

#include <cstddef>

// Internal: the per-ISA function table. Each ISA lives in its own
// translation unit so vector code is only emitted where the build enables it.

namespace ncoadj::kern::detail {

struct Ops {
  double (*sum)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq_dev)(const double*, std::size_t, double);
  double (*weighted_sumsq)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*arm_sums)(const int*, const double*, std::size_t, double&, double&,
                   std::size_t&);
};

const Ops& scalar_ops();
#if defined(NCOADJ_HAVE_AVX2)
const Ops& avx2_ops();
#endif
#if defined(NCOADJ_HAVE_NEON)
const Ops& neon_ops();
#endif

}  // namespace ncoadj::kern::detail
