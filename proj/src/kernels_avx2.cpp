// AVX2 dot product. Compiled with -mavx2 -ffp-contract=off in its own
// translation unit; only entered after a runtime cpuid check.
//
// Mirrors dot_scalar exactly: the ymm register holds the four lane
// accumulators, the tail folds into the accumulator of lane i & 3, and the
// final reduction is (acc0 + acc2) + (acc1 + acc3) — the order produced by
// adding the low and high 128-bit halves and then the two remaining lanes.
// Plain mul + add (no FMA) keeps the rounding identical to the scalar path.

#include "aof/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cassert>

namespace aof::kernels {

double dot_avx2(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const size_t n = a.size();
    const double* pa = a.data();
    const double* pb = b.data();

    __m256d vacc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(pa + i);
        __m256d vb = _mm256_loadu_pd(pb + i);
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(va, vb));
    }

    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (; i < n; ++i) acc[i & 3] += pa[i] * pb[i];

    // (acc0 + acc2) + (acc1 + acc3)
    __m256d v = _mm256_load_pd(acc);
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d sum = _mm_add_pd(lo, hi); // [acc0+acc2, acc1+acc3]
    return _mm_cvtsd_f64(_mm_add_sd(sum, _mm_unpackhi_pd(sum, sum)));
}

} // namespace aof::kernels

#endif
