#pragma once

#include <span>
#include <string_view>

namespace aof::kernels {

// Dot products drive every similarity score, so they run on the widest ISA
// available at runtime. All variants implement the same striped algorithm:
// four interleaved accumulators over the input, a scalar tail folded into
// the accumulator of its lane, then the fixed reduction
// (acc0 + acc2) + (acc1 + acc3). With FP contraction disabled this makes the
// scalar and AVX2 paths bit-identical, which the equivalence tests assert
// exactly. Scores therefore do not depend on which machine produced them.

double dot_scalar(std::span<const double> a, std::span<const double> b);

bool avx2_available();
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(std::span<const double> a, std::span<const double> b); // caller checks avx2_available()
#endif

// Dispatched variant. Honors force_scalar() and the AOF_FORCE_SCALAR_KERNELS
// environment variable (checked once at first use).
double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

std::string_view active_kernel(); // "avx2" or "scalar"
void force_scalar(bool on);

} // namespace aof::kernels
