#include "aof/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdlib>

namespace aof::kernels {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const size_t n = a.size();
    for (size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i];
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

enum class Mode { unset, scalar, avx2 };
std::atomic<Mode> g_mode{Mode::unset};

Mode detect_mode() {
    if (const char* env = std::getenv("AOF_FORCE_SCALAR_KERNELS"); env && env[0] == '1')
        return Mode::scalar;
    return avx2_available() ? Mode::avx2 : Mode::scalar;
}

Mode mode() {
    Mode m = g_mode.load(std::memory_order_relaxed);
    if (m == Mode::unset) {
        m = detect_mode();
        g_mode.store(m, std::memory_order_relaxed);
    }
    return m;
}

} // namespace

void force_scalar(bool on) {
    g_mode.store(on ? Mode::scalar : detect_mode(), std::memory_order_relaxed);
}

std::string_view active_kernel() { return mode() == Mode::avx2 ? "avx2" : "scalar"; }

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(__x86_64__) || defined(_M_X64)
    if (mode() == Mode::avx2) return dot_avx2(a, b);
#endif
    return dot_scalar(a, b);
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

} // namespace aof::kernels
