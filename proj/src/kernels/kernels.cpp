#include "trajattr/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace trajattr::kern {

namespace {

// Scalar reference. Reductions run in a fixed 4-lane blocked order:
// lane accumulators over stride-4 slices, combined as
// ((acc0+acc2)+(acc1+acc3)) + tail. The AVX2 variant performs exactly
// the same floating-point operations, so the backends agree bitwise.

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((acc0 + acc2) + (acc1 + acc3)) + tail;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += x[i];
        acc1 += x[i + 1];
        acc2 += x[i + 2];
        acc3 += x[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((acc0 + acc2) + (acc1 + acc3)) + tail;
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d * d;
    }
    return ((acc0 + acc2) + (acc1 + acc3)) + tail;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double* x, std::size_t n, double alpha) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

std::atomic<const detail::Ops*> g_ops{nullptr};

const detail::Ops* pick_default() {
#if defined(TRAJATTR_HAVE_AVX2)
    const char* env = std::getenv("TRAJATTR_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &detail::scalar_ops();
    if (avx2_supported()) return &detail::avx2_ops();
#endif
    return &detail::scalar_ops();
}

const detail::Ops& ops() {
    const detail::Ops* p = g_ops.load(std::memory_order_acquire);
    if (p == nullptr) {
        p = pick_default();
        g_ops.store(p, std::memory_order_release);
    }
    return *p;
}

}  // namespace

namespace detail {
const Ops& scalar_ops() {
    static const Ops t{dot_scalar, sum_scalar, sq_dist_scalar, axpy_scalar, scale_scalar};
    return t;
}
}  // namespace detail

bool avx2_supported() {
#if defined(TRAJATTR_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend active_backend() {
#if defined(TRAJATTR_HAVE_AVX2)
    return &ops() == &detail::avx2_ops() ? Backend::avx2 : Backend::scalar;
#else
    (void)ops();
    return Backend::scalar;
#endif
}

bool force_backend(Backend b) {
    if (b == Backend::scalar) {
        g_ops.store(&detail::scalar_ops(), std::memory_order_release);
        return true;
    }
#if defined(TRAJATTR_HAVE_AVX2)
    if (avx2_supported()) {
        g_ops.store(&detail::avx2_ops(), std::memory_order_release);
        return true;
    }
#endif
    return false;
}

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) { return ops().dot(a, b, n); }

double sum(const double* x, std::size_t n) { return ops().sum(x, n); }

double sq_dist(const double* a, const double* b, std::size_t n) { return ops().sq_dist(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) { ops().axpy(alpha, x, y, n); }

void scale(double* x, std::size_t n, double alpha) { ops().scale(x, n, alpha); }

void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
    const detail::Ops& t = ops();
    for (std::size_t r = 0; r < rows; ++r) y[r] = t.dot(w + r * cols, x, cols);
}

void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* z, double* y) {
    const detail::Ops& t = ops();
    for (std::size_t r = 0; r < rows; ++r) {
        if (z[r] != 0.0) t.axpy(z[r], w + r * cols, y, cols);
    }
}

void outer_acc(double* w, std::size_t rows, std::size_t cols, double alpha, const double* u,
               const double* v) {
    const detail::Ops& t = ops();
    for (std::size_t r = 0; r < rows; ++r) {
        const double s = alpha * u[r];
        if (s != 0.0) t.axpy(s, v, w + r * cols, cols);
    }
}

}  // namespace trajattr::kern
