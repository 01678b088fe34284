#pragma once

#include <cstddef>
#include <string>

namespace trajattr::kern {

/// Dense double-precision kernels used by the encoder, clustering and
/// embedding inner loops. Two backends: a scalar reference and an AVX2
/// variant selected at runtime. Both produce bit-identical results: the
/// scalar reference accumulates reductions in the same fixed 4-lane
/// blocked order the AVX2 code uses, and the project is compiled with
/// fp-contract off so neither side fuses multiply-add.
enum class Backend { scalar, avx2 };

Backend active_backend();

/// Returns false if the requested backend is unsupported on this CPU
/// (the active backend is left unchanged in that case).
bool force_backend(Backend b);

bool avx2_supported();

std::string backend_name(Backend b);

/// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

/// sum_i x[i]
double sum(const double* x, std::size_t n);

/// sum_i (a[i]-b[i])^2
double sq_dist(const double* a, const double* b, std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// x[i] *= alpha
void scale(double* x, std::size_t n, double alpha);

/// y = W x, W row-major (rows x cols)
void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);

/// y += W^T z, W row-major (rows x cols), z length rows, y length cols.
/// Row-wise axpy, so no reduction reordering is involved.
void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* z, double* y);

/// W += alpha * u v^T, W row-major (rows x cols), u length rows, v length cols.
void outer_acc(double* w, std::size_t rows, std::size_t cols, double alpha, const double* u,
               const double* v);

namespace detail {
/// One backend's function table. Kernel dispatch goes through the table
/// so tests can flip backends and compare outputs exactly.
struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sq_dist)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, std::size_t, double);
};

const Ops& scalar_ops();
#if defined(TRAJATTR_HAVE_AVX2)
const Ops& avx2_ops();
#endif
}  // namespace detail

}  // namespace trajattr::kern
