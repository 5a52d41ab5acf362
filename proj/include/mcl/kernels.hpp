#pragma once

#include <cstddef>

// Dense numeric kernels. Each kernel comes in two flavours: an OpenMP
// parallel version (namespace kernels) and a plain serial version
// (namespace kernels::serial) kept as a reference for tests and the
// benchmark target. Parallel loops run over independent output
// elements only, so results are bit-identical to the serial versions
// for any thread count.

namespace mcl::kernels {

// C[m x n] = A[m x k] * B[k x n], row-major.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// out[i] = max(x[i], 0)
void relu(const double* x, double* out, std::size_t n);

// out[i] = tanh(x[i])
void tanh(const double* x, double* out, std::size_t n);

// out[i] = x[i] * y[i]
void mul(const double* x, const double* y, double* out, std::size_t n);

// out[i] = x[i] + y[i]
void add(const double* x, const double* y, double* out, std::size_t n);

// acc[i] += x[i]
void axpy(double alpha, const double* x, double* acc, std::size_t n);

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
void tanh(const double* x, double* out, std::size_t n);
void mul(const double* x, const double* y, double* out, std::size_t n);
void add(const double* x, const double* y, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* acc, std::size_t n);

} // namespace serial

} // namespace mcl::kernels
