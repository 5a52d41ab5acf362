#include "mcl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mcl::kernels {

namespace {
// Below this many output elements the OpenMP fork/join overhead
// dominates; fall through to the serial loop.
constexpr std::size_t kParallelCutoff = 4096;
} // namespace

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  if (m * n < kParallelCutoff) {
    serial::matmul(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    double* row = c + i * n;
    std::fill(row, row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

void relu(const double* x, double* out, std::size_t n) {
  if (n < kParallelCutoff) {
    serial::relu(x, out, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void tanh(const double* x, double* out, std::size_t n) {
  if (n < kParallelCutoff) {
    serial::tanh(x, out, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[i] = std::tanh(x[i]);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  if (n < kParallelCutoff) {
    serial::mul(x, y, out, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[i] = x[i] * y[i];
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  if (n < kParallelCutoff) {
    serial::add(x, y, out, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[i] = x[i] + y[i];
}

void axpy(double alpha, const double* x, double* acc, std::size_t n) {
  if (n < kParallelCutoff) {
    serial::axpy(alpha, x, acc, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    acc[i] += alpha * x[i];
}

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    std::fill(row, row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

void relu(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void tanh(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void axpy(double alpha, const double* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += alpha * x[i];
}

} // namespace serial

} // namespace mcl::kernels
