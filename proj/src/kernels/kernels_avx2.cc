// src/kernels/kernels_avx2.cc

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 -mfma; only reached after a cpuid check.

#include <immintrin.h>

#include <cstddef>
#include <vector>

#include "eend/kernels.h"

namespace eend::kernels {
namespace {

// Register-blocked 4x8 micro-kernel over the full k extent.
inline void block_4x8(std::size_t k, std::size_t n, const double* a,
                      std::size_t lda, const double* b, double* c,
                      bool accumulate) {
  __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
  __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
  __m256d acc20 = _mm256_setzero_pd(), acc21 = _mm256_setzero_pd();
  __m256d acc30 = _mm256_setzero_pd(), acc31 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * n);
    const __m256d b1 = _mm256_loadu_pd(b + p * n + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    acc00 = _mm256_fmadd_pd(av, b0, acc00);
    acc01 = _mm256_fmadd_pd(av, b1, acc01);
    av = _mm256_broadcast_sd(a + lda + p);
    acc10 = _mm256_fmadd_pd(av, b0, acc10);
    acc11 = _mm256_fmadd_pd(av, b1, acc11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    acc20 = _mm256_fmadd_pd(av, b0, acc20);
    acc21 = _mm256_fmadd_pd(av, b1, acc21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    acc30 = _mm256_fmadd_pd(av, b0, acc30);
    acc31 = _mm256_fmadd_pd(av, b1, acc31);
  }
  auto store = [&](double* dst, __m256d lo, __m256d hi) {
    if (accumulate) {
      lo = _mm256_add_pd(lo, _mm256_loadu_pd(dst));
      hi = _mm256_add_pd(hi, _mm256_loadu_pd(dst + 4));
    }
    _mm256_storeu_pd(dst, lo);
    _mm256_storeu_pd(dst + 4, hi);
  };
  store(c, acc00, acc01);
  store(c + n, acc10, acc11);
  store(c + 2 * n, acc20, acc21);
  store(c + 3 * n, acc30, acc31);
}

inline void block_1x4(std::size_t k, std::size_t n, const double* a,
                      const double* b, double* c, bool accumulate) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p)
    acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p),
                          _mm256_loadu_pd(b + p * n), acc);
  if (accumulate) acc = _mm256_add_pd(acc, _mm256_loadu_pd(c));
  _mm256_storeu_pd(c, acc);
}

inline void block_1x1(std::size_t k, std::size_t n, const double* a,
                      const double* b, double* c, bool accumulate) {
  double sum = 0.0;
  for (std::size_t p = 0; p < k; ++p) sum += a[p] * b[p * n];
  *c = accumulate ? *c + sum : sum;
}

void gemm_nn_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8)
      block_4x8(k, n, a + i * k, k, b + j, c + i * n + j, accumulate);
    for (std::size_t r = 0; r < 4; ++r) {
      std::size_t jj = j;
      for (; jj + 4 <= n; jj += 4)
        block_1x4(k, n, a + (i + r) * k, b + jj, c + (i + r) * n + jj,
                  accumulate);
      for (; jj < n; ++jj)
        block_1x1(k, n, a + (i + r) * k, b + jj, c + (i + r) * n + jj,
                  accumulate);
    }
  }
  for (; i < m; ++i) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4)
      block_1x4(k, n, a + i * k, b + j, c + i * n + j, accumulate);
    for (; j < n; ++j) block_1x1(k, n, a + i * k, b + j, c + i * n + j, accumulate);
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* src,
               std::vector<double>& dst) {
  dst.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t col = 0; col < cols; ++col)
      dst[col * rows + r] = src[r * cols + col];
}

void gemm_nt_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate) {
  thread_local std::vector<double> scratch;
  transpose(n, k, b, scratch);
  gemm_nn_avx2(m, k, n, a, scratch.data(), c, accumulate);
}

void gemm_tn_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate) {
  thread_local std::vector<double> scratch;
  transpose(m, k, a, scratch);
  gemm_nn_avx2(k, m, n, scratch.data(), b, c, accumulate);
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
                                 dot_avx2, axpy_avx2};
  return &table;
}

}  // namespace eend::kernels
