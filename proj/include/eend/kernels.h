// include/eend/kernels.h

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

#ifndef EEND_KERNELS_H_
#define EEND_KERNELS_H_

// Dense double-precision inner loops used by the autodiff ops.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an
// AVX2/FMA variant. The variant is chosen once at startup from cpuid; it can
// be pinned with the EEND_ISA environment variable ("scalar" or "avx2") or
// with select_isa(). All matrices are dense row-major.

#include <cstddef>
#include <string_view>

namespace eend::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  // c[m x n] (+)= a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[m x n] (+)= a[m x k] * b[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[k x n] (+)= a[m x k]^T * b[m x n]
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
};

const KernelTable& scalar_table();
// Null when the variant was not compiled in.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
Isa active_isa();
// Throws std::invalid_argument if the CPU or build lacks the requested ISA.
void select_isa(Isa isa);
const KernelTable& active();

std::string_view isa_name(Isa isa);

// Pins the active ISA for the lifetime of the guard.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { select_isa(isa); }
  ~ScopedIsa() { select_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace eend::kernels

#endif  // EEND_KERNELS_H_
