// Copyright 2026 The shrinknas Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the tensor ops. Every routine has a scalar
// reference implementation; vectorized variants (AVX2+FMA on x86-64, NEON on
// AArch64) are selected once at runtime and must agree with the reference to
// within floating-point reassociation error.

namespace shrinknas::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  /// y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  /// gx[i] += (x[i] > 0) ? gy[i] : 0
  void (*relu_backward)(const double* x, const double* gy, double* gx, std::size_t n);
};

/// Reference implementations; always available.
const KernelTable& scalar_table();

/// Vectorized table for the build target, or nullptr when none was compiled in.
const KernelTable* simd_table();

/// True when the running CPU supports the compiled SIMD table.
bool simd_supported();

/// Active table. Chosen on first use: the SIMD table when supported, unless
/// the environment variable SHRINKNAS_SIMD is set to "off" or "scalar".
const KernelTable& active();

/// Forces a table for the current process (tests use this to compare paths).
void select(Isa isa);

std::string_view isa_name(Isa isa);

/// RAII override of the active table, restoring the previous one on exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
double sum_scalar(const double* x, std::size_t n);
void relu_scalar(const double* x, double* y, std::size_t n);
void relu_backward_scalar(const double* x, const double* gy, double* gx, std::size_t n);

#if defined(SHRINKNAS_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
void relu_avx2(const double* x, double* y, std::size_t n);
void relu_backward_avx2(const double* x, const double* gy, double* gx, std::size_t n);
#endif

#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
double sum_neon(const double* x, std::size_t n);
void relu_neon(const double* x, double* y, std::size_t n);
void relu_backward_neon(const double* x, const double* gy, double* gx, std::size_t n);
#endif
}  // namespace detail

}  // namespace shrinknas::kernels
