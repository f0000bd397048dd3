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

// AArch64 only; NEON is part of the base ISA there, so no runtime check.

#include "shrinknas/kernels/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace shrinknas::kernels::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double total = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

void relu_neon(const double* x, double* y, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t mask = vcgtq_f64(v, zero);
    vst1q_f64(y + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(v), mask)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_neon(const double* x, const double* gy, double* gx, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
    float64x2_t g = vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vld1q_f64(gy + i)), mask));
    vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), g));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) gx[i] += gy[i];
  }
}

}  // namespace shrinknas::kernels::detail

#endif  // __aarch64__
