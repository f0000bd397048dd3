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

#include "shrinknas/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace shrinknas::kernels {

namespace {

constexpr KernelTable kScalar{
    Isa::Scalar,          detail::dot_scalar,  detail::axpy_scalar,
    detail::sum_scalar,   detail::relu_scalar, detail::relu_backward_scalar,
};

#if defined(SHRINKNAS_HAVE_AVX2)
constexpr KernelTable kSimd{
    Isa::Avx2,          detail::dot_avx2,  detail::axpy_avx2,
    detail::sum_avx2,   detail::relu_avx2, detail::relu_backward_avx2,
};
#elif defined(__aarch64__)
constexpr KernelTable kSimd{
    Isa::Neon,          detail::dot_neon,  detail::axpy_neon,
    detail::sum_neon,   detail::relu_neon, detail::relu_backward_neon,
};
#endif

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* choose_default() {
  if (const char* env = std::getenv("SHRINKNAS_SIMD")) {
    std::string v(env);
    if (v == "off" || v == "scalar" || v == "0") return &kScalar;
  }
  if (simd_supported()) return simd_table();
  return &kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* simd_table() {
#if defined(SHRINKNAS_HAVE_AVX2) || defined(__aarch64__)
  return &kSimd;
#else
  return nullptr;
#endif
}

bool simd_supported() {
#if defined(SHRINKNAS_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#elif defined(__aarch64__)
  return true;
#else
  return false;
#endif
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = choose_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(Isa isa) {
  if (isa == Isa::Scalar) {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
  const KernelTable* simd = simd_table();
  if (simd == nullptr || simd->isa != isa || !simd_supported()) {
    throw std::runtime_error("kernel ISA '" + std::string(isa_name(isa)) +
                             "' is not available on this build/CPU");
  }
  g_active.store(simd, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

ScopedIsa::ScopedIsa(Isa isa) : previous_(active().isa) { select(isa); }

ScopedIsa::~ScopedIsa() { select(previous_); }

}  // namespace shrinknas::kernels
