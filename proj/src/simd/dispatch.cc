/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "rsde/error.h"
#include "rsde/simd/kernels.h"

namespace rsde::simd {
namespace {

bool CpuHasAvx2() {
#if defined(RSDE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level InitialLevel() {
  const char* env = std::getenv("RSDE_SIMD_LEVEL");
  if (env != nullptr) {
    if (std::strcmp(env, "SCALAR") == 0) return Level::kScalar;
    if (std::strcmp(env, "AVX2") == 0) {
      if (!CpuHasAvx2()) {
        throw InvalidArgument("RSDE_SIMD_LEVEL=AVX2 but the CPU lacks AVX2/FMA");
      }
      return Level::kAvx2;
    }
    throw InvalidArgument(std::string("RSDE_SIMD_LEVEL ") + env + " unknown");
  }
  return DetectLevel();
}

std::atomic<Level>& ActiveSlot() {
  static std::atomic<Level> level{InitialLevel()};
  return level;
}

}  // namespace

const char* LevelName(Level level) {
  switch (level) {
    case Level::kScalar:
      return "SCALAR";
    case Level::kAvx2:
      return "AVX2";
  }
  return "UNKNOWN";
}

Level DetectLevel() { return CpuHasAvx2() ? Level::kAvx2 : Level::kScalar; }

bool LevelSupported(Level level) {
  return level == Level::kScalar || (level == Level::kAvx2 && CpuHasAvx2());
}

Level ActiveLevel() { return ActiveSlot().load(std::memory_order_relaxed); }

void SetLevel(Level level) {
  if (!LevelSupported(level)) {
    throw InvalidArgument(std::string("SIMD level ") + LevelName(level) +
                          " not supported on this machine");
  }
  ActiveSlot().store(level, std::memory_order_relaxed);
}

const KernelTable& KernelsFor(Level level) {
  if (!LevelSupported(level)) {
    throw InvalidArgument(std::string("SIMD level ") + LevelName(level) +
                          " not supported on this machine");
  }
#if defined(RSDE_HAVE_AVX2)
  if (level == Level::kAvx2) return avx2::Table();
#endif
  return scalar::Table();
}

const KernelTable& Kernels() {
#if defined(RSDE_HAVE_AVX2)
  if (ActiveLevel() == Level::kAvx2) return avx2::Table();
#endif
  return scalar::Table();
}

}  // namespace rsde::simd
