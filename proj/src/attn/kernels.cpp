#include <cstdlib>
#include <string>

#include "speechpack/attn/kernels.hpp"

namespace speechpack::attn {

std::string_view to_string(KernelIsa isa) {
  switch (isa) {
    case KernelIsa::kScalar: return "scalar";
    case KernelIsa::kAvx2: return "avx2";
    case KernelIsa::kNeon: return "neon";
  }
  return "scalar";
}

bool cpu_supports(KernelIsa isa) {
  switch (isa) {
    case KernelIsa::kScalar:
      return true;
    case KernelIsa::kAvx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case KernelIsa::kNeon:
      return neon_kernels() != nullptr;  // mandatory on aarch64
  }
  return false;
}

namespace {

const Kernels& pick() {
  const Kernels* forced = nullptr;
  if (const char* env = std::getenv("SPEECHPACK_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") forced = &scalar_kernels();
    if (want == "avx2" && cpu_supports(KernelIsa::kAvx2)) forced = avx2_kernels();
    if (want == "neon" && cpu_supports(KernelIsa::kNeon)) forced = neon_kernels();
  }
  if (forced != nullptr) return *forced;
  if (cpu_supports(KernelIsa::kAvx2)) return *avx2_kernels();
  if (cpu_supports(KernelIsa::kNeon)) return *neon_kernels();
  return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
  static const Kernels& table = pick();
  return table;
}

}  // namespace speechpack::attn
