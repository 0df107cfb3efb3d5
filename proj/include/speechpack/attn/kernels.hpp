#pragma once

// Inner loops of the reference attention. The scalar table is the reference;
// SIMD tables are picked at runtime when the CPU has them and must agree with
// scalar up to summation order.

#include <cstddef>
#include <string_view>

namespace speechpack::attn {

enum class KernelIsa { kScalar, kAvx2, kNeon };

std::string_view to_string(KernelIsa isa);

struct Kernels {
  KernelIsa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const Kernels& scalar_kernels();
/// nullptr when the variant was not compiled for this target.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

bool cpu_supports(KernelIsa isa);

/// Best table for this CPU. SPEECHPACK_KERNELS=scalar|avx2|neon overrides the
/// choice (ignored when the CPU cannot run it).
const Kernels& active_kernels();

}  // namespace speechpack::attn
