#include "speechpack/attn/attention.hpp"

#include <algorithm>
#include <cmath>

namespace speechpack::attn {

Matrix Matrix::vstack(std::span<const Matrix> parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.empty() ? 0 : parts.front().cols();
  for (const Matrix& p : parts) {
    if (p.cols() != cols) throw Error(ErrorCode::kInvalidField, "vstack column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const Matrix& p : parts) {
    std::copy(p.data_.begin(), p.data_.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(r * cols));
    r += p.rows();
  }
  return out;
}

std::vector<std::uint32_t> offsets_of(std::span<const Qkv> sequences) {
  std::vector<std::uint32_t> cu{0};
  for (const Qkv& s : sequences) cu.push_back(cu.back() + static_cast<std::uint32_t>(s.q.rows()));
  return cu;
}

namespace {

template <AttentionMask M>
double compare(std::span<const Qkv> sequences, bool causal, const M& packed_mask,
               const Kernels& kernels) {
  std::vector<Matrix> qs, ks, vs;
  for (const Qkv& s : sequences) {
    qs.push_back(s.q);
    ks.push_back(s.k);
    vs.push_back(s.v);
  }
  const Matrix packed = reference_attention(Matrix::vstack(qs), Matrix::vstack(ks),
                                            Matrix::vstack(vs), packed_mask, kernels);
  double worst = 0.0;
  std::size_t base = 0;
  for (const Qkv& s : sequences) {
    const std::uint32_t cu[] = {0, static_cast<std::uint32_t>(s.q.rows())};
    const Matrix alone =
        reference_attention(s.q, s.k, s.v, BoundaryMask::from_offsets(cu, causal), kernels);
    for (std::size_t i = 0; i < alone.rows(); ++i) {
      for (std::size_t c = 0; c < alone.cols(); ++c) {
        worst = std::max(worst, std::abs(alone(i, c) - packed(base + i, c)));
      }
    }
    base += s.q.rows();
  }
  return worst;
}

}  // namespace

double packed_equivalence(std::span<const Qkv> sequences, bool causal, const Kernels& kernels) {
  const auto cu = offsets_of(sequences);
  return compare(sequences, causal, BoundaryMask::from_offsets(cu, causal), kernels);
}

double packed_equivalence(std::span<const Qkv> sequences, bool causal, const DenseMask& packed_mask,
                          const Kernels& kernels) {
  return compare(sequences, causal, packed_mask, kernels);
}

}  // namespace speechpack::attn
