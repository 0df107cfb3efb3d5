#pragma once

// Naive double-precision masked attention. This is the oracle a packed
// attention kernel has to match, not a fast implementation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "speechpack/attn/kernels.hpp"
#include "speechpack/attn/mask.hpp"
#include "speechpack/error.hpp"

namespace speechpack::attn {

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> values() const { return data_; }

  /// Stacks matrices with equal column counts on top of each other.
  static Matrix vstack(std::span<const Matrix> parts);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Softmax(q k^T / sqrt(dim)) restricted to allowed columns; disallowed
/// entries are exactly 0. Rows with no allowed column are all zero.
template <AttentionMask M>
Matrix attention_weights(const Matrix& q, const Matrix& k, const M& mask,
                         const Kernels& kernels = active_kernels()) {
  if (q.cols() != k.cols() || q.rows() != mask.size() || k.rows() != mask.size()) {
    throw Error(ErrorCode::kInvalidField, "attention dimension mismatch");
  }
  const std::size_t n = q.rows();
  const double scale = q.cols() == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix w(n, n);
  std::vector<std::size_t> cols;
  std::vector<double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    cols.clear();
    scores.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask.allowed(i, j)) continue;
      cols.push_back(j);
      scores.push_back(kernels.dot(q.row(i).data(), k.row(j).data(), q.cols()) * scale);
    }
    if (cols.empty()) continue;
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) total += (s = std::exp(s - top));
    for (std::size_t c = 0; c < cols.size(); ++c) w(i, cols[c]) = scores[c] / total;
  }
  return w;
}

/// Attention output rows = sum_j w(i, j) v_j over allowed j, in ascending j.
template <AttentionMask M>
Matrix reference_attention(const Matrix& q, const Matrix& k, const Matrix& v, const M& mask,
                           const Kernels& kernels = active_kernels()) {
  if (v.rows() != k.rows()) throw Error(ErrorCode::kInvalidField, "attention dimension mismatch");
  const Matrix w = attention_weights(q, k, mask, kernels);
  Matrix out(q.rows(), v.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) {
      if (!mask.allowed(i, j)) continue;
      kernels.axpy(w(i, j), v.row(j).data(), out.row(i).data(), v.cols());
    }
  }
  return out;
}

struct Qkv {
  Matrix q;
  Matrix k;
  Matrix v;
};

/// Packs the sequences, runs attention once under the block-diagonal mask,
/// runs every sequence alone, and returns the largest absolute difference.
double packed_equivalence(std::span<const Qkv> sequences, bool causal,
                          const Kernels& kernels = active_kernels());

/// Same, but the packed run uses `packed_mask` instead of the mask implied by
/// the offsets (per-sequence runs still use the correct mask).
double packed_equivalence(std::span<const Qkv> sequences, bool causal, const DenseMask& packed_mask,
                          const Kernels& kernels = active_kernels());

/// cu_seqlens implied by the row counts of `sequences`.
std::vector<std::uint32_t> offsets_of(std::span<const Qkv> sequences);

}  // namespace speechpack::attn
