#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace speechpack::attn {

/// Anything attention can be restricted by: a square predicate over token
/// index pairs.
template <class M>
concept AttentionMask = requires(const M& m, std::size_t i) {
  { m.size() } -> std::convertible_to<std::size_t>;
  { m.allowed(i, i) } -> std::convertible_to<bool>;
};

/// Block-diagonal mask implied by cu_seqlens: i may attend to j only inside
/// the same segment (and only j <= i when causal). Positions past the last
/// offset are padding and attend to nothing.
class BoundaryMask {
 public:
  /// `size` defaults to the last offset. Throws Error(kInvalidField) for
  /// offsets that do not start at 0, decrease, or exceed `size`.
  static BoundaryMask from_offsets(std::span<const std::uint32_t> cu_seqlens, bool causal,
                                   std::optional<std::size_t> size = std::nullopt);

  std::size_t size() const { return segment_.size(); }
  bool causal() const { return causal_; }
  bool allowed(std::size_t i, std::size_t j) const;
  /// Segment index of position i, nullopt in the pad tail.
  std::optional<std::size_t> segment(std::size_t i) const;
  std::size_t allowed_count() const;

 private:
  static constexpr std::uint32_t kPad = UINT32_MAX;
  std::vector<std::uint32_t> segment_;
  bool causal_ = false;
};

/// Explicit boolean matrix; used to build deliberately broken masks.
class DenseMask {
 public:
  explicit DenseMask(std::size_t size) : size_(size), bits_(size * size, 0) {}

  template <AttentionMask M>
  static DenseMask from(const M& mask) {
    DenseMask out(mask.size());
    for (std::size_t i = 0; i < out.size_; ++i) {
      for (std::size_t j = 0; j < out.size_; ++j) out.set(i, j, mask.allowed(i, j));
    }
    return out;
  }

  std::size_t size() const { return size_; }
  bool allowed(std::size_t i, std::size_t j) const { return bits_[i * size_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool allow) { bits_[i * size_ + j] = allow ? 1 : 0; }

 private:
  std::size_t size_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace speechpack::attn
