#include "speechpack/attn/mask.hpp"

#include <string>

#include "speechpack/error.hpp"

namespace speechpack::attn {

BoundaryMask BoundaryMask::from_offsets(std::span<const std::uint32_t> cu, bool causal,
                                        std::optional<std::size_t> size) {
  if (!cu.empty() && cu.front() != 0) throw Error(ErrorCode::kInvalidField, "offsets must start at 0");
  for (std::size_t i = 1; i < cu.size(); ++i) {
    if (cu[i] < cu[i - 1]) throw Error(ErrorCode::kInvalidField, "non-monotonic offsets");
  }
  const std::size_t filled = cu.empty() ? 0 : cu.back();
  const std::size_t total = size.value_or(filled);
  if (total < filled) {
    throw Error(ErrorCode::kInvalidField,
                "mask size " + std::to_string(total) + " smaller than last offset " + std::to_string(filled));
  }
  BoundaryMask m;
  m.causal_ = causal;
  m.segment_.assign(total, kPad);
  for (std::size_t s = 0; s + 1 < cu.size(); ++s) {
    for (std::size_t i = cu[s]; i < cu[s + 1]; ++i) m.segment_[i] = static_cast<std::uint32_t>(s);
  }
  return m;
}

bool BoundaryMask::allowed(std::size_t i, std::size_t j) const {
  const std::uint32_t si = segment_[i];
  if (si == kPad || si != segment_[j]) return false;
  return !causal_ || j <= i;
}

std::optional<std::size_t> BoundaryMask::segment(std::size_t i) const {
  if (segment_[i] == kPad) return std::nullopt;
  return segment_[i];
}

std::size_t BoundaryMask::allowed_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) n += allowed(i, j) ? 1 : 0;
  }
  return n;
}

}  // namespace speechpack::attn
