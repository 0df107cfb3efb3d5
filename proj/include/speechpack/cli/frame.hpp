#pragma once

// Framed batch stream written by `emit`.
//
//   stream  := frame* terminator
//   frame   := u32 payload_length, payload      (payload_length > 0)
//   terminator := u32 0
//   payload := "SPKF", u8 version (=1), u8 kind (0 = pack, 1 = padded batch),
//              u16 field_count, field*
//   field   := u8 name_length, name, u8 type, u32 count, data
//   type 0  := count little-endian i32 values
//   type 1  := count u8 values
//   type 2  := count strings, each u32 length + UTF-8 bytes
//
// Pack frames carry: pack_size, filled, pad_id (i32[1] each), tokens,
// loss_mask (u8), cu_seqlens, position_ids, members (strings).
// Padded-batch frames carry: max_len, pad_id, seq_lens (i32[rows]), tokens
// and loss_mask and position_ids (row-major rows x max_len), members.
// Everything is little-endian.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "speechpack/batch/batcher.hpp"
#include "speechpack/core.hpp"

namespace speechpack::cli {

inline constexpr std::string_view kFrameMagic = "SPKF";
inline constexpr std::uint8_t kFrameVersion = 1;

enum class FrameKind : std::uint8_t { kPack = 0, kPadded = 1 };
enum class FieldType : std::uint8_t { kI32 = 0, kU8 = 1, kStrings = 2 };

/// Length prefix included.
std::vector<std::uint8_t> encode_frame(const PackedBatch& pack);
std::vector<std::uint8_t> encode_frame(const batch::PaddedBatch& batch, TokenId pad_id);
std::vector<std::uint8_t> terminator_frame();

}  // namespace speechpack::cli
