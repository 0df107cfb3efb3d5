#pragma once

// Shared domain types. Everything here is a plain value: no I/O, safe to copy
// or move between threads once constructed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace speechpack {

using TokenId = std::uint32_t;
using Bytes = std::vector<std::uint8_t>;

/// Audio payload of a pre-training record: a path on disk, or bytes already
/// pulled out of a shard.
using WavSource = std::variant<std::string, Bytes>;

struct PretrainSample {
  std::string key;
  WavSource wav;
  std::string txt;

  bool has_inline_wav() const { return std::holds_alternative<Bytes>(wav); }
  friend bool operator==(const PretrainSample&, const PretrainSample&) = default;
};

enum class Role { kUser, kAssistant, kSystem };

std::string_view to_string(Role role);
/// Throws Error(kUnknownRole) for anything but user/assistant/system.
Role parse_role(std::string_view text);

struct TextPart {
  std::string text;
  friend bool operator==(const TextPart&, const TextPart&) = default;
};

struct AudioPart {
  std::string audio;                 // path, never empty
  std::optional<std::string> text;   // transcript, metadata only by default
  friend bool operator==(const AudioPart&, const AudioPart&) = default;
};

using ContentPart = std::variant<TextPart, AudioPart>;

struct Message {
  Role role = Role::kUser;
  std::vector<ContentPart> content;  // size >= 1
  friend bool operator==(const Message&, const Message&) = default;
};

struct Conversation {
  std::vector<Message> messages;  // size >= 1
  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct AudioMeta {
  std::uint32_t sample_rate = 0;
  std::uint64_t num_samples = 0;
  std::uint16_t channels = 1;
  std::uint16_t bits_per_sample = 16;

  double duration_seconds() const {
    return sample_rate == 0 ? 0.0 : static_cast<double>(num_samples) / sample_rate;
  }
};

enum class SpanKind : std::uint8_t { kText, kAudioPlaceholder, kControl };

std::string_view to_string(SpanKind kind);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::kText;
  friend bool operator==(const Span&, const Span&) = default;
};

/// One rendered training sequence; the unit every batching strategy consumes.
struct TokenSequence {
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> loss_mask;  // 0/1, same length as tokens
  std::vector<Span> spans;              // sorted, non-overlapping, tile [0, size)
  std::string source_key;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Structural check of the TokenSequence invariants. Empty result means valid.
/// When `allow_supervised_placeholders` is set, audio-placeholder spans may
/// carry loss.
std::vector<std::string> check_token_sequence(const TokenSequence& seq,
                                              bool allow_supervised_placeholders = false);

/// Truncates tokens, mask and spans to the first `length` tokens.
TokenSequence truncate(TokenSequence seq, std::size_t length);

/// Several whole sequences laid end to end in a fixed-capacity buffer.
struct PackedBatch {
  std::vector<TokenId> tokens;          // size == pack_size
  std::vector<std::uint8_t> loss_mask;  // size == pack_size
  std::vector<std::uint32_t> cu_seqlens;
  std::vector<std::uint32_t> position_ids;  // size == pack_size, 0 in the pad tail
  std::size_t filled = 0;
  std::size_t pack_size = 0;
  TokenId pad_id = 0;
  std::vector<std::string> members;

  std::size_t num_sequences() const { return cu_seqlens.empty() ? 0 : cu_seqlens.size() - 1; }
  friend bool operator==(const PackedBatch&, const PackedBatch&) = default;
};

/// Returns one human-readable entry per violated PackedBatch invariant.
std::vector<std::string> validate_packed_batch(const PackedBatch& batch);

enum class Strategy { kStatic, kDynamic, kPack };

std::string_view to_string(Strategy strategy);

struct StaticConfig {
  std::size_t batch_size = 32;
  std::size_t sort_buffer = 32;
  friend bool operator==(const StaticConfig&, const StaticConfig&) = default;
};

struct DynamicConfig {
  std::size_t max_tokens_in_batch = 4096;
  friend bool operator==(const DynamicConfig&, const DynamicConfig&) = default;
};

enum class OversizePolicy { kError, kDrop, kEmitAloneTruncated };

std::string_view to_string(OversizePolicy policy);
OversizePolicy parse_oversize_policy(std::string_view text);

struct PackConfig {
  std::size_t pack_size = 8192;
  std::size_t buffer = 64;
  OversizePolicy oversize_policy = OversizePolicy::kDrop;
  TokenId pad_id = 0;
  friend bool operator==(const PackConfig&, const PackConfig&) = default;
};

using StrategyConfig = std::variant<StaticConfig, DynamicConfig, PackConfig>;

Strategy strategy_of(const StrategyConfig& config);
/// Stable `key=value;key=value` rendering, comma-free so it can sit in a CSV cell.
std::string describe(const StrategyConfig& config);
/// Throws Error(kInvalidConfig) when a count is zero or the sort buffer is
/// smaller than the batch.
void validate(const StrategyConfig& config);

struct StrategyReport {
  Strategy strategy = Strategy::kStatic;
  StrategyConfig config;
  std::size_t num_batches = 0;
  std::size_t real_tokens = 0;
  std::size_t padded_tokens = 0;
  double waste_ratio = 0.0;
  std::size_t oversize_dropped = 0;
  std::size_t truncated_tokens = 0;
  std::size_t final_fill = 0;       // real tokens in the last emitted batch
  std::uint64_t input_checksum = 0; // FNV-1a over the consumed length stream
};

}  // namespace speechpack
