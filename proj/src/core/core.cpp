#include "speechpack/core.hpp"

#include <algorithm>
#include <sstream>

#include "speechpack/error.hpp"

namespace speechpack {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kSystem: return "system";
  }
  return "user";
}

Role parse_role(std::string_view text) {
  if (text == "user") return Role::kUser;
  if (text == "assistant") return Role::kAssistant;
  if (text == "system") return Role::kSystem;
  throw Error(ErrorCode::kUnknownRole, "unknown role '" + std::string(text) + "'");
}

std::string_view to_string(SpanKind kind) {
  switch (kind) {
    case SpanKind::kText: return "text";
    case SpanKind::kAudioPlaceholder: return "audio-placeholder";
    case SpanKind::kControl: return "control";
  }
  return "text";
}

std::vector<std::string> check_token_sequence(const TokenSequence& seq,
                                              bool allow_supervised_placeholders) {
  std::vector<std::string> out;
  if (seq.loss_mask.size() != seq.tokens.size()) {
    out.push_back("loss_mask length " + std::to_string(seq.loss_mask.size()) +
                  " != tokens length " + std::to_string(seq.tokens.size()));
    return out;
  }
  std::size_t cursor = 0;
  for (const Span& span : seq.spans) {
    if (span.begin != cursor) {
      out.push_back("span starting at " + std::to_string(span.begin) + " leaves a gap or overlap at " +
                    std::to_string(cursor));
    }
    if (span.end <= span.begin) {
      out.push_back("empty span at " + std::to_string(span.begin));
    }
    if (span.end > seq.tokens.size()) {
      out.push_back("span end " + std::to_string(span.end) + " past sequence end");
      return out;
    }
    const bool must_be_masked =
        span.kind == SpanKind::kControl ||
        (span.kind == SpanKind::kAudioPlaceholder && !allow_supervised_placeholders);
    if (must_be_masked) {
      for (std::size_t i = span.begin; i < span.end; ++i) {
        if (seq.loss_mask[i] != 0) {
          out.push_back(std::string(to_string(span.kind)) + " token at " + std::to_string(i) +
                        " carries loss");
          break;
        }
      }
    }
    cursor = std::max(cursor, span.end);
  }
  if (cursor != seq.tokens.size()) {
    out.push_back("spans cover [0, " + std::to_string(cursor) + ") of " +
                  std::to_string(seq.tokens.size()) + " tokens");
  }
  return out;
}

TokenSequence truncate(TokenSequence seq, std::size_t length) {
  if (length >= seq.tokens.size()) return seq;
  seq.tokens.resize(length);
  seq.loss_mask.resize(length);
  std::vector<Span> kept;
  for (Span span : seq.spans) {
    if (span.begin >= length) break;
    span.end = std::min(span.end, length);
    kept.push_back(span);
  }
  seq.spans = std::move(kept);
  return seq;
}

std::vector<std::string> validate_packed_batch(const PackedBatch& b) {
  std::vector<std::string> out;
  const std::size_t cap = b.pack_size;

  if (b.tokens.size() != cap) {
    out.push_back("tokens length " + std::to_string(b.tokens.size()) + " != pack_size " +
                  std::to_string(cap));
  }
  if (b.loss_mask.size() != b.tokens.size()) out.push_back("loss_mask length differs from tokens");
  if (b.position_ids.size() != b.tokens.size()) {
    out.push_back("position_ids length differs from tokens");
  }

  const auto& cu = b.cu_seqlens;
  if (cu.empty()) {
    out.push_back("empty offsets");
  } else {
    if (cu.front() != 0) out.push_back("offsets do not start at 0");
    for (std::size_t i = 1; i < cu.size(); ++i) {
      if (cu[i] <= cu[i - 1]) {
        out.push_back("non-strict offsets");
        break;
      }
    }
    if (cu.back() != b.filled) {
      out.push_back("last offset " + std::to_string(cu.back()) + " != filled " +
                    std::to_string(b.filled));
    }
    if (b.members.size() != cu.size() - 1) {
      out.push_back("members count " + std::to_string(b.members.size()) + " != segments " +
                    std::to_string(cu.size() - 1));
    }
  }
  if (b.filled > cap) out.push_back("overfull");

  // Per-token checks only over indices that exist in every array.
  const std::size_t n = std::min({b.tokens.size(), b.loss_mask.size(), b.position_ids.size()});
  if (!cu.empty()) {
    bool bad_positions = false;
    for (std::size_t s = 0; s + 1 < cu.size() && !bad_positions; ++s) {
      for (std::size_t i = cu[s]; i < cu[s + 1] && i < n; ++i) {
        if (b.position_ids[i] != i - cu[s]) {
          bad_positions = true;
          break;
        }
      }
    }
    if (bad_positions) out.push_back("position ids do not restart at each offset");
  }
  bool bad_pad = false;
  for (std::size_t i = b.filled; i < n; ++i) {
    if (b.tokens[i] != b.pad_id || b.loss_mask[i] != 0) {
      bad_pad = true;
      break;
    }
  }
  if (bad_pad) out.push_back("pad tail holds non-pad tokens or carries loss");
  return out;
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kStatic: return "static";
    case Strategy::kDynamic: return "dynamic";
    case Strategy::kPack: return "pack";
  }
  return "static";
}

std::string_view to_string(OversizePolicy policy) {
  switch (policy) {
    case OversizePolicy::kError: return "error";
    case OversizePolicy::kDrop: return "drop";
    case OversizePolicy::kEmitAloneTruncated: return "emit_alone_truncated";
  }
  return "drop";
}

OversizePolicy parse_oversize_policy(std::string_view text) {
  if (text == "error") return OversizePolicy::kError;
  if (text == "drop") return OversizePolicy::kDrop;
  if (text == "emit_alone_truncated" || text == "truncate") return OversizePolicy::kEmitAloneTruncated;
  throw Error(ErrorCode::kInvalidConfig, "unknown oversize policy '" + std::string(text) + "'");
}

Strategy strategy_of(const StrategyConfig& config) {
  return static_cast<Strategy>(config.index());
}

std::string describe(const StrategyConfig& config) {
  std::ostringstream os;
  if (const auto* s = std::get_if<StaticConfig>(&config)) {
    os << "batch_size=" << s->batch_size << ";sort_buffer=" << s->sort_buffer;
  } else if (const auto* d = std::get_if<DynamicConfig>(&config)) {
    os << "max_tokens_in_batch=" << d->max_tokens_in_batch;
  } else {
    const auto& p = std::get<PackConfig>(config);
    os << "pack_size=" << p.pack_size << ";buffer=" << p.buffer
       << ";oversize=" << to_string(p.oversize_policy);
  }
  return os.str();
}

void validate(const StrategyConfig& config) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (const auto* s = std::get_if<StaticConfig>(&config)) {
    require(s->batch_size > 0, "batch_size must be > 0");
    require(s->sort_buffer >= s->batch_size, "sort_buffer must be >= batch_size");
  } else if (const auto* d = std::get_if<DynamicConfig>(&config)) {
    require(d->max_tokens_in_batch > 0, "max_tokens_in_batch must be > 0");
  } else {
    const auto& p = std::get<PackConfig>(config);
    require(p.pack_size > 0, "pack_size must be > 0");
    require(p.buffer > 0, "pack buffer must be > 0");
  }
}

}  // namespace speechpack
