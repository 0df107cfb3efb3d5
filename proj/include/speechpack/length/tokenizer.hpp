#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "speechpack/core.hpp"

namespace speechpack::length {

enum class TokenizerKind { kByte, kWhitespace, kExternalVocab };

struct SpecialIds {
  TokenId pad = 0;
  TokenId bos = 1;
  TokenId eos = 2;
  TokenId user = 3;
  TokenId assistant = 4;
  TokenId system = 5;
  TokenId audio_begin = 6;
  TokenId audio_end = 7;
  TokenId audio_placeholder = 8;
  TokenId unk = 9;

  TokenId role_marker(Role role) const;
  std::vector<TokenId> all() const;
};

inline constexpr TokenId kNumDefaultSpecials = 10;

struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::kByte;
  std::size_t vocab_size = kNumDefaultSpecials + 256;
  SpecialIds specials;
};

/// Vocabulary file token strings for the special ids.
struct SpecialNames {
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUser = "<|user|>";
  static constexpr std::string_view kAssistant = "<|assistant|>";
  static constexpr std::string_view kSystem = "<|system|>";
  static constexpr std::string_view kAudioBegin = "<|audio_begin|>";
  static constexpr std::string_view kAudioEnd = "<|audio_end|>";
  static constexpr std::string_view kAudio = "<|audio|>";
  static constexpr std::string_view kUnk = "<unk>";
};

class Tokenizer {
 public:
  /// Specials at 0..9, raw bytes at 10..265.
  static Tokenizer byte_level();
  /// Whitespace-separated words hashed (FNV-1a) into [10, vocab_size).
  static Tokenizer whitespace(std::size_t vocab_size = 32'000);
  /// `token<TAB>id` per line. Special tokens are looked up by SpecialNames
  /// and never matched inside text.
  static Tokenizer from_vocab_text(std::string_view text);
  static Tokenizer from_vocab_file(const std::string& path);

  std::vector<TokenId> encode(std::string_view text) const;

  const TokenizerSpec& spec() const { return spec_; }
  const SpecialIds& specials() const { return spec_.specials; }

 private:
  explicit Tokenizer(TokenizerSpec spec) : spec_(spec) {}

  TokenizerSpec spec_;
  std::unordered_map<std::string, TokenId> vocab_;
  std::size_t longest_entry_ = 0;
};

/// Free-function spelling of Tokenizer::encode.
inline std::vector<TokenId> tokenize(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer.encode(text);
}

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace speechpack::length
