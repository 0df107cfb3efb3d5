#include "speechpack/length/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "speechpack/error.hpp"

namespace speechpack::length {

TokenId SpecialIds::role_marker(Role role) const {
  switch (role) {
    case Role::kUser: return user;
    case Role::kAssistant: return assistant;
    case Role::kSystem: return system;
  }
  return user;
}

std::vector<TokenId> SpecialIds::all() const {
  return {pad, bos, eos, user, assistant, system, audio_begin, audio_end, audio_placeholder, unk};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Tokenizer Tokenizer::byte_level() {
  return Tokenizer(TokenizerSpec{TokenizerKind::kByte, kNumDefaultSpecials + 256, {}});
}

Tokenizer Tokenizer::whitespace(std::size_t vocab_size) {
  if (vocab_size <= kNumDefaultSpecials) {
    throw Error(ErrorCode::kInvalidConfig, "whitespace vocab_size must exceed the special ids");
  }
  return Tokenizer(TokenizerSpec{TokenizerKind::kWhitespace, vocab_size, {}});
}

Tokenizer Tokenizer::from_vocab_text(std::string_view text) {
  std::unordered_map<std::string, TokenId> entries;
  std::set<TokenId> ids;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(ErrorCode::kVocab, "expected token<TAB>id", line_no);
    }
    TokenId id = 0;
    try {
      std::size_t used = 0;
      const std::string digits(line.substr(tab + 1));
      const unsigned long v = std::stoul(digits, &used);
      if (used != digits.size() || v > 0xffffffffu) throw std::invalid_argument("id");
      id = static_cast<TokenId>(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kVocab, "bad id", line_no);
    }
    std::string token(line.substr(0, tab));
    if (!ids.insert(id).second) {
      throw Error(ErrorCode::kVocab, "duplicate id " + std::to_string(id), line_no);
    }
    if (!entries.emplace(token, id).second) {
      throw Error(ErrorCode::kVocab, "duplicate token '" + token + "'", line_no);
    }
  }
  if (entries.empty()) throw Error(ErrorCode::kVocab, "empty vocabulary");

  auto take = [&](std::string_view name) {
    auto it = entries.find(std::string(name));
    if (it == entries.end()) {
      throw Error(ErrorCode::kVocab, "vocabulary lacks special token " + std::string(name));
    }
    const TokenId id = it->second;
    entries.erase(it);
    return id;
  };
  SpecialIds sp;
  sp.pad = take(SpecialNames::kPad);
  sp.bos = take(SpecialNames::kBos);
  sp.eos = take(SpecialNames::kEos);
  sp.user = take(SpecialNames::kUser);
  sp.assistant = take(SpecialNames::kAssistant);
  sp.system = take(SpecialNames::kSystem);
  sp.audio_begin = take(SpecialNames::kAudioBegin);
  sp.audio_end = take(SpecialNames::kAudioEnd);
  sp.audio_placeholder = take(SpecialNames::kAudio);
  sp.unk = take(SpecialNames::kUnk);

  Tokenizer tok(TokenizerSpec{TokenizerKind::kExternalVocab, std::size_t{*ids.rbegin()} + 1, sp});
  for (const auto& [token, _] : entries) tok.longest_entry_ = std::max(tok.longest_entry_, token.size());
  tok.vocab_ = std::move(entries);
  return tok;
}

Tokenizer Tokenizer::from_vocab_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kVocab, "cannot open vocabulary '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_vocab_text(buf.str());
}

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  switch (spec_.kind) {
    case TokenizerKind::kByte:
      out.reserve(text.size());
      for (unsigned char c : text) out.push_back(kNumDefaultSpecials + c);
      break;
    case TokenizerKind::kWhitespace: {
      const std::uint64_t buckets = spec_.vocab_size - kNumDefaultSpecials;
      std::size_t i = 0;
      while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) {
          out.push_back(static_cast<TokenId>(kNumDefaultSpecials + fnv1a(text.substr(i, j - i)) % buckets));
        }
        i = j;
      }
      break;
    }
    case TokenizerKind::kExternalVocab: {
      std::size_t i = 0;
      std::string probe;
      while (i < text.size()) {
        std::size_t len = std::min(longest_entry_, text.size() - i);
        bool matched = false;
        for (; len > 0; --len) {
          probe.assign(text.substr(i, len));
          if (auto it = vocab_.find(probe); it != vocab_.end()) {
            out.push_back(it->second);
            i += len;
            matched = true;
            break;
          }
        }
        if (!matched) {
          out.push_back(spec_.specials.unk);
          i += std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace speechpack::length
