#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "speechpack/core.hpp"
#include "speechpack/error.hpp"

namespace speechpack::formats {

/// `{"wav": "...", "txt": "..."}`. The key is the stem of the wav path.
/// `line_no` only decorates errors.
PretrainSample parse_pretrain_line(std::string_view line, std::size_t line_no = 0);

/// Inverse of parse_pretrain_line for path-backed samples; inline audio is
/// rejected since it has no path to record.
std::string format_pretrain_line(const PretrainSample& sample);

struct ShardManifest {
  std::vector<std::string> shards;
};

/// One entry per non-blank line; lines whose first non-space character is '#'
/// are comments. Never fails.
ShardManifest parse_shard_list(std::string_view text);
ShardManifest read_shard_list(const std::string& path);

/// Parses one role-content object. String content is a single text part, an
/// object is a single typed part, an array is a mixed ordered list.
Conversation parse_conversation(std::string_view json_text, std::size_t line_no = 0);

template <class T>
struct LineRecord {
  std::size_t line = 0;
  T value;
};

/// Result of parsing a whole jsonl stream: every line lands in exactly one of
/// `records` or `errors`.
template <class T>
struct ParsedLines {
  std::vector<LineRecord<T>> records;
  std::vector<Error> errors;
  std::size_t lines = 0;
};

ParsedLines<PretrainSample> parse_pretrain_jsonl(std::istream& in);
ParsedLines<Conversation> parse_conversation_jsonl(std::istream& in);

}  // namespace speechpack::formats
