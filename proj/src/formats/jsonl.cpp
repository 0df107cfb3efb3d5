#include "speechpack/formats/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace speechpack::formats {

using nlohmann::json;

namespace {

json parse_object(std::string_view text, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what(), line_no);
  }
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedJson, "expected a JSON object", line_no);
  return doc;
}

std::string require_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMissingField, std::string("missing `") + field + "`", line_no);
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kInvalidField, std::string("`") + field + "` must be a string", line_no);
  }
  return it->get<std::string>();
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

ContentPart parse_part(const json& node, std::size_t line_no) {
  if (node.is_string()) return TextPart{node.get<std::string>()};
  if (!node.is_object()) {
    throw Error(ErrorCode::kInvalidField, "content part must be a string or an object", line_no);
  }
  const std::string type = require_string(node, "type", line_no);
  if (type == "text") return TextPart{require_string(node, "text", line_no)};
  if (type == "audio") {
    AudioPart part;
    part.audio = require_string(node, "audio", line_no);
    if (part.audio.empty()) throw Error(ErrorCode::kInvalidField, "`audio` is empty", line_no);
    if (auto it = node.find("text"); it != node.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorCode::kInvalidField, "`text` must be a string", line_no);
      part.text = it->get<std::string>();
    }
    return part;
  }
  throw Error(ErrorCode::kUnknownContentType, "unknown content type '" + type + "'", line_no);
}

template <class T, class Parse>
ParsedLines<T> parse_lines(std::istream& in, Parse parse) {
  ParsedLines<T> out;
  std::string line;
  while (std::getline(in, line)) {
    ++out.lines;
    try {
      out.records.push_back({out.lines, parse(line, out.lines)});
    } catch (const Error& e) {
      out.errors.push_back(e);
    }
  }
  return out;
}

}  // namespace

PretrainSample parse_pretrain_line(std::string_view line, std::size_t line_no) {
  const json doc = parse_object(line, line_no);
  PretrainSample sample;
  std::string wav = require_string(doc, "wav", line_no);
  if (wav.empty()) throw Error(ErrorCode::kInvalidField, "`wav` is empty", line_no);
  sample.txt = require_string(doc, "txt", line_no);
  sample.key = std::filesystem::path(wav).stem().string();
  if (sample.key.empty()) {
    throw Error(ErrorCode::kInvalidField, "cannot derive a key from '" + wav + "'", line_no);
  }
  sample.wav = std::move(wav);
  return sample;
}

std::string format_pretrain_line(const PretrainSample& sample) {
  const auto* path = std::get_if<std::string>(&sample.wav);
  if (path == nullptr) {
    throw Error(ErrorCode::kInvalidField, "sample '" + sample.key + "' has no wav path");
  }
  json doc = json::object();
  doc["wav"] = *path;
  doc["txt"] = sample.txt;
  return doc.dump();
}

ShardManifest parse_shard_list(std::string_view text) {
  ShardManifest manifest;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    manifest.shards.emplace_back(line);
  }
  return manifest;
}

ShardManifest read_shard_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open shard list '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_shard_list(buf.str());
}

Conversation parse_conversation(std::string_view json_text, std::size_t line_no) {
  const json doc = parse_object(json_text, line_no);
  auto it = doc.find("messages");
  if (it == doc.end()) throw Error(ErrorCode::kMissingField, "missing `messages`", line_no);
  if (!it->is_array()) throw Error(ErrorCode::kInvalidField, "`messages` must be an array", line_no);
  if (it->empty()) throw Error(ErrorCode::kEmptyMessages, "`messages` is empty", line_no);

  Conversation conv;
  for (const json& m : *it) {
    if (!m.is_object()) throw Error(ErrorCode::kInvalidField, "message must be an object", line_no);
    Message msg;
    try {
      msg.role = parse_role(require_string(m, "role", line_no));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnknownRole) throw;
      throw Error(ErrorCode::kUnknownRole, m["role"].get<std::string>(), line_no);
    }
    auto content = m.find("content");
    if (content == m.end()) throw Error(ErrorCode::kMissingField, "missing `content`", line_no);
    if (content->is_array()) {
      if (content->empty()) throw Error(ErrorCode::kEmptyContent, "`content` is empty", line_no);
      for (const json& part : *content) msg.content.push_back(parse_part(part, line_no));
    } else {
      msg.content.push_back(parse_part(*content, line_no));
    }
    conv.messages.push_back(std::move(msg));
  }
  return conv;
}

ParsedLines<PretrainSample> parse_pretrain_jsonl(std::istream& in) {
  return parse_lines<PretrainSample>(
      in, [](std::string_view l, std::size_t n) { return parse_pretrain_line(l, n); });
}

ParsedLines<Conversation> parse_conversation_jsonl(std::istream& in) {
  return parse_lines<Conversation>(
      in, [](std::string_view l, std::size_t n) { return parse_conversation(l, n); });
}

}  // namespace speechpack::formats
