#include "speechpack/error.hpp"

namespace speechpack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson: return "malformed-json";
    case ErrorCode::kMissingField: return "missing-field";
    case ErrorCode::kInvalidField: return "invalid-field";
    case ErrorCode::kUnknownRole: return "unknown-role";
    case ErrorCode::kUnknownContentType: return "unknown-content-type";
    case ErrorCode::kEmptyMessages: return "empty-messages";
    case ErrorCode::kEmptyContent: return "empty-content";
    case ErrorCode::kDuplicateKey: return "duplicate-key";
    case ErrorCode::kUnreadableSource: return "unreadable-source";
    case ErrorCode::kSinkWrite: return "sink-write";
    case ErrorCode::kMalformedTar: return "malformed-tar";
    case ErrorCode::kUnpairedEntry: return "unpaired-entry";
    case ErrorCode::kMismatchedPair: return "mismatched-pair";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kHttpStatus: return "http-status";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kMissingChunk: return "missing-chunk";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kVocab: return "vocab";
    case ErrorCode::kUnresolvedAudio: return "unresolved-audio";
    case ErrorCode::kOversize: return "oversize";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kEmptyInput: return "empty-input";
  }
  return "unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& what, std::size_t line) {
  std::string out(to_string(code));
  if (line > 0) out += " at line " + std::to_string(line);
  out += ": ";
  out += what;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::size_t line)
    : std::runtime_error(decorate(code, what, line)), code_(code), line_(line) {}

}  // namespace speechpack
