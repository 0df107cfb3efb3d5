#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace speechpack {

enum class ErrorCode {
  kMalformedJson,
  kMissingField,
  kInvalidField,
  kUnknownRole,
  kUnknownContentType,
  kEmptyMessages,
  kEmptyContent,
  kDuplicateKey,
  kUnreadableSource,
  kSinkWrite,
  kMalformedTar,
  kUnpairedEntry,
  kMismatchedPair,
  kNotFound,
  kHttpStatus,
  kTimeout,
  kBadMagic,
  kMissingChunk,
  kUnsupportedFormat,
  kVocab,
  kUnresolvedAudio,
  kOversize,
  kInvalidConfig,
  kEmptyInput,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `line()` is 1-based when the error
/// refers to a line of a text input, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace speechpack
