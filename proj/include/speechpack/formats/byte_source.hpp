#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "speechpack/core.hpp"

namespace speechpack::formats {

enum class SourceKind { kLocal, kHttp };

struct ByteSource {
  std::string uri;
  SourceKind kind = SourceKind::kLocal;

  /// http:// and https:// are remote, everything else is a local path.
  static ByteSource from_uri(std::string uri);
};

/// Forward-only byte stream. read() returns 0 only at end of stream and throws
/// Error on failure.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;
};

struct HttpOptions {
  int retries = 3;
  std::chrono::milliseconds timeout{30'000};
  std::chrono::milliseconds retry_delay{200};
  std::size_t max_buffered_chunks = 16;
};

std::unique_ptr<ByteStream> open_byte_source(const ByteSource& source,
                                             const HttpOptions& http = {});
std::unique_ptr<ByteStream> open_byte_source(std::string_view uri, const HttpOptions& http = {});

/// In-memory stream over an owned buffer; used for tests and inline payloads.
class MemoryByteStream final : public ByteStream {
 public:
  explicit MemoryByteStream(Bytes data) : data_(std::move(data)) {}
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  Bytes data_;
  std::size_t pos_ = 0;
};

/// Drains a stream into memory.
Bytes read_all(ByteStream& stream);

}  // namespace speechpack::formats
