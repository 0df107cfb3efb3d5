#pragma once

// POSIX ustar shards. Each sample is two adjacent entries, `<key>.wav` then
// `<key>.txt`; the archive ends with two zero blocks.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>

#include "speechpack/core.hpp"
#include "speechpack/formats/byte_source.hpp"

namespace speechpack::formats {

inline constexpr std::size_t kTarBlock = 512;

struct ShardSummary {
  std::size_t count = 0;
  std::size_t bytes = 0;
};

class ShardWriter {
 public:
  explicit ShardWriter(std::ostream& sink);

  /// Appends `<key>.wav` and `<key>.txt`. Path-backed audio is read here.
  void add(const PretrainSample& sample);
  /// Writes the two terminating zero blocks and flushes.
  ShardSummary finish();

 private:
  void write_entry(const std::string& name, std::span<const std::uint8_t> payload);
  void write_raw(const void* data, std::size_t size);

  std::ostream& sink_;
  std::set<std::string> keys_;
  ShardSummary summary_;
  bool finished_ = false;
};

ShardSummary write_shard(std::span<const PretrainSample> samples, std::ostream& sink);

/// Single-pass reader over a shard stream. Holds at most one sample plus a
/// fixed read buffer in memory.
class ShardReader {
 public:
  explicit ShardReader(std::unique_ptr<ByteStream> stream);

  /// Next complete sample, or nullopt at the end of the archive.
  std::optional<PretrainSample> next();

  /// Largest number of bytes held at once (read buffer + pending sample).
  std::size_t peak_buffered_bytes() const { return peak_; }
  std::size_t bytes_consumed() const { return consumed_; }

 private:
  struct Entry {
    std::string name;
    std::uint64_t size = 0;
  };

  std::optional<Entry> next_entry();
  bool read_exact(std::span<std::uint8_t> out);
  void skip(std::uint64_t n);
  Bytes read_payload(std::uint64_t size);
  void note_held(std::size_t pending);

  std::unique_ptr<ByteStream> stream_;
  Bytes buffer_;
  std::size_t buf_pos_ = 0;
  std::size_t buf_len_ = 0;
  std::size_t peak_ = 0;
  std::size_t consumed_ = 0;
  bool done_ = false;
};

ShardReader stream_shard(const ByteSource& source, const HttpOptions& http = {});

/// Splits `dir/name.ext` into key `dir/name` and extension `ext`.
std::pair<std::string, std::string> split_entry_name(const std::string& name);

}  // namespace speechpack::formats
