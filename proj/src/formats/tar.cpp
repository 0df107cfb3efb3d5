#include "speechpack/formats/tar.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "speechpack/error.hpp"

namespace speechpack::formats {

namespace {

constexpr std::size_t kReadBuffer = 64 * 1024;

struct Header {
  char name[100];
  char mode[8];
  char uid[8];
  char gid[8];
  char size[12];
  char mtime[12];
  char chksum[8];
  char typeflag;
  char linkname[100];
  char magic[6];
  char version[2];
  char uname[32];
  char gname[32];
  char devmajor[8];
  char devminor[8];
  char prefix[155];
  char pad[12];
};
static_assert(sizeof(Header) == kTarBlock);

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width includes the trailing NUL
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

unsigned header_checksum(const std::uint8_t* block) {
  unsigned sum = 0;
  for (std::size_t i = 0; i < kTarBlock; ++i) {
    const bool in_chksum = i >= offsetof(Header, chksum) && i < offsetof(Header, chksum) + 8;
    sum += in_chksum ? ' ' : block[i];
  }
  return sum;
}

std::uint64_t parse_number(const char* field, std::size_t width) {
  const auto* raw = reinterpret_cast<const std::uint8_t*>(field);
  if (raw[0] & 0x80) {  // GNU base-256
    std::uint64_t v = raw[0] & 0x7f;
    for (std::size_t i = 1; i < width; ++i) v = (v << 8) | raw[i];
    return v;
  }
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == '\0')) {
    if (field[i] == '\0') return 0;
    ++i;
  }
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + (field[i] - '0');
  for (; i < width; ++i) {
    if (field[i] != ' ' && field[i] != '\0') {
      throw Error(ErrorCode::kMalformedTar, "non-octal digit in header field");
    }
  }
  return v;
}

std::string field_string(const char* field, std::size_t width) {
  return std::string(field, strnlen(field, width));
}

std::uint64_t padded(std::uint64_t size) {
  return (size + kTarBlock - 1) / kTarBlock * kTarBlock;
}

Bytes load_wav(const PretrainSample& sample) {
  if (const auto* bytes = std::get_if<Bytes>(&sample.wav)) return *bytes;
  const auto& path = std::get<std::string>(sample.wav);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableSource, "cannot read wav '" + path + "'");
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kUnreadableSource, "read error on '" + path + "'");
  return out;
}

}  // namespace

std::pair<std::string, std::string> split_entry_name(const std::string& name) {
  const auto slash = name.rfind('/');
  const auto dot = name.rfind('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {name, ""};
  return {name.substr(0, dot), name.substr(dot + 1)};
}

ShardWriter::ShardWriter(std::ostream& sink) : sink_(sink) {}

void ShardWriter::write_raw(const void* data, std::size_t size) {
  sink_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!sink_) throw Error(ErrorCode::kSinkWrite, "shard sink rejected write");
  summary_.bytes += size;
}

void ShardWriter::write_entry(const std::string& name, std::span<const std::uint8_t> payload) {
  Header h{};
  if (name.size() <= sizeof(h.name)) {
    std::memcpy(h.name, name.data(), name.size());
  } else {
    const auto split = name.rfind('/', sizeof(h.prefix));
    if (split == std::string::npos || name.size() - split - 1 > sizeof(h.name) || split == 0) {
      throw Error(ErrorCode::kInvalidField, "entry name too long for ustar: '" + name + "'");
    }
    std::memcpy(h.prefix, name.data(), split);
    std::memcpy(h.name, name.data() + split + 1, name.size() - split - 1);
  }
  if (payload.size() >= (std::uint64_t{1} << 33)) {
    throw Error(ErrorCode::kInvalidField, "entry '" + name + "' exceeds the ustar size limit");
  }
  put_octal(h.mode, sizeof(h.mode), 0644);
  put_octal(h.uid, sizeof(h.uid), 0);
  put_octal(h.gid, sizeof(h.gid), 0);
  put_octal(h.size, sizeof(h.size), payload.size());
  put_octal(h.mtime, sizeof(h.mtime), 0);
  h.typeflag = '0';
  std::memcpy(h.magic, "ustar", 6);
  std::memcpy(h.version, "00", 2);
  const unsigned sum = header_checksum(reinterpret_cast<const std::uint8_t*>(&h));
  std::snprintf(h.chksum, sizeof(h.chksum), "%06o", sum);
  h.chksum[7] = ' ';

  write_raw(&h, sizeof(h));
  if (!payload.empty()) write_raw(payload.data(), payload.size());
  static const std::array<char, kTarBlock> zeros{};
  if (const std::size_t tail = padded(payload.size()) - payload.size(); tail > 0) {
    write_raw(zeros.data(), tail);
  }
}

void ShardWriter::add(const PretrainSample& sample) {
  if (sample.key.empty()) throw Error(ErrorCode::kInvalidField, "sample with empty key");
  if (!keys_.insert(sample.key).second) {
    throw Error(ErrorCode::kDuplicateKey, "duplicate key '" + sample.key + "' in shard");
  }
  const Bytes wav = load_wav(sample);
  write_entry(sample.key + ".wav", wav);
  write_entry(sample.key + ".txt",
              std::span(reinterpret_cast<const std::uint8_t*>(sample.txt.data()), sample.txt.size()));
  ++summary_.count;
}

ShardSummary ShardWriter::finish() {
  if (!finished_) {
    static const std::array<char, 2 * kTarBlock> zeros{};
    write_raw(zeros.data(), zeros.size());
    sink_.flush();
    if (!sink_) throw Error(ErrorCode::kSinkWrite, "shard sink failed to flush");
    finished_ = true;
  }
  return summary_;
}

ShardSummary write_shard(std::span<const PretrainSample> samples, std::ostream& sink) {
  ShardWriter writer(sink);
  for (const auto& s : samples) writer.add(s);
  return writer.finish();
}

ShardReader::ShardReader(std::unique_ptr<ByteStream> stream)
    : stream_(std::move(stream)), buffer_(kReadBuffer) {}

void ShardReader::note_held(std::size_t pending) {
  peak_ = std::max(peak_, buffer_.size() + pending);
}

bool ShardReader::read_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    if (buf_pos_ == buf_len_) {
      buf_len_ = stream_->read(buffer_);
      buf_pos_ = 0;
      if (buf_len_ == 0) {
        if (got == 0) return false;
        throw Error(ErrorCode::kMalformedTar, "archive truncated mid-block");
      }
    }
    const std::size_t n = std::min(out.size() - got, buf_len_ - buf_pos_);
    std::memcpy(out.data() + got, buffer_.data() + buf_pos_, n);
    buf_pos_ += n;
    got += n;
  }
  consumed_ += out.size();
  return true;
}

void ShardReader::skip(std::uint64_t n) {
  std::array<std::uint8_t, kTarBlock> scratch;
  while (n > 0) {
    const std::size_t step = static_cast<std::size_t>(std::min<std::uint64_t>(n, scratch.size()));
    if (!read_exact(std::span(scratch.data(), step))) {
      throw Error(ErrorCode::kMalformedTar, "archive truncated inside an entry");
    }
    n -= step;
  }
}

Bytes ShardReader::read_payload(std::uint64_t size) {
  Bytes out(size);
  if (size > 0 && !read_exact(out)) {
    throw Error(ErrorCode::kMalformedTar, "archive truncated inside an entry");
  }
  skip(padded(size) - size);
  return out;
}

std::optional<ShardReader::Entry> ShardReader::next_entry() {
  std::optional<std::string> long_name;
  bool has_pax_size = false;
  std::uint64_t pax_size = 0;
  std::array<std::uint8_t, kTarBlock> block;
  while (true) {
    if (!read_exact(block)) return std::nullopt;  // tolerate a missing end marker
    if (std::all_of(block.begin(), block.end(), [](std::uint8_t b) { return b == 0; })) {
      read_exact(block);  // second end-marker block, if present
      return std::nullopt;
    }
    if (consumed_ == kTarBlock && block[0] == 0x1f && block[1] == 0x8b) {
      throw Error(ErrorCode::kUnsupportedFormat, "compressed shards are not supported");
    }
    const auto* h = reinterpret_cast<const Header*>(block.data());
    const unsigned expected = static_cast<unsigned>(parse_number(h->chksum, sizeof(h->chksum)));
    if (expected != header_checksum(block.data())) {
      throw Error(ErrorCode::kMalformedTar, "header checksum mismatch");
    }
    const std::uint64_t size = has_pax_size ? pax_size : parse_number(h->size, sizeof(h->size));
    std::string name = field_string(h->name, sizeof(h->name));
    if (std::memcmp(h->magic, "ustar", 5) == 0 && h->prefix[0] != '\0') {
      name = field_string(h->prefix, sizeof(h->prefix)) + "/" + name;
    }
    if (long_name) name = *long_name;

    switch (h->typeflag) {
      case '0':
      case '\0':
      case '7':
        return Entry{std::move(name), size};
      case 'L': {  // GNU long name for the next entry
        Bytes payload = read_payload(size);
        long_name = field_string(reinterpret_cast<const char*>(payload.data()), payload.size());
        continue;
      }
      case 'x': {  // pax extended header for the next entry
        Bytes payload = read_payload(size);
        std::string_view records(reinterpret_cast<const char*>(payload.data()), payload.size());
        while (!records.empty()) {
          const auto space = records.find(' ');
          if (space == std::string_view::npos) break;
          const std::size_t len = std::stoul(std::string(records.substr(0, space)));
          if (len == 0 || len > records.size()) {
            throw Error(ErrorCode::kMalformedTar, "bad pax record");
          }
          std::string_view kv = records.substr(space + 1, len - space - 2);
          records.remove_prefix(len);
          const auto eq = kv.find('=');
          if (eq == std::string_view::npos) continue;
          if (kv.substr(0, eq) == "path") long_name = std::string(kv.substr(eq + 1));
          if (kv.substr(0, eq) == "size") {
            pax_size = std::stoull(std::string(kv.substr(eq + 1)));
            has_pax_size = true;
          }
        }
        continue;
      }
      default:  // directories, links, global headers: no sample content
        skip(padded(size));
        long_name.reset();
        has_pax_size = false;
        continue;
    }
  }
}

std::optional<PretrainSample> ShardReader::next() {
  if (done_) return std::nullopt;
  auto audio = next_entry();
  if (!audio) {
    done_ = true;
    return std::nullopt;
  }
  auto [key, ext] = split_entry_name(audio->name);
  if (key.empty()) throw Error(ErrorCode::kMalformedTar, "entry '" + audio->name + "' has no key");
  if (ext == "txt") {
    throw Error(ErrorCode::kUnpairedEntry, "unpaired-entry(\"" + key + "\"): transcript without audio");
  }
  PretrainSample sample;
  sample.key = key;
  Bytes wav = read_payload(audio->size);
  note_held(wav.size());

  auto text = next_entry();
  if (!text) {
    done_ = true;
    throw Error(ErrorCode::kUnpairedEntry, "unpaired-entry(\"" + key + "\")");
  }
  auto [text_key, text_ext] = split_entry_name(text->name);
  if (text_key != key || text_ext != "txt") {
    throw Error(ErrorCode::kMismatchedPair,
                "expected '" + key + ".txt' after '" + audio->name + "', found '" + text->name + "'");
  }
  Bytes txt = read_payload(text->size);
  note_held(wav.size() + txt.size());
  sample.txt.assign(txt.begin(), txt.end());
  sample.wav = std::move(wav);
  return sample;
}

ShardReader stream_shard(const ByteSource& source, const HttpOptions& http) {
  return ShardReader(open_byte_source(source, http));
}

}  // namespace speechpack::formats
