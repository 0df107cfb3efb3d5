#include "speechpack/length/wav.hpp"

#include <cstring>
#include <fstream>
#include <optional>
#include <vector>

#include "speechpack/error.hpp"

namespace speechpack::length {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(const std::uint8_t* p, std::uint32_t size) {
  if (size < 16) throw Error(ErrorCode::kMissingChunk, "fmt chunk shorter than 16 bytes");
  FmtChunk fmt{le16(p), le16(p + 2), le32(p + 4), le16(p + 14)};
  if (fmt.format == kFormatExtensible) {
    if (size < 40) throw Error(ErrorCode::kUnsupportedFormat, "truncated extensible fmt chunk");
    fmt.format = le16(p + 24);  // first two bytes of the subformat GUID
  }
  if (fmt.format != kFormatPcm) {
    throw Error(ErrorCode::kUnsupportedFormat, "non-PCM format code " + std::to_string(fmt.format));
  }
  if (fmt.channels == 0) throw Error(ErrorCode::kUnsupportedFormat, "zero channels");
  if (fmt.sample_rate == 0) throw Error(ErrorCode::kUnsupportedFormat, "zero sample rate");
  if (fmt.bits == 0 || fmt.bits % 8 != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, "unsupported bits per sample " + std::to_string(fmt.bits));
  }
  return fmt;
}

AudioMeta to_meta(const FmtChunk& fmt, std::uint64_t data_bytes) {
  AudioMeta meta;
  meta.sample_rate = fmt.sample_rate;
  meta.channels = fmt.channels;
  meta.bits_per_sample = fmt.bits;
  meta.num_samples = data_bytes / (std::uint64_t{fmt.channels} * (fmt.bits / 8));
  return meta;
}

void check_magic(const std::uint8_t* p, std::size_t n) {
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing RIFF/WAVE magic");
  }
}

}  // namespace

AudioMeta parse_wav_header(std::span<const std::uint8_t> bytes) {
  check_magic(bytes.data(), bytes.size());
  std::optional<FmtChunk> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (pos + 8 + size > bytes.size()) throw Error(ErrorCode::kMissingChunk, "truncated fmt chunk");
      fmt = parse_fmt(chunk + 8, size);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!fmt) throw Error(ErrorCode::kMissingChunk, "data chunk before fmt chunk");
      return to_meta(*fmt, size);
    }
    pos += 8 + std::size_t{size} + (size & 1);
  }
  throw Error(ErrorCode::kMissingChunk, fmt ? "missing data chunk" : "missing fmt chunk");
}

AudioMeta read_wav_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableSource, "cannot open '" + path + "'");
  std::uint8_t head[12];
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  check_magic(head, static_cast<std::size_t>(in.gcount()));

  std::optional<FmtChunk> fmt;
  std::uint8_t chunk[8];
  while (in.read(reinterpret_cast<char*>(chunk), sizeof(chunk))) {
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      std::vector<std::uint8_t> body(size);
      if (!in.read(reinterpret_cast<char*>(body.data()), size)) {
        throw Error(ErrorCode::kMissingChunk, "truncated fmt chunk in '" + path + "'");
      }
      fmt = parse_fmt(body.data(), size);
      if (size & 1) in.seekg(1, std::ios::cur);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!fmt) throw Error(ErrorCode::kMissingChunk, "data chunk before fmt chunk");
      return to_meta(*fmt, size);
    } else {
      in.seekg(static_cast<std::streamoff>(size) + (size & 1), std::ios::cur);
    }
  }
  throw Error(ErrorCode::kMissingChunk,
              std::string(fmt ? "missing data chunk" : "missing fmt chunk") + " in '" + path + "'");
}

Bytes make_pcm_wav(std::uint32_t sample_rate, std::uint64_t num_samples, std::uint16_t channels,
                   std::uint16_t bits_per_sample) {
  const std::uint32_t block_align = channels * (bits_per_sample / 8);
  const auto data_bytes = static_cast<std::uint32_t>(num_samples * block_align);
  Bytes out(44 + std::size_t{data_bytes}, 0);
  auto put16 = [&](std::size_t at, std::uint16_t v) {
    out[at] = v & 0xff;
    out[at + 1] = v >> 8;
  };
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = (v >> (8 * i)) & 0xff;
  };
  std::memcpy(out.data(), "RIFF", 4);
  put32(4, 36 + data_bytes);
  std::memcpy(out.data() + 8, "WAVEfmt ", 8);
  put32(16, 16);
  put16(20, kFormatPcm);
  put16(22, channels);
  put32(24, sample_rate);
  put32(28, sample_rate * block_align);
  put16(32, static_cast<std::uint16_t>(block_align));
  put16(34, bits_per_sample);
  std::memcpy(out.data() + 36, "data", 4);
  put32(40, data_bytes);
  return out;
}

std::uint64_t audio_frame_count(const AudioMeta& meta, const AudioRateConfig& cfg) {
  if (meta.sample_rate == 0 || cfg.frame_shift.count() <= 0) return 0;
  // frames = samples / rate [s] / shift [us] * 1e6
  const auto numerator = static_cast<unsigned __int128>(meta.num_samples) * 1'000'000u;
  const auto denominator =
      static_cast<unsigned __int128>(meta.sample_rate) * static_cast<std::uint64_t>(cfg.frame_shift.count());
  return static_cast<std::uint64_t>(numerator / denominator);
}

std::uint64_t audio_token_count(const AudioMeta& meta, const AudioRateConfig& cfg) {
  const std::uint64_t frames = audio_frame_count(meta, cfg);
  const std::uint64_t factor = cfg.downsample();
  if (factor == 0) throw Error(ErrorCode::kInvalidConfig, "downsampling factors must be > 0");
  return (frames + factor - 1) / factor;
}

}  // namespace speechpack::length
