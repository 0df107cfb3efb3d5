#pragma once

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "speechpack/core.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "speechpack-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// A sequence with one text span, supervised everywhere.
inline speechpack::TokenSequence seq_of(std::size_t len, std::string key = {}, speechpack::TokenId base = 100) {
  speechpack::TokenSequence s;
  for (std::size_t i = 0; i < len; ++i) s.tokens.push_back(base + static_cast<speechpack::TokenId>(i % 50));
  s.loss_mask.assign(len, 1);
  if (len > 0) s.spans.push_back({0, len, speechpack::SpanKind::kText});
  s.source_key = key.empty() ? "len" + std::to_string(len) : std::move(key);
  return s;
}

inline std::vector<speechpack::TokenSequence> seqs_of(const std::vector<std::size_t>& lens) {
  std::vector<speechpack::TokenSequence> out;
  for (std::size_t i = 0; i < lens.size(); ++i) out.push_back(seq_of(lens[i], "s" + std::to_string(i)));
  return out;
}

inline std::string run_capture(const std::string& cmd, int* status) {
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) out.append(buf, n);
  const int rc = ::pclose(p);
  if (status != nullptr) *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return out;
}

// Reader for the framed stream, written from the format description alone.
struct DecodedFrame {
  int kind = -1;
  std::map<std::string, std::vector<std::int64_t>> ints;
  std::map<std::string, std::vector<std::string>> strings;
};

struct DecodedStream {
  std::vector<DecodedFrame> frames;
  bool terminated = false;
  std::size_t trailing_bytes = 0;
};

inline std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline DecodedStream decode_stream(const std::string& raw) {
  const auto* b = reinterpret_cast<const std::uint8_t*>(raw.data());
  const std::size_t n = raw.size();
  DecodedStream out;
  std::size_t pos = 0;
  auto need = [&](std::size_t k) {
    if (pos + k > n) throw std::runtime_error("truncated frame stream");
  };
  while (pos < n) {
    need(4);
    const std::uint32_t len = le32(b + pos);
    pos += 4;
    if (len == 0) {
      out.terminated = true;
      out.trailing_bytes = n - pos;
      break;
    }
    need(len);
    const std::size_t end = pos + len;
    if (std::memcmp(b + pos, "SPKF", 4) != 0) throw std::runtime_error("bad frame magic");
    pos += 4;
    if (b[pos++] != 1) throw std::runtime_error("bad frame version");
    DecodedFrame f;
    f.kind = b[pos++];
    const std::uint16_t fields = std::uint16_t(b[pos] | b[pos + 1] << 8);
    pos += 2;
    for (std::uint16_t i = 0; i < fields; ++i) {
      const std::uint8_t name_len = b[pos++];
      const std::string name(reinterpret_cast<const char*>(b + pos), name_len);
      pos += name_len;
      const std::uint8_t type = b[pos++];
      const std::uint32_t count = le32(b + pos);
      pos += 4;
      if (type == 0) {
        auto& v = f.ints[name];
        for (std::uint32_t j = 0; j < count; ++j, pos += 4) v.push_back(static_cast<std::int32_t>(le32(b + pos)));
      } else if (type == 1) {
        auto& v = f.ints[name];
        for (std::uint32_t j = 0; j < count; ++j) v.push_back(b[pos++]);
      } else if (type == 2) {
        auto& v = f.strings[name];
        for (std::uint32_t j = 0; j < count; ++j) {
          const std::uint32_t sl = le32(b + pos);
          pos += 4;
          v.emplace_back(reinterpret_cast<const char*>(b + pos), sl);
          pos += sl;
        }
      } else {
        throw std::runtime_error("unknown field type");
      }
    }
    if (pos != end) throw std::runtime_error("frame length mismatch");
    out.frames.push_back(std::move(f));
  }
  return out;
}

inline speechpack::PackedBatch to_packed(const DecodedFrame& f) {
  speechpack::PackedBatch p;
  p.pack_size = static_cast<std::size_t>(f.ints.at("pack_size").at(0));
  p.filled = static_cast<std::size_t>(f.ints.at("filled").at(0));
  p.pad_id = static_cast<speechpack::TokenId>(f.ints.at("pad_id").at(0));
  for (auto v : f.ints.at("tokens")) p.tokens.push_back(static_cast<speechpack::TokenId>(v));
  for (auto v : f.ints.at("loss_mask")) p.loss_mask.push_back(static_cast<std::uint8_t>(v));
  for (auto v : f.ints.at("cu_seqlens")) p.cu_seqlens.push_back(static_cast<std::uint32_t>(v));
  for (auto v : f.ints.at("position_ids")) p.position_ids.push_back(static_cast<std::uint32_t>(v));
  p.members = f.strings.at("members");
  return p;
}

// Straight-line re-simulation of look-ahead first-fit packing over lengths
// only. Oversize lengths are dropped. Returns member indices per pack.
inline std::vector<std::vector<std::size_t>> oracle_pack(const std::vector<std::size_t>& lens,
                                                         std::size_t pack_size, std::size_t buffer) {
  std::vector<std::vector<std::size_t>> packs;
  std::vector<std::size_t> buf, cur;
  std::size_t filled = 0;
  auto step = [&] {
    if (cur.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < buf.size(); ++i) {
        if (lens[buf[i]] > lens[buf[best]]) best = i;
      }
      cur.push_back(buf[best]);
      filled = lens[buf[best]];
      buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(best));
      return;
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
      if (filled + lens[buf[i]] <= pack_size) {
        filled += lens[buf[i]];
        cur.push_back(buf[i]);
        buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(i));
        return;
      }
    }
    packs.push_back(cur);
    cur.clear();
    filled = 0;
  };
  for (std::size_t i = 0; i < lens.size(); ++i) {
    if (lens[i] > pack_size) continue;
    buf.push_back(i);
    while (buf.size() >= buffer) step();
  }
  while (!buf.empty()) step();
  if (!cur.empty()) packs.push_back(cur);
  return packs;
}

// Plain FIFO packing written as the textbook loop: append while it fits,
// otherwise close the pack.
inline std::vector<std::vector<std::size_t>> fifo_pack(const std::vector<std::size_t>& lens,
                                                       std::size_t pack_size) {
  std::vector<std::vector<std::size_t>> packs;
  std::vector<std::size_t> cur;
  std::size_t filled = 0;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    if (lens[i] > pack_size) continue;
    if (filled + lens[i] > pack_size) {
      packs.push_back(cur);
      cur.clear();
      filled = 0;
    }
    cur.push_back(i);
    filled += lens[i];
  }
  if (!cur.empty()) packs.push_back(cur);
  return packs;
}

}  // namespace testsupport
