#include "speechpack/cli/frame.hpp"

#include <cstring>
#include <string>

namespace speechpack::cli {

namespace {

class FrameWriter {
 public:
  explicit FrameWriter(FrameKind kind, std::uint16_t fields) {
    buf_.resize(4);  // length prefix, patched in finish()
    buf_.insert(buf_.end(), kFrameMagic.begin(), kFrameMagic.end());
    buf_.push_back(kFrameVersion);
    buf_.push_back(static_cast<std::uint8_t>(kind));
    u16(fields);
  }

  template <class Int>
  void ints(std::string_view name, std::span<const Int> values) {
    header(name, FieldType::kI32, values.size());
    for (Int v : values) u32(static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
  }

  void scalar(std::string_view name, std::size_t value) {
    const std::int64_t v = static_cast<std::int64_t>(value);
    ints(name, std::span(&v, 1));
  }

  void bytes(std::string_view name, std::span<const std::uint8_t> values) {
    header(name, FieldType::kU8, values.size());
    buf_.insert(buf_.end(), values.begin(), values.end());
  }

  void strings(std::string_view name, std::span<const std::string> values) {
    header(name, FieldType::kStrings, values.size());
    for (const auto& s : values) {
      u32(static_cast<std::uint32_t>(s.size()));
      buf_.insert(buf_.end(), s.begin(), s.end());
    }
  }

  std::vector<std::uint8_t> finish() {
    const auto len = static_cast<std::uint32_t>(buf_.size() - 4);
    for (int i = 0; i < 4; ++i) buf_[i] = (len >> (8 * i)) & 0xff;
    return std::move(buf_);
  }

 private:
  void header(std::string_view name, FieldType type, std::size_t count) {
    buf_.push_back(static_cast<std::uint8_t>(name.size()));
    buf_.insert(buf_.end(), name.begin(), name.end());
    buf_.push_back(static_cast<std::uint8_t>(type));
    u32(static_cast<std::uint32_t>(count));
  }
  void u16(std::uint16_t v) {
    buf_.push_back(v & 0xff);
    buf_.push_back(v >> 8);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back((v >> (8 * i)) & 0xff);
  }

  std::vector<std::uint8_t> buf_;
};

}  // namespace

std::vector<std::uint8_t> encode_frame(const PackedBatch& pack) {
  FrameWriter w(FrameKind::kPack, 8);
  w.scalar("pack_size", pack.pack_size);
  w.scalar("filled", pack.filled);
  w.scalar("pad_id", pack.pad_id);
  w.ints("tokens", std::span<const TokenId>(pack.tokens));
  w.bytes("loss_mask", pack.loss_mask);
  w.ints("cu_seqlens", std::span<const std::uint32_t>(pack.cu_seqlens));
  w.ints("position_ids", std::span<const std::uint32_t>(pack.position_ids));
  w.strings("members", pack.members);
  return w.finish();
}

std::vector<std::uint8_t> encode_frame(const batch::PaddedBatch& batch, TokenId pad_id) {
  const std::size_t rows = batch.rows.size();
  const std::size_t width = batch.max_len;
  std::vector<std::uint32_t> lens, tokens(rows * width, pad_id), positions(rows * width, 0);
  std::vector<std::uint8_t> mask(rows * width, 0);
  std::vector<std::string> members;
  for (std::size_t r = 0; r < rows; ++r) {
    const TokenSequence& s = batch.rows[r];
    lens.push_back(static_cast<std::uint32_t>(s.size()));
    members.push_back(s.source_key);
    for (std::size_t i = 0; i < s.size(); ++i) {
      tokens[r * width + i] = s.tokens[i];
      mask[r * width + i] = s.loss_mask[i];
      positions[r * width + i] = static_cast<std::uint32_t>(i);
    }
  }
  FrameWriter w(FrameKind::kPadded, 7);
  w.scalar("max_len", width);
  w.scalar("pad_id", pad_id);
  w.ints("seq_lens", std::span<const std::uint32_t>(lens));
  w.ints("tokens", std::span<const std::uint32_t>(tokens));
  w.bytes("loss_mask", mask);
  w.ints("position_ids", std::span<const std::uint32_t>(positions));
  w.strings("members", members);
  return w.finish();
}

std::vector<std::uint8_t> terminator_frame() { return {0, 0, 0, 0}; }

}  // namespace speechpack::cli
