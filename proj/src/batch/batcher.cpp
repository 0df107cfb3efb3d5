#include "speechpack/batch/batcher.hpp"

#include <algorithm>

#include "speechpack/error.hpp"

namespace speechpack::batch {

std::size_t PaddedBatch::real_tokens() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

void InputTally::observe(std::size_t length) {
  ++count_;
  total_ += length;
  std::uint64_t v = length;
  for (int i = 0; i < 8; ++i) {
    hash_ ^= (v >> (8 * i)) & 0xff;
    hash_ *= 0x100000001b3ull;
  }
}

StaticBatcher::StaticBatcher(StaticConfig config) : config_(config) {
  validate(StrategyConfig{config_});
  buffer_.reserve(config_.sort_buffer);
}

void StaticBatcher::push(TokenSequence seq, const PaddedSink& sink) {
  tally_.observe(seq.size());
  buffer_.push_back(std::move(seq));
  if (buffer_.size() >= config_.sort_buffer) flush(sink);
}

void StaticBatcher::finish(const PaddedSink& sink) { flush(sink); }

void StaticBatcher::flush(const PaddedSink& sink) {
  std::stable_sort(buffer_.begin(), buffer_.end(),
                   [](const TokenSequence& a, const TokenSequence& b) { return a.size() < b.size(); });
  for (std::size_t i = 0; i < buffer_.size(); i += config_.batch_size) {
    PaddedBatch batch;
    const std::size_t end = std::min(buffer_.size(), i + config_.batch_size);
    for (std::size_t j = i; j < end; ++j) {
      batch.max_len = std::max(batch.max_len, buffer_[j].size());
      batch.rows.push_back(std::move(buffer_[j]));
    }
    sink(std::move(batch));
  }
  buffer_.clear();
}

DynamicBatcher::DynamicBatcher(DynamicConfig config) : config_(config) {
  validate(StrategyConfig{config_});
}

void DynamicBatcher::push(TokenSequence seq, const PaddedSink& sink) {
  const std::size_t len = seq.size();
  if (len > config_.max_tokens_in_batch) {
    throw Error(ErrorCode::kOversize, "sequence '" + seq.source_key + "' of length " +
                                          std::to_string(len) + " exceeds max_tokens_in_batch " +
                                          std::to_string(config_.max_tokens_in_batch));
  }
  tally_.observe(len);
  const std::size_t widest = std::max(current_.max_len, len);
  if (!current_.rows.empty() && (current_.rows.size() + 1) * widest > config_.max_tokens_in_batch) {
    sink(std::move(current_));
    current_ = PaddedBatch{};
  }
  current_.max_len = std::max(current_.max_len, len);
  current_.rows.push_back(std::move(seq));
}

void DynamicBatcher::finish(const PaddedSink& sink) {
  if (!current_.rows.empty()) {
    sink(std::move(current_));
    current_ = PaddedBatch{};
  }
}

PackedBatch make_packed_batch(std::span<const TokenSequence> members, std::size_t pack_size,
                              TokenId pad_id) {
  PackedBatch b;
  b.pack_size = pack_size;
  b.pad_id = pad_id;
  b.tokens.reserve(pack_size);
  b.loss_mask.reserve(pack_size);
  b.position_ids.reserve(pack_size);
  b.cu_seqlens.reserve(members.size() + 1);
  b.cu_seqlens.push_back(0);
  for (const TokenSequence& s : members) {
    b.tokens.insert(b.tokens.end(), s.tokens.begin(), s.tokens.end());
    b.loss_mask.insert(b.loss_mask.end(), s.loss_mask.begin(), s.loss_mask.end());
    for (std::size_t i = 0; i < s.size(); ++i) b.position_ids.push_back(static_cast<std::uint32_t>(i));
    b.cu_seqlens.push_back(static_cast<std::uint32_t>(b.tokens.size()));
    b.members.push_back(s.source_key);
  }
  b.filled = b.tokens.size();
  b.tokens.resize(pack_size, pad_id);
  b.loss_mask.resize(pack_size, 0);
  b.position_ids.resize(pack_size, 0);
  return b;
}

SequencePacker::SequencePacker(PackConfig config) : config_(config) {
  validate(StrategyConfig{config_});
}

void SequencePacker::push(TokenSequence seq, const PackedSink& sink) {
  const std::size_t len = seq.size();
  if (len == 0) {
    throw Error(ErrorCode::kInvalidField, "sequence '" + seq.source_key + "' is empty");
  }
  tally_.observe(len);
  if (len > config_.pack_size) {
    switch (config_.oversize_policy) {
      case OversizePolicy::kError:
        throw Error(ErrorCode::kOversize, "sequence '" + seq.source_key + "' of length " +
                                              std::to_string(len) + " exceeds pack_size " +
                                              std::to_string(config_.pack_size));
      case OversizePolicy::kDrop:
        ++dropped_;
        dropped_tokens_ += len;
        dropped_keys_.push_back(seq.source_key);
        return;
      case OversizePolicy::kEmitAloneTruncated: {
        truncated_tokens_ += len - config_.pack_size;
        const TokenSequence cut = truncate(std::move(seq), config_.pack_size);
        sink(make_packed_batch(std::span(&cut, 1), config_.pack_size, config_.pad_id));
        return;
      }
    }
  }
  buffer_.push_back(std::move(seq));
  while (buffer_.size() >= config_.buffer) step(sink);
}

void SequencePacker::finish(const PackedSink& sink) {
  while (!buffer_.empty()) step(sink);
  if (!current_.empty()) finalize(sink);
}

void SequencePacker::take_longest() {
  auto longest = buffer_.begin();
  for (auto it = buffer_.begin(); it != buffer_.end(); ++it) {
    if (it->size() > longest->size()) longest = it;
  }
  filled_ += longest->size();
  current_.push_back(std::move(*longest));
  buffer_.erase(longest);
}

void SequencePacker::step(const PackedSink& sink) {
  if (current_.empty()) {
    take_longest();
    return;
  }
  const std::size_t room = config_.pack_size - filled_;
  for (auto it = buffer_.begin(); it != buffer_.end(); ++it) {
    if (it->size() <= room) {
      filled_ += it->size();
      current_.push_back(std::move(*it));
      buffer_.erase(it);
      return;
    }
  }
  finalize(sink);
  take_longest();
}

void SequencePacker::finalize(const PackedSink& sink) {
  sink(make_packed_batch(current_, config_.pack_size, config_.pad_id));
  current_.clear();
  filled_ = 0;
}

std::vector<PaddedBatch> static_batches(std::vector<TokenSequence> seqs, StaticConfig config) {
  std::vector<PaddedBatch> out;
  StaticBatcher b(config);
  const PaddedSink sink = [&](PaddedBatch&& batch) { out.push_back(std::move(batch)); };
  for (auto& s : seqs) b.push(std::move(s), sink);
  b.finish(sink);
  return out;
}

std::vector<PaddedBatch> dynamic_batches(std::vector<TokenSequence> seqs, DynamicConfig config) {
  std::vector<PaddedBatch> out;
  DynamicBatcher b(config);
  const PaddedSink sink = [&](PaddedBatch&& batch) { out.push_back(std::move(batch)); };
  for (auto& s : seqs) b.push(std::move(s), sink);
  b.finish(sink);
  return out;
}

std::vector<PackedBatch> pack_sequences(std::vector<TokenSequence> seqs, PackConfig config,
                                        std::size_t* dropped) {
  std::vector<PackedBatch> out;
  SequencePacker p(config);
  const PackedSink sink = [&](PackedBatch&& batch) { out.push_back(std::move(batch)); };
  for (auto& s : seqs) p.push(std::move(s), sink);
  p.finish(sink);
  if (dropped != nullptr) *dropped = p.dropped();
  return out;
}

ReportBuilder::ReportBuilder(StrategyConfig config) {
  report_.strategy = strategy_of(config);
  report_.config = config;
}

void ReportBuilder::add(const PaddedBatch& batch) {
  ++report_.num_batches;
  report_.real_tokens += batch.real_tokens();
  report_.padded_tokens += batch.padded_tokens();
  report_.final_fill = batch.real_tokens();
}

void ReportBuilder::add(const PackedBatch& batch) {
  ++report_.num_batches;
  report_.real_tokens += batch.filled;
  report_.padded_tokens += batch.pack_size;
  report_.final_fill = batch.filled;
}

void ReportBuilder::set_dropped(std::size_t sequences, std::size_t truncated_tokens) {
  report_.oversize_dropped = sequences;
  report_.truncated_tokens = truncated_tokens;
}

StrategyReport ReportBuilder::finish() const {
  StrategyReport r = report_;
  r.waste_ratio = r.padded_tokens == 0
                      ? 0.0
                      : static_cast<double>(r.padded_tokens - r.real_tokens) / r.padded_tokens;
  return r;
}

StrategyReport report(std::span<const PaddedBatch> batches, const StrategyConfig& config) {
  ReportBuilder b(config);
  for (const auto& batch : batches) b.add(batch);
  return b.finish();
}

StrategyReport report(std::span<const PackedBatch> packs, const PackConfig& config,
                      std::size_t dropped) {
  ReportBuilder b(config);
  for (const auto& p : packs) b.add(p);
  b.set_dropped(dropped, 0);
  return b.finish();
}

}  // namespace speechpack::batch
