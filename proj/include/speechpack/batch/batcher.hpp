#pragma once

// The three batching strategies. Each is a single-consumer stateful
// transformer: push() sequences in arrival order, finish() once at the end;
// completed batches are handed to the sink as soon as they are decided.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "speechpack/core.hpp"

namespace speechpack::batch {

struct PaddedBatch {
  std::vector<TokenSequence> rows;
  std::size_t max_len = 0;

  std::size_t real_tokens() const;
  std::size_t padded_tokens() const { return max_len * rows.size(); }
};

using PaddedSink = std::function<void(PaddedBatch&&)>;
using PackedSink = std::function<void(PackedBatch&&)>;

/// Running count/length/checksum of what a batcher has consumed, so paired
/// comparisons can prove every strategy saw the same stream.
class InputTally {
 public:
  void observe(std::size_t length);
  std::size_t count() const { return count_; }
  std::size_t total_length() const { return total_; }
  std::uint64_t checksum() const { return hash_; }

 private:
  std::size_t count_ = 0;
  std::size_t total_ = 0;
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

class StaticBatcher {
 public:
  explicit StaticBatcher(StaticConfig config);
  void push(TokenSequence seq, const PaddedSink& sink);
  void finish(const PaddedSink& sink);
  const InputTally& tally() const { return tally_; }

 private:
  void flush(const PaddedSink& sink);

  StaticConfig config_;
  std::vector<TokenSequence> buffer_;
  InputTally tally_;
};

class DynamicBatcher {
 public:
  explicit DynamicBatcher(DynamicConfig config);
  /// Throws Error(kOversize) for a sequence longer than the token budget.
  void push(TokenSequence seq, const PaddedSink& sink);
  void finish(const PaddedSink& sink);
  const InputTally& tally() const { return tally_; }

 private:
  DynamicConfig config_;
  PaddedBatch current_;
  InputTally tally_;
};

class SequencePacker {
 public:
  explicit SequencePacker(PackConfig config);
  void push(TokenSequence seq, const PackedSink& sink);
  void finish(const PackedSink& sink);

  const InputTally& tally() const { return tally_; }
  std::size_t dropped() const { return dropped_; }
  std::size_t dropped_tokens() const { return dropped_tokens_; }
  std::size_t truncated_tokens() const { return truncated_tokens_; }
  const std::vector<std::string>& dropped_keys() const { return dropped_keys_; }

 private:
  void step(const PackedSink& sink);
  void take_longest();
  void finalize(const PackedSink& sink);
  PackedBatch assemble(std::span<const TokenSequence> members) const;

  PackConfig config_;
  std::deque<TokenSequence> buffer_;
  std::vector<TokenSequence> current_;
  std::size_t filled_ = 0;
  std::size_t dropped_ = 0;
  std::size_t dropped_tokens_ = 0;
  std::size_t truncated_tokens_ = 0;
  std::vector<std::string> dropped_keys_;
  InputTally tally_;
};

/// Builds a PackedBatch out of whole sequences (members must fit pack_size).
PackedBatch make_packed_batch(std::span<const TokenSequence> members, std::size_t pack_size,
                              TokenId pad_id);

// Whole-vector conveniences over the streaming classes.
std::vector<PaddedBatch> static_batches(std::vector<TokenSequence> seqs, StaticConfig config);
std::vector<PaddedBatch> dynamic_batches(std::vector<TokenSequence> seqs, DynamicConfig config);
std::vector<PackedBatch> pack_sequences(std::vector<TokenSequence> seqs, PackConfig config,
                                        std::size_t* dropped = nullptr);

/// Aggregates emitted batches into a StrategyReport.
class ReportBuilder {
 public:
  explicit ReportBuilder(StrategyConfig config);
  void add(const PaddedBatch& batch);
  void add(const PackedBatch& batch);
  void set_input(const InputTally& tally) { report_.input_checksum = tally.checksum(); }
  void set_dropped(std::size_t sequences, std::size_t truncated_tokens);
  StrategyReport finish() const;

 private:
  StrategyReport report_;
};

StrategyReport report(std::span<const PaddedBatch> batches, const StrategyConfig& config);
StrategyReport report(std::span<const PackedBatch> packs, const PackConfig& config,
                      std::size_t dropped = 0);

}  // namespace speechpack::batch
