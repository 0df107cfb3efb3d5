#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "speechpack/batch/batcher.hpp"
#include "speechpack/error.hpp"
#include "support.hpp"

using namespace speechpack;
using namespace speechpack::batch;
using testsupport::seqs_of;

namespace {

std::vector<std::size_t> row_lengths(const PaddedBatch& b) {
  std::vector<std::size_t> out;
  for (const auto& r : b.rows) out.push_back(r.size());
  return out;
}

std::vector<std::size_t> random_lengths(std::mt19937_64& rng, std::size_t n, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> d(lo, hi);
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

std::vector<std::size_t> lognormal_lengths(std::mt19937_64& rng, std::size_t n, std::size_t cap,
                                           double median = 100.0) {
  std::lognormal_distribution<double> d(std::log(median), 0.6);
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(d(rng))), 1, cap);
  return out;
}

std::size_t sum(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

}  // namespace

// ---------------------------------------------------------------- static

TEST(StaticBatches, SortThenChunk) {
  const auto batches = static_batches(seqs_of({3, 5, 4, 4}), StaticConfig{2, 4});
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(row_lengths(batches[0]), (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(row_lengths(batches[1]), (std::vector<std::size_t>{4, 5}));
  EXPECT_EQ(batches[0].padded_tokens(), 8u);
  EXPECT_EQ(batches[0].real_tokens(), 7u);
  EXPECT_EQ(batches[1].padded_tokens(), 10u);
  EXPECT_EQ(batches[1].real_tokens(), 9u);
  // equal lengths stay in arrival order
  EXPECT_EQ(batches[0].rows[1].source_key, "s2");
  EXPECT_EQ(batches[1].rows[0].source_key, "s3");

  const auto r = report(std::span<const PaddedBatch>(batches), StaticConfig{2, 4});
  EXPECT_EQ(r.real_tokens, 16u);
  EXPECT_EQ(r.padded_tokens, 18u);
  EXPECT_NEAR(r.waste_ratio, 1.0 / 9.0, 1e-12);
}

TEST(StaticBatches, SingleSequenceAndPartialTail) {
  const auto one = static_batches(seqs_of({5}), StaticConfig{32, 32});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(report(std::span<const PaddedBatch>(one), StaticConfig{}).waste_ratio, 0.0);

  const auto tail = static_batches(seqs_of({1, 2, 3, 4, 5, 6, 7}), StaticConfig{3, 6});
  ASSERT_EQ(tail.size(), 3u);
  EXPECT_EQ(row_lengths(tail[2]), (std::vector<std::size_t>{7}));
}

TEST(StaticBatches, SortIsConfinedToTheBuffer) {
  const auto b = static_batches(seqs_of({9, 8, 1, 2}), StaticConfig{1, 2});
  std::vector<std::size_t> order;
  for (const auto& x : b) order.push_back(x.rows[0].size());
  EXPECT_EQ(order, (std::vector<std::size_t>{8, 9, 1, 2}));
}

// ---------------------------------------------------------------- dynamic

TEST(DynamicBatches, PaddedAdmissionRule) {
  const auto one = dynamic_batches(seqs_of({10, 12, 8}), DynamicConfig{36});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].padded_tokens(), 36u);
  EXPECT_EQ(one[0].real_tokens(), 30u);

  const auto two = dynamic_batches(seqs_of({10, 30}), DynamicConfig{36});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(row_lengths(two[0]), (std::vector<std::size_t>{10}));
  EXPECT_EQ(row_lengths(two[1]), (std::vector<std::size_t>{30}));
}

TEST(DynamicBatches, OversizeIsAnError) {
  try {
    dynamic_batches(seqs_of({5, 40}), DynamicConfig{36});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOversize);
  }
  EXPECT_NO_THROW(dynamic_batches(seqs_of({4096}), DynamicConfig{4096}));
}

TEST(DynamicBatches, EveryBatchRespectsBudgetAndIsMaximal) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lens = random_lengths(rng, 1 + rng() % 150, 1, 64);
    const auto batches = dynamic_batches(seqs_of(lens), DynamicConfig{256});
    std::size_t idx = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      EXPECT_LE(batches[b].padded_tokens(), 256u);
      const auto rows = row_lengths(batches[b]);
      EXPECT_EQ(batches[b].max_len, *std::max_element(rows.begin(), rows.end()));
      idx += batches[b].rows.size();
      if (b + 1 < batches.size()) {
        const std::size_t next = lens[idx];
        EXPECT_GT((batches[b].rows.size() + 1) * std::max(batches[b].max_len, next), 256u);
      }
    }
    EXPECT_EQ(idx, lens.size());
  }
}

// ---------------------------------------------------------------- pack

TEST(PackSequences, FifoExample) {
  const auto packs = pack_sequences(seqs_of({3, 4, 2, 5}), PackConfig{8, 1});
  ASSERT_EQ(packs.size(), 2u);
  EXPECT_EQ(packs[0].filled, 7u);
  EXPECT_EQ(packs[1].filled, 7u);
  EXPECT_EQ(packs[0].members, (std::vector<std::string>{"s0", "s1"}));
  EXPECT_EQ(packs[1].members, (std::vector<std::string>{"s2", "s3"}));
  EXPECT_EQ(packs[0].cu_seqlens, (std::vector<std::uint32_t>{0, 3, 7}));
  EXPECT_EQ(packs[0].position_ids, (std::vector<std::uint32_t>{0, 1, 2, 0, 1, 2, 3, 0}));
  for (const auto& p : packs) EXPECT_TRUE(validate_packed_batch(p).empty());

  const auto r = report(std::span<const PackedBatch>(packs), PackConfig{8, 1});
  EXPECT_EQ(r.num_batches, 2u);
  EXPECT_EQ(r.real_tokens, 14u);
  EXPECT_EQ(r.padded_tokens, 16u);
  EXPECT_NEAR(r.waste_ratio, 0.125, 1e-12);
}

TEST(PackSequences, ExactFitHasNoWaste) {
  const auto packs = pack_sequences(seqs_of({8}), PackConfig{8, 4});
  ASSERT_EQ(packs.size(), 1u);
  EXPECT_EQ(packs[0].filled, 8u);
  EXPECT_EQ(report(std::span<const PackedBatch>(packs), PackConfig{8, 4}).waste_ratio, 0.0);
}

TEST(PackSequences, PadTailUsesPadIdWithoutLoss) {
  const auto packs = pack_sequences(seqs_of({3}), PackConfig{6, 1, OversizePolicy::kDrop, 99});
  ASSERT_EQ(packs.size(), 1u);
  EXPECT_EQ(packs[0].pad_id, 99u);
  for (std::size_t i = 3; i < 6; ++i) {
    EXPECT_EQ(packs[0].tokens[i], 99u);
    EXPECT_EQ(packs[0].loss_mask[i], 0);
  }
  EXPECT_TRUE(validate_packed_batch(packs[0]).empty());
}

TEST(PackSequences, OversizePolicies) {
  std::size_t dropped = 0;
  const auto kept = pack_sequences(seqs_of({3, 20, 4}), PackConfig{8, 1, OversizePolicy::kDrop}, &dropped);
  EXPECT_EQ(dropped, 1u);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].members, (std::vector<std::string>{"s0", "s2"}));

  EXPECT_THROW(pack_sequences(seqs_of({3, 20}), PackConfig{8, 1, OversizePolicy::kError}), Error);

  SequencePacker p(PackConfig{8, 1, OversizePolicy::kEmitAloneTruncated});
  std::vector<PackedBatch> out;
  const PackedSink sink = [&](PackedBatch&& b) { out.push_back(std::move(b)); };
  for (auto& s : seqs_of({3, 20, 4})) p.push(std::move(s), sink);
  p.finish(sink);
  EXPECT_EQ(p.truncated_tokens(), 12u);
  std::size_t filled = 0;
  for (const auto& b : out) {
    EXPECT_TRUE(validate_packed_batch(b).empty());
    filled += b.filled;
  }
  EXPECT_EQ(filled, 3u + 8 + 4);
}

TEST(PackSequences, LookAheadFillsGapsAndStartsWithLongest) {
  // buffer 3: pack 1 opens with 7 (longest), then first fit 1
  const auto packs = pack_sequences(seqs_of({5, 7, 1, 6}), PackConfig{8, 3});
  ASSERT_EQ(packs.size(), 3u);
  EXPECT_EQ(packs[0].members, (std::vector<std::string>{"s1", "s2"}));
  EXPECT_EQ(packs[1].members, (std::vector<std::string>{"s3"}));
  EXPECT_EQ(packs[2].members, (std::vector<std::string>{"s0"}));
}

TEST(PackSequences, EmptySequenceRejected) {
  EXPECT_THROW(pack_sequences(seqs_of({3, 0}), PackConfig{8, 1}), Error);
}

TEST(PackSequences, MatchesIndependentSimulation) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t pack_size = 16 + rng() % 200;
    const std::size_t buffer = 1 + rng() % 12;
    auto lens = random_lengths(rng, rng() % 120, 1, pack_size + 10);
    const auto packs = pack_sequences(seqs_of(lens), PackConfig{pack_size, buffer});
    const auto expected = testsupport::oracle_pack(lens, pack_size, buffer);
    ASSERT_EQ(packs.size(), expected.size());
    for (std::size_t p = 0; p < packs.size(); ++p) {
      std::vector<std::string> keys;
      for (auto i : expected[p]) keys.push_back("s" + std::to_string(i));
      EXPECT_EQ(packs[p].members, keys);
    }
    if (buffer == 1) EXPECT_EQ(expected, testsupport::fifo_pack(lens, pack_size));
  }
}

// ---------------------------------------------------------------- invariants

TEST(BatcherProperties, ConservationMembershipAndFillBound) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t max_len = 1 + rng() % 64;
    const std::size_t pack_size = 64 + rng() % 64;
    const auto lens = random_lengths(rng, 1 + rng() % 200, 1, max_len + (trial % 4 == 0 ? 80 : 0));
    const auto seqs = seqs_of(lens);
    const std::size_t total = sum(lens);

    for (std::size_t buffer : {std::size_t{1}, std::size_t{8}, std::size_t{64}}) {
      SequencePacker p(PackConfig{pack_size, buffer});
      std::vector<PackedBatch> packs;
      for (auto s : seqs) p.push(std::move(s), [&](PackedBatch&& b) { packs.push_back(std::move(b)); });
      p.finish([&](PackedBatch&& b) { packs.push_back(std::move(b)); });
      std::map<std::string, int> seen;
      std::size_t packed = 0;
      for (std::size_t i = 0; i < packs.size(); ++i) {
        ASSERT_TRUE(validate_packed_batch(packs[i]).empty());
        packed += packs[i].filled;
        for (const auto& m : packs[i].members) ++seen[m];
      }
      for (const auto& k : p.dropped_keys()) ++seen[k];
      EXPECT_EQ(packed + p.dropped_tokens(), total);
      EXPECT_EQ(seen.size(), seqs.size());
      for (const auto& [k, n] : seen) EXPECT_EQ(n, 1) << k;
      EXPECT_EQ(p.tally().total_length(), total);
      const std::size_t longest = [&] {
        std::size_t m = 0;
        for (auto l : lens) {
          if (l <= pack_size) m = std::max(m, l);
        }
        return m;
      }();
      for (std::size_t i = 0; i + 1 < packs.size(); ++i) {
        EXPECT_GT(packs[i].filled, pack_size - longest) << "pack " << i << " buffer " << buffer;
      }
    }

    for (const auto& batches : {static_batches(seqs, StaticConfig{8, 32}),
                                dynamic_batches(seqs, DynamicConfig{std::max<std::size_t>(256, max_len + 80)})}) {
      std::map<std::string, int> seen;
      std::size_t real = 0;
      for (const auto& b : batches) {
        EXPECT_GE(b.padded_tokens(), b.real_tokens());
        real += b.real_tokens();
        for (const auto& r : b.rows) ++seen[r.source_key];
      }
      EXPECT_EQ(real, total);
      EXPECT_EQ(seen.size(), seqs.size());
    }
  }
}

TEST(BatcherProperties, StrategyOrderingOnRandomCorpora) {
  std::mt19937_64 rng(2024);
  for (int corpus = 0; corpus < 25; ++corpus) {
    // lengths and token budgets scaled down by 8: max tokens 4096 -> 512, pack 8192 -> 1024
    const auto lens = lognormal_lengths(rng, 2000, 256, 50.0);
    const auto seqs = seqs_of(lens);
    const auto st =
        report(std::span<const PaddedBatch>(static_batches(seqs, StaticConfig{32, 32})), StaticConfig{32, 32});
    const auto dy = report(std::span<const PaddedBatch>(dynamic_batches(seqs, DynamicConfig{512})), DynamicConfig{512});
    const auto pk = report(std::span<const PackedBatch>(pack_sequences(seqs, PackConfig{1024, 64})), PackConfig{1024, 64});
    EXPECT_LE(pk.padded_tokens, dy.padded_tokens) << "corpus " << corpus;
    EXPECT_LE(dy.padded_tokens, st.padded_tokens) << "corpus " << corpus;
    EXPECT_EQ(st.real_tokens, sum(lens));
    EXPECT_EQ(dy.real_tokens, sum(lens));
    EXPECT_EQ(pk.real_tokens, sum(lens));
  }
}

TEST(BatcherProperties, DeterministicOutput) {
  std::mt19937_64 rng(5);
  const auto seqs = seqs_of(lognormal_lengths(rng, 3000, 512));
  EXPECT_EQ(pack_sequences(seqs, PackConfig{2048, 64}), pack_sequences(seqs, PackConfig{2048, 64}));
  const auto a = static_batches(seqs, StaticConfig{16, 64}), b = static_batches(seqs, StaticConfig{16, 64});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].rows, b[i].rows);
}

TEST(Report, EmptyStreamIsZero) {
  const auto r = report(std::span<const PackedBatch>{}, PackConfig{});
  EXPECT_EQ(r.num_batches, 0u);
  EXPECT_EQ(r.padded_tokens, 0u);
  EXPECT_EQ(r.waste_ratio, 0.0);
  EXPECT_EQ(report(std::span<const PaddedBatch>{}, DynamicConfig{}).waste_ratio, 0.0);
}

TEST(InputTally, ChecksumDependsOnOrder) {
  InputTally a, b;
  for (std::size_t x : {3, 4}) a.observe(x);
  for (std::size_t x : {4, 3}) b.observe(x);
  EXPECT_EQ(a.total_length(), b.total_length());
  EXPECT_NE(a.checksum(), b.checksum());
}
