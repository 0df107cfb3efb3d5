#include <gtest/gtest.h>

#include "speechpack/core.hpp"
#include "speechpack/error.hpp"
#include "support.hpp"

using namespace speechpack;

namespace {

PackedBatch good_batch() {
  PackedBatch b;
  b.pack_size = 8;
  b.filled = 7;
  b.cu_seqlens = {0, 3, 7};
  b.tokens = {11, 12, 13, 21, 22, 23, 24, 0};
  b.loss_mask = {1, 1, 1, 1, 1, 1, 1, 0};
  b.position_ids = {0, 1, 2, 0, 1, 2, 3, 0};
  b.members = {"a", "b"};
  return b;
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(ValidatePackedBatch, WellFormedBatchHasNoFindings) {
  EXPECT_TRUE(validate_packed_batch(good_batch()).empty());
}

TEST(ValidatePackedBatch, EmptySegmentIsNonStrict) {
  PackedBatch b = good_batch();
  b.cu_seqlens = {0, 3, 3};
  b.filled = 3;
  b.tokens = {11, 12, 13, 0, 0, 0, 0, 0};
  b.loss_mask = {1, 1, 1, 0, 0, 0, 0, 0};
  b.position_ids = {0, 1, 2, 0, 0, 0, 0, 0};
  const auto findings = validate_packed_batch(b);
  ASSERT_EQ(findings.size(), 1u) << findings.front();
  EXPECT_NE(findings[0].find("non-strict offsets"), std::string::npos);
}

TEST(ValidatePackedBatch, FilledBeyondCapacityIsOverfull) {
  PackedBatch b = good_batch();
  b.filled = 9;
  b.cu_seqlens = {0, 3, 9};
  b.members = {"a", "b"};
  const auto findings = validate_packed_batch(b);
  EXPECT_TRUE(mentions(findings, "overfull"));
}

TEST(ValidatePackedBatch, DetectsPositionAndPadViolations) {
  PackedBatch b = good_batch();
  b.position_ids[3] = 3;
  EXPECT_TRUE(mentions(validate_packed_batch(b), "position ids"));

  b = good_batch();
  b.tokens[7] = 5;
  EXPECT_TRUE(mentions(validate_packed_batch(b), "pad tail"));

  b = good_batch();
  b.loss_mask[7] = 1;
  EXPECT_TRUE(mentions(validate_packed_batch(b), "pad tail"));

  b = good_batch();
  b.members = {"a"};
  EXPECT_TRUE(mentions(validate_packed_batch(b), "members"));

  b = good_batch();
  b.cu_seqlens = {1, 3, 7};
  EXPECT_TRUE(mentions(validate_packed_batch(b), "start at 0"));
}

TEST(ValidatePackedBatch, AcceptedBatchesSatisfyCountIdentities) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> n_dist(1, 6), len_dist(1, 9);
    std::vector<TokenSequence> members;
    std::size_t total = 0;
    const std::size_t n = n_dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
      members.push_back(testsupport::seq_of(len_dist(rng), "m" + std::to_string(i)));
      total += members.back().size();
    }
    PackedBatch b;
    b.pack_size = total + (rng() % 4);
    b.filled = total;
    b.cu_seqlens = {0};
    for (const auto& m : members) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        b.tokens.push_back(m.tokens[j]);
        b.loss_mask.push_back(m.loss_mask[j]);
        b.position_ids.push_back(static_cast<std::uint32_t>(j));
      }
      b.cu_seqlens.push_back(b.cu_seqlens.back() + static_cast<std::uint32_t>(m.size()));
      b.members.push_back(m.source_key);
    }
    b.tokens.resize(b.pack_size, 0);
    b.loss_mask.resize(b.pack_size, 0);
    b.position_ids.resize(b.pack_size, 0);
    ASSERT_TRUE(validate_packed_batch(b).empty());
    EXPECT_EQ(b.num_sequences(), b.members.size());
    std::size_t sum = 0;
    for (std::size_t i = 0; i + 1 < b.cu_seqlens.size(); ++i) sum += b.cu_seqlens[i + 1] - b.cu_seqlens[i];
    EXPECT_EQ(sum, b.filled);
  }
}

TEST(TokenSequence, CheckAndTruncate) {
  TokenSequence s;
  s.tokens = {1, 6, 8, 8, 7, 50, 51, 2};
  s.loss_mask = {0, 0, 0, 0, 0, 1, 1, 1};
  s.spans = {{0, 2, SpanKind::kControl}, {2, 4, SpanKind::kAudioPlaceholder}, {4, 5, SpanKind::kControl},
             {5, 8, SpanKind::kText}};
  EXPECT_TRUE(check_token_sequence(s).empty());

  const TokenSequence t = truncate(s, 3);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.spans.back().end, 3u);
  EXPECT_TRUE(check_token_sequence(t).empty());

  TokenSequence bad = s;
  bad.loss_mask[2] = 1;
  EXPECT_FALSE(check_token_sequence(bad).empty());
  EXPECT_TRUE(check_token_sequence(bad, true).empty());

  bad = s;
  bad.spans[1].end = 3;
  EXPECT_FALSE(check_token_sequence(bad).empty());
}

TEST(StrategyConfig, DescribeAndValidate) {
  EXPECT_EQ(describe(StaticConfig{}), "batch_size=32;sort_buffer=32");
  EXPECT_EQ(describe(DynamicConfig{}), "max_tokens_in_batch=4096");
  EXPECT_EQ(describe(PackConfig{}), "pack_size=8192;buffer=64;oversize=drop");
  EXPECT_NO_THROW(validate(PackConfig{25000}));
  EXPECT_NO_THROW(validate(PackConfig{20000}));
  EXPECT_THROW(validate(PackConfig{0}), Error);
  EXPECT_THROW(validate(StaticConfig{8, 4}), Error);
  EXPECT_THROW(validate(DynamicConfig{0}), Error);
  EXPECT_EQ(parse_oversize_policy("emit_alone_truncated"), OversizePolicy::kEmitAloneTruncated);
  EXPECT_THROW(parse_oversize_policy("maybe"), Error);
}

TEST(Roles, ParseKnownRejectUnknown) {
  EXPECT_EQ(parse_role("assistant"), Role::kAssistant);
  EXPECT_EQ(to_string(Role::kSystem), "system");
  try {
    parse_role("narrator");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownRole);
  }
}
