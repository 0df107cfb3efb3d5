#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "speechpack/core.hpp"
#include "speechpack/formats/byte_source.hpp"
#include "speechpack/length/render.hpp"
#include "speechpack/length/tokenizer.hpp"
#include "speechpack/length/wav.hpp"

namespace speechpack::cli {

enum class LengthDistribution { kUniform, kLognormal };

/// Seeded synthetic corpus. Defaults mimic short read-speech utterances.
struct SyntheticSpec {
  std::size_t count = 10'000;
  LengthDistribution distribution = LengthDistribution::kLognormal;
  double mu = std::log(400.0);
  double sigma = 0.6;
  std::size_t uniform_min = 1;
  std::size_t uniform_max = 1024;
  std::size_t cap = 2048;
  std::uint64_t seed = 17;
};

enum class SourceKind { kPretrainJsonl, kSftJsonl, kShardList, kSynthetic };

struct SourceSpec {
  SourceKind kind = SourceKind::kSynthetic;
  std::string path;
  SyntheticSpec synthetic;
  std::size_t workers = 1;  // shard readers
  formats::HttpOptions http;
};

struct RenderSetup {
  length::Tokenizer tokenizer = length::Tokenizer::byte_level();
  length::AudioRateConfig audio;
  length::RenderOptions options;
};

struct SourceStats {
  std::size_t sequences = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

std::vector<std::size_t> synthetic_lengths(const SyntheticSpec& spec);

/// A bos control token followed by supervised pseudo-random text ids.
TokenSequence synthetic_sequence(std::size_t index, std::size_t length, std::uint64_t seed);

/// Renders every record of the source into a TokenSequence, in source order.
/// Records that cannot be rendered are skipped and listed in the stats.
/// Throws Error when the source itself cannot be opened.
SourceStats for_each_sequence(const SourceSpec& source, const RenderSetup& setup,
                              const std::function<void(TokenSequence&&)>& sink);

}  // namespace speechpack::cli
