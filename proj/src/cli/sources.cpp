#include "speechpack/cli/sources.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_map>

#include "speechpack/error.hpp"
#include "speechpack/formats/jsonl.hpp"
#include "speechpack/formats/shard_pool.hpp"

namespace speechpack::cli {

std::vector<std::size_t> synthetic_lengths(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> out;
  out.reserve(spec.count);
  const std::size_t cap = std::max<std::size_t>(1, spec.cap);
  if (spec.distribution == LengthDistribution::kUniform) {
    if (spec.uniform_min == 0 || spec.uniform_min > spec.uniform_max) {
      throw Error(ErrorCode::kInvalidConfig, "uniform lengths need 1 <= min <= max");
    }
    std::uniform_int_distribution<std::size_t> dist(spec.uniform_min, spec.uniform_max);
    for (std::size_t i = 0; i < spec.count; ++i) out.push_back(std::min(cap, dist(rng)));
  } else {
    std::normal_distribution<double> dist(spec.mu, spec.sigma);
    for (std::size_t i = 0; i < spec.count; ++i) {
      const double len = std::round(std::exp(dist(rng)));
      out.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, len)), 1, cap));
    }
  }
  return out;
}

TokenSequence synthetic_sequence(std::size_t index, std::size_t length, std::uint64_t seed) {
  const length::SpecialIds specials;
  TokenSequence s;
  s.source_key = "syn-" + std::to_string(index);
  if (length == 0) return s;
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  std::uniform_int_distribution<TokenId> ids(length::kNumDefaultSpecials,
                                             length::kNumDefaultSpecials + 255);
  s.tokens.reserve(length);
  s.tokens.push_back(specials.bos);
  for (std::size_t i = 1; i < length; ++i) s.tokens.push_back(ids(rng));
  s.loss_mask.assign(length, 1);
  s.loss_mask[0] = 0;
  s.spans.push_back({0, 1, SpanKind::kControl});
  if (length > 1) s.spans.push_back({1, length, SpanKind::kText});
  return s;
}

namespace {

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open '" + path + "'");
  return in;
}

void skip(SourceStats& stats, std::string why) {
  ++stats.skipped;
  if (stats.warnings.size() < 100) stats.warnings.push_back(std::move(why));
}

}  // namespace

SourceStats for_each_sequence(const SourceSpec& source, const RenderSetup& setup,
                              const std::function<void(TokenSequence&&)>& sink) {
  SourceStats stats;
  auto emit = [&](TokenSequence&& s) {
    ++stats.sequences;
    sink(std::move(s));
  };

  switch (source.kind) {
    case SourceKind::kSynthetic: {
      const auto lengths = synthetic_lengths(source.synthetic);
      for (std::size_t i = 0; i < lengths.size(); ++i) {
        emit(synthetic_sequence(i, lengths[i], source.synthetic.seed));
      }
      break;
    }
    case SourceKind::kPretrainJsonl: {
      std::ifstream in = open_text(source.path);
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        try {
          const PretrainSample sample = formats::parse_pretrain_line(line, n);
          const AudioMeta meta = length::read_wav_meta(std::get<std::string>(sample.wav));
          emit(length::render_pretrain(sample, meta, setup.tokenizer, setup.audio));
        } catch (const Error& e) {
          skip(stats, "line " + std::to_string(n) + ": " + e.what());
        }
      }
      break;
    }
    case SourceKind::kSftJsonl: {
      std::ifstream in = open_text(source.path);
      std::unordered_map<std::string, std::optional<AudioMeta>> cache;
      const length::AudioMetaResolver resolve = [&](const std::string& path) {
        auto it = cache.find(path);
        if (it == cache.end()) {
          std::optional<AudioMeta> meta;
          try {
            meta = length::read_wav_meta(path);
          } catch (const Error&) {
          }
          it = cache.emplace(path, meta).first;
        }
        return it->second;
      };
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        try {
          const Conversation conv = formats::parse_conversation(line, n);
          emit(length::render_conversation(conv, resolve, setup.tokenizer, setup.audio,
                                           setup.options, "line-" + std::to_string(n)));
        } catch (const Error& e) {
          skip(stats, "line " + std::to_string(n) + ": " + e.what());
        }
      }
      break;
    }
    case SourceKind::kShardList: {
      auto manifest = formats::read_shard_list(source.path);
      formats::ShardPool pool(std::move(manifest.shards),
                              {source.workers, /*ordered=*/true, source.http});
      while (auto item = pool.next()) {
        if (!item->sample) {
          skip(stats, item->error);
          continue;
        }
        try {
          const auto& wav = std::get<Bytes>(item->sample->wav);
          const AudioMeta meta = length::parse_wav_header(wav);
          emit(length::render_pretrain(*item->sample, meta, setup.tokenizer, setup.audio));
        } catch (const Error& e) {
          skip(stats, item->sample->key + ": " + e.what());
        }
      }
      break;
    }
  }
  return stats;
}

}  // namespace speechpack::cli
