#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>

#include "speechpack/core.hpp"
#include "speechpack/length/tokenizer.hpp"
#include "speechpack/length/wav.hpp"

namespace speechpack::length {

struct RenderOptions {
  /// Also put an audio part's transcript into the stream, right after its
  /// audio_end marker (supervised when the message is the assistant's).
  bool tokenize_audio_transcripts = false;
  /// Let assistant audio placeholders carry loss.
  bool supervise_assistant_audio = false;
};

/// [bos, audio_begin, placeholder x N, audio_end, text..., eos]; loss on the
/// text and eos only.
TokenSequence render_pretrain(const PretrainSample& sample, const AudioMeta& meta,
                              const Tokenizer& tokenizer, const AudioRateConfig& cfg);

using AudioMetaResolver = std::function<std::optional<AudioMeta>(const std::string& path)>;

/// Per message: role marker, parts in order, eos. Loss lands exactly on
/// assistant text tokens and assistant eos. Throws kUnresolvedAudio when the
/// resolver has no meta for an audio path.
TokenSequence render_conversation(const Conversation& conv, const AudioMetaResolver& metas,
                                  const Tokenizer& tokenizer, const AudioRateConfig& cfg,
                                  const RenderOptions& options = {}, std::string source_key = {});

TokenSequence render_conversation(const Conversation& conv,
                                  const std::unordered_map<std::string, AudioMeta>& metas,
                                  const Tokenizer& tokenizer, const AudioRateConfig& cfg,
                                  const RenderOptions& options = {}, std::string source_key = {});

}  // namespace speechpack::length
