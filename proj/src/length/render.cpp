#include "speechpack/length/render.hpp"

#include "speechpack/error.hpp"

namespace speechpack::length {

namespace {

class SequenceBuilder {
 public:
  explicit SequenceBuilder(std::string key) { seq_.source_key = std::move(key); }

  void append(std::span<const TokenId> ids, bool loss, SpanKind kind) {
    if (ids.empty()) return;
    const std::size_t begin = seq_.tokens.size();
    seq_.tokens.insert(seq_.tokens.end(), ids.begin(), ids.end());
    seq_.loss_mask.insert(seq_.loss_mask.end(), ids.size(), loss ? 1 : 0);
    // Adjacent spans of the same kind and supervision merge.
    if (!seq_.spans.empty()) {
      Span& last = seq_.spans.back();
      if (last.kind == kind && last.end == begin && seq_.loss_mask[last.begin] == (loss ? 1 : 0)) {
        last.end = seq_.tokens.size();
        return;
      }
    }
    seq_.spans.push_back({begin, seq_.tokens.size(), kind});
  }

  void append(TokenId id, bool loss, SpanKind kind) { append(std::span(&id, 1), loss, kind); }

  void append_run(TokenId id, std::size_t count, bool loss, SpanKind kind) {
    const std::vector<TokenId> run(count, id);
    append(run, loss, kind);
  }

  TokenSequence take() { return std::move(seq_); }

 private:
  TokenSequence seq_;
};

}  // namespace

TokenSequence render_pretrain(const PretrainSample& sample, const AudioMeta& meta,
                              const Tokenizer& tokenizer, const AudioRateConfig& cfg) {
  const SpecialIds& sp = tokenizer.specials();
  SequenceBuilder b(sample.key);
  b.append(sp.bos, false, SpanKind::kControl);
  b.append(sp.audio_begin, false, SpanKind::kControl);
  b.append_run(sp.audio_placeholder, audio_token_count(meta, cfg), false, SpanKind::kAudioPlaceholder);
  b.append(sp.audio_end, false, SpanKind::kControl);
  b.append(tokenizer.encode(sample.txt), true, SpanKind::kText);
  b.append(sp.eos, true, SpanKind::kText);
  return b.take();
}

TokenSequence render_conversation(const Conversation& conv, const AudioMetaResolver& metas,
                                  const Tokenizer& tokenizer, const AudioRateConfig& cfg,
                                  const RenderOptions& options, std::string source_key) {
  if (conv.messages.empty()) throw Error(ErrorCode::kEmptyMessages, "empty conversation");
  const SpecialIds& sp = tokenizer.specials();
  SequenceBuilder b(std::move(source_key));
  for (const Message& msg : conv.messages) {
    const bool supervised = msg.role == Role::kAssistant;
    b.append(sp.role_marker(msg.role), false, SpanKind::kControl);
    for (const ContentPart& part : msg.content) {
      if (const auto* text = std::get_if<TextPart>(&part)) {
        b.append(tokenizer.encode(text->text), supervised, SpanKind::kText);
        continue;
      }
      const auto& audio = std::get<AudioPart>(part);
      const std::optional<AudioMeta> meta = metas(audio.audio);
      if (!meta) throw Error(ErrorCode::kUnresolvedAudio, "no audio meta for '" + audio.audio + "'");
      b.append(sp.audio_begin, false, SpanKind::kControl);
      b.append_run(sp.audio_placeholder, audio_token_count(*meta, cfg),
                   supervised && options.supervise_assistant_audio, SpanKind::kAudioPlaceholder);
      b.append(sp.audio_end, false, SpanKind::kControl);
      if (options.tokenize_audio_transcripts && audio.text) {
        b.append(tokenizer.encode(*audio.text), supervised, SpanKind::kText);
      }
    }
    b.append(sp.eos, supervised, SpanKind::kText);
  }
  return b.take();
}

TokenSequence render_conversation(const Conversation& conv,
                                  const std::unordered_map<std::string, AudioMeta>& metas,
                                  const Tokenizer& tokenizer, const AudioRateConfig& cfg,
                                  const RenderOptions& options, std::string source_key) {
  const AudioMetaResolver lookup = [&](const std::string& path) -> std::optional<AudioMeta> {
    if (auto it = metas.find(path); it != metas.end()) return it->second;
    return std::nullopt;
  };
  return render_conversation(conv, lookup, tokenizer, cfg, options, std::move(source_key));
}

}  // namespace speechpack::length
