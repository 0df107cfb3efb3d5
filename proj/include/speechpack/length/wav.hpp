#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "speechpack/core.hpp"

namespace speechpack::length {

/// Reads a RIFF/WAVE header: fmt must be PCM (or WAVE_FORMAT_EXTENSIBLE with
/// a PCM subformat). Only the header is needed; the data chunk size comes
/// from its chunk header, not from the bytes actually present.
AudioMeta parse_wav_header(std::span<const std::uint8_t> bytes);

/// Same as parse_wav_header but reads only as much of the file as needed.
AudioMeta read_wav_meta(const std::string& path);

/// Canonical 44-byte PCM header followed by silence.
Bytes make_pcm_wav(std::uint32_t sample_rate, std::uint64_t num_samples,
                   std::uint16_t channels = 1, std::uint16_t bits_per_sample = 16);

/// Speech encoder + projector downsampling.
struct AudioRateConfig {
  std::chrono::microseconds frame_shift{10'000};
  std::uint32_t encoder_subsample = 4;
  std::uint32_t projector_stride = 2;

  std::uint64_t downsample() const {
    return std::uint64_t{encoder_subsample} * projector_stride;
  }
};

/// floor(duration / frame_shift), computed exactly in integers.
std::uint64_t audio_frame_count(const AudioMeta& meta, const AudioRateConfig& cfg);

/// ceil(frames / (encoder_subsample * projector_stride)). Uses the true
/// duration; nothing is padded to a fixed window.
std::uint64_t audio_token_count(const AudioMeta& meta, const AudioRateConfig& cfg);

}  // namespace speechpack::length
