#pragma once

// Reference-tone synthesis and per-tone magnitude extraction.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ast::signal {

/// Frequencies and sampling of the multi-tone reference signal.
struct ToneSet {
  std::vector<double> frequencies{300.0, 500.0, 700.0, 900.0};  // Hz
  double amplitude = 0.6;
  double sample_rate = 48000.0;  // Hz
  std::size_t frame_len = 4800;  // samples

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  double bin_width() const { return sample_rate / static_cast<double>(frame_len); }
  /// DFT bin index of tone `k` (exact by the bin-alignment invariant).
  std::size_t bin(std::size_t k) const;
  std::size_t tone_count() const { return frequencies.size(); }
  double frame_seconds() const { return static_cast<double>(frame_len) / sample_rate; }
};

struct SampleBuffer {
  std::vector<double> samples;
  double sample_rate = 48000.0;
};

/// Tone magnitudes of every layer, layer-major, frequency-ascending.
struct FeatureVector {
  std::vector<double> magnitudes;
  int layer_count = 1;

  void validate(std::size_t tones_per_layer) const;
};

SampleBuffer synthesize_reference(const ToneSet& tones, std::size_t n_frames);

/// Reference signal with tone k scaled by gains[k], plus white Gaussian noise.
SampleBuffer synthesize_measured(const ToneSet& tones, std::span<const double> gains,
                                 double noise_sd, std::uint64_t seed, std::size_t n_frames);

/// Sinusoid amplitude 2|X[b]|/N at every tone bin of one frame (Goertzel).
std::vector<double> tone_magnitudes(std::span<const double> frame, double sample_rate,
                                    const ToneSet& tones);
std::vector<double> tone_magnitudes(const SampleBuffer& frame, const ToneSet& tones);

/// Consecutive non-overlapping frames; a trailing partial frame is dropped.
std::vector<SampleBuffer> frames(const SampleBuffer& buffer, const ToneSet& tones);

// Raw audio: headerless 32-bit little-endian float PCM, channels interleaved.

void write_pcm_f32(std::ostream& out, std::span<const double> interleaved);

/// Interleaves equal-length channel buffers sample by sample.
std::vector<double> interleave(std::span<const SampleBuffer> channels);

/// Pulls whole multi-channel frames from a PCM stream without reading ahead.
class PcmFrameReader {
 public:
  PcmFrameReader(std::istream& in, std::size_t channels, std::size_t frame_len, double sample_rate);

  /// Next complete frame, one buffer per channel; nullopt at end of stream.
  /// Throws InputError on non-finite samples.
  std::optional<std::vector<SampleBuffer>> next();

  /// Bytes left over after the last complete frame (set once next() returned nullopt).
  std::size_t trailing_bytes() const { return trailing_bytes_; }

 private:
  std::istream& in_;
  std::size_t channels_;
  std::size_t frame_len_;
  double sample_rate_;
  std::vector<char> raw_;
  std::size_t trailing_bytes_ = 0;
};

}  // namespace ast::signal
