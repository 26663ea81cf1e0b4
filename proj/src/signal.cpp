#include "ast/signal.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "ast/errors.hpp"

namespace ast::signal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

float load_f32_le(const char* p) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  float v = 0.0f;
  std::memcpy(&v, &bits, 4);
  return v;
}

void store_f32_le(char* p, float v) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &v, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  std::memcpy(p, &bits, 4);
}

// Phase of bin `b` at sample n, reduced exactly with integer arithmetic so
// every frame is sample-for-sample identical.
double tone_sample(std::size_t b, std::size_t n, std::size_t frame_len) {
  const std::size_t k = (b * (n % frame_len)) % frame_len;
  return std::sin(kTwoPi * static_cast<double>(k) / static_cast<double>(frame_len));
}

}  // namespace

void ToneSet::validate() const {
  if (frequencies.empty()) throw ConfigError("ToneSet: no frequencies");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ConfigError("ToneSet: amplitude must be > 0");
  if (frame_len == 0) throw ConfigError("ToneSet: frame_len must be > 0");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw ConfigError("ToneSet: sample_rate must be > 0");
  const double width = bin_width();
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    const double f = frequencies[k];
    if (!(f > 0.0) || !(f < sample_rate / 2.0))
      throw ConfigError("ToneSet: frequency " + std::to_string(f) + " Hz outside (0, fs/2)");
    if (k > 0 && !(f > frequencies[k - 1]))
      throw ConfigError("ToneSet: frequencies must be strictly increasing");
    const double b = f / width;
    if (std::abs(b - std::round(b)) > 1e-9)
      throw ConfigError("ToneSet: frequency " + std::to_string(f) +
                        " Hz is not a multiple of the bin width " + std::to_string(width) + " Hz");
  }
}

std::size_t ToneSet::bin(std::size_t k) const {
  return static_cast<std::size_t>(std::llround(frequencies.at(k) / bin_width()));
}

void FeatureVector::validate(std::size_t tones_per_layer) const {
  if (layer_count != 1 && layer_count != 2)
    throw InputError("FeatureVector: layer_count must be 1 or 2");
  if (magnitudes.size() != tones_per_layer * static_cast<std::size_t>(layer_count))
    throw InputError("FeatureVector: length does not match layer_count");
  for (double m : magnitudes)
    if (!std::isfinite(m) || m < 0.0) throw InputError("FeatureVector: invalid magnitude");
}

SampleBuffer synthesize_reference(const ToneSet& tones, std::size_t n_frames) {
  const std::vector<double> unity(tones.tone_count(), 1.0);
  return synthesize_measured(tones, unity, 0.0, 0, n_frames);
}

SampleBuffer synthesize_measured(const ToneSet& tones, std::span<const double> gains,
                                 double noise_sd, std::uint64_t seed, std::size_t n_frames) {
  tones.validate();
  if (n_frames == 0) throw ConfigError("synthesize: n_frames must be >= 1");
  if (gains.size() != tones.tone_count())
    throw DomainError("synthesize: expected " + std::to_string(tones.tone_count()) + " gains");
  for (double g : gains)
    if (!(g >= 0.0 && g <= 1.0)) throw DomainError("synthesize: gain outside [0, 1]");
  if (!(noise_sd >= 0.0)) throw DomainError("synthesize: noise_sd must be >= 0");

  const std::size_t n = n_frames * tones.frame_len;
  SampleBuffer out{std::vector<double>(n, 0.0), tones.sample_rate};

  // One period is a frame; synthesize it once and tile.
  std::vector<double> period(tones.frame_len, 0.0);
  for (std::size_t k = 0; k < tones.tone_count(); ++k) {
    const double a = gains[k] * tones.amplitude;
    if (a == 0.0) continue;
    const std::size_t b = tones.bin(k);
    for (std::size_t i = 0; i < tones.frame_len; ++i) period[i] += a * tone_sample(b, i, tones.frame_len);
  }
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = period[i % tones.frame_len];

  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (double& s : out.samples) s += noise(rng);
  }
  return out;
}

std::vector<double> tone_magnitudes(std::span<const double> frame, double sample_rate,
                                    const ToneSet& tones) {
  if (frame.size() != tones.frame_len)
    throw InputError("tone_magnitudes: frame has " + std::to_string(frame.size()) +
                     " samples, expected " + std::to_string(tones.frame_len));
  if (sample_rate != tones.sample_rate)
    throw InputError("tone_magnitudes: sample rate mismatch");

  const double n = static_cast<double>(tones.frame_len);
  std::vector<double> out(tones.tone_count());
  for (std::size_t k = 0; k < tones.tone_count(); ++k) {
    const double w = kTwoPi * static_cast<double>(tones.bin(k)) / n;
    const double coeff = 2.0 * std::cos(w);
    double s1 = 0.0, s2 = 0.0;
    for (double x : frame) {
      const double s0 = x + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    // X[b] = s1 - e^{-iw} s2 (up to a unit-modulus phase factor).
    const double re = s1 - std::cos(w) * s2;
    const double im = std::sin(w) * s2;
    out[k] = 2.0 * std::hypot(re, im) / n;
  }
  return out;
}

std::vector<double> tone_magnitudes(const SampleBuffer& frame, const ToneSet& tones) {
  return tone_magnitudes(frame.samples, frame.sample_rate, tones);
}

std::vector<SampleBuffer> frames(const SampleBuffer& buffer, const ToneSet& tones) {
  std::vector<SampleBuffer> out;
  if (tones.frame_len == 0) return out;
  const std::size_t count = buffer.samples.size() / tones.frame_len;
  out.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    auto first = buffer.samples.begin() + static_cast<std::ptrdiff_t>(f * tones.frame_len);
    out.push_back({std::vector<double>(first, first + static_cast<std::ptrdiff_t>(tones.frame_len)),
                   buffer.sample_rate});
  }
  return out;
}

void write_pcm_f32(std::ostream& out, std::span<const double> interleaved) {
  std::vector<char> raw(interleaved.size() * 4);
  for (std::size_t i = 0; i < interleaved.size(); ++i)
    store_f32_le(raw.data() + 4 * i, static_cast<float>(interleaved[i]));
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write_pcm_f32: stream write failed");
}

std::vector<double> interleave(std::span<const SampleBuffer> channels) {
  if (channels.empty()) return {};
  const std::size_t n = channels.front().samples.size();
  for (const auto& c : channels)
    if (c.samples.size() != n) throw InputError("interleave: channel lengths differ");
  std::vector<double> out(n * channels.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < channels.size(); ++c) out[i * channels.size() + c] = channels[c].samples[i];
  return out;
}

PcmFrameReader::PcmFrameReader(std::istream& in, std::size_t channels, std::size_t frame_len,
                               double sample_rate)
    : in_(in), channels_(channels), frame_len_(frame_len), sample_rate_(sample_rate),
      raw_(channels * frame_len * 4) {
  if (channels == 0 || frame_len == 0) throw InputError("PcmFrameReader: empty frame shape");
}

std::optional<std::vector<SampleBuffer>> PcmFrameReader::next() {
  in_.read(raw_.data(), static_cast<std::streamsize>(raw_.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got < raw_.size()) {
    trailing_bytes_ = got;
    return std::nullopt;
  }
  std::vector<SampleBuffer> out(channels_, SampleBuffer{std::vector<double>(frame_len_), sample_rate_});
  for (std::size_t i = 0; i < frame_len_; ++i) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const float v = load_f32_le(raw_.data() + 4 * (i * channels_ + c));
      if (!std::isfinite(v)) throw InputError("PCM stream contains a non-finite sample");
      out[c].samples[i] = v;
    }
  }
  return out;
}

}  // namespace ast::signal
