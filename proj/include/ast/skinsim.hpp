#pragma once

// Phenomenological model of an acoustic soft tactile skin: serpentine channel
// geometry, indentation-driven constriction, per-tone transmission and the
// normal-force law.

#include <cstdint>
#include <string>
#include <vector>

#include "ast/signal.hpp"

namespace ast::skin {

/// Geometry and model constants of a single- or bi-layer skin. Lengths in mm.
struct SkinSpec {
  int layer_count = 1;
  double side = 25.0;
  double channel_diameter = 3.0;
  int runs_per_layer = 3;
  std::vector<double> run_offsets{5.0, 12.5, 20.0};
  double layer_depth_capacity = 3.0;
  double max_depth = 3.0;
  double depth_step = 0.5;
  double force_exponent = 1.2;
  double attenuation = 0.35;
  double frequency_exponent = 0.5;
  double resonance_strength = 0.4;
  double effective_speed = 34.3;  // m/s
  double decay_length = 2.0;
  double path_step = 0.25;
  double load_spread = 4.0;
  double min_open_ratio = 0.02;

  static SkinSpec single();
  static SkinSpec bilayer();

  void validate() const;
  /// "single" or "bilayer".
  std::string name() const { return layer_count == 2 ? "bilayer" : "single"; }

  /// Flat `key = value` text, one field per line, keys equal to the field names.
  std::string to_config() const;
  /// Parses `to_config` text. Missing keys take the preset for the given layer_count.
  static SkinSpec from_config(const std::string& text);
  static SkinSpec load(const std::string& path);
  static SkinSpec preset(const std::string& name);

  /// Stable hash of every field.
  std::string fingerprint() const;
};

struct Peg {
  double diameter = 5.0;  // mm
};

struct ContactState {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
  Peg peg;
};

/// Throws DomainError unless the depth and the peg footprint are inside the skin.
void validate_contact(const SkinSpec& spec, const ContactState& contact);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct ChannelPath {
  int layer_index = 1;
  std::vector<Point> polyline;
  std::vector<double> arclength;
  double step = 0.25;
};

/// Polyline vertices (corners) of the serpentine channel of `layer_index`.
std::vector<Point> channel_vertices(const SkinSpec& spec, int layer_index);

/// One sampled path per layer.
std::vector<ChannelPath> channel_layout(const SkinSpec& spec);

/// Peg travel carried by each layer (mm).
std::vector<double> layer_compressions(const SkinSpec& spec, const ContactState& contact);

struct Constriction {
  double loss = 0.0;      // C, accumulated open-area loss along the path (mm)
  double centroid = 0.0;  // arclength position of the loss (mm)
};

Constriction constriction(const SkinSpec& spec, const ChannelPath& path, const ContactState& contact);

/// Per-layer, per-tone gains in (0, 1].
std::vector<std::vector<double>> transmission(const SkinSpec& spec, const ContactState& contact,
                                              const signal::ToneSet& tones);
/// Same, with a precomputed layout.
std::vector<std::vector<double>> transmission(const SkinSpec& spec,
                                              const std::vector<ChannelPath>& layout,
                                              const ContactState& contact,
                                              const signal::ToneSet& tones);

/// Force at full travel for a peg of diameter d (N).
double max_force(const SkinSpec& spec, const Peg& peg);
double true_force(const SkinSpec& spec, const ContactState& contact);
/// Depth realising `target_force`. Throws DomainError above max_force.
double invert_force(const SkinSpec& spec, const Peg& peg, double target_force);

constexpr double kDefaultNoiseSd = 0.005;

/// Noisy tone magnitudes the microphone would report for `contact`.
signal::FeatureVector sense(const SkinSpec& spec, const ContactState& contact,
                            const signal::ToneSet& tones, double noise_sd, std::uint64_t seed);
signal::FeatureVector sense(const SkinSpec& spec, const std::vector<ChannelPath>& layout,
                            const ContactState& contact, const signal::ToneSet& tones,
                            double noise_sd, std::uint64_t seed);

}  // namespace ast::skin
