#pragma once

// Calibration protocol: the 3x3 press grid, peg and depth sweeps, dataset
// assembly, CSV persistence and train/validation/test splitting.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ast/signal.hpp"
#include "ast/skinsim.hpp"

namespace ast::calib {

struct GridPoint {
  std::string label;
  double x = 0.0;  // mm
  double y = 0.0;  // mm
};

struct CalibrationGrid {
  std::vector<GridPoint> points;

  const GridPoint& at(const std::string& label) const;
  bool contains(double x, double y) const;
};

/// Points A-I at 3 mm spacing, in label order.
CalibrationGrid calibration_grid();

/// depth_step, 2*depth_step, ..., max_depth.
std::vector<double> depth_grid(const skin::SkinSpec& spec);

struct ProtocolSpec {
  CalibrationGrid grid = calibration_grid();
  std::vector<double> pegs{5.0, 7.0, 9.0};
  std::vector<double> depths;
  int frames_per_press = 20;
  double noise_sd = skin::kDefaultNoiseSd;
  std::uint64_t base_seed = 0;

  /// Default protocol with the depth sweep of `spec`.
  static ProtocolSpec for_skin(const skin::SkinSpec& spec);
  void validate(const skin::SkinSpec& spec) const;
};

struct LabeledSample {
  signal::FeatureVector features;
  double force = 0.0;     // N
  double diameter = 0.0;  // mm
  double x = 0.0;         // mm
  double y = 0.0;         // mm
  std::string point_id = "-";
  double depth = 0.0;     // mm
  int trial = 0;
  std::string skin = "single";
};

struct Dataset {
  std::vector<LabeledSample> samples;
  skin::SkinSpec skin;
  ProtocolSpec protocol;
  signal::ToneSet tones;
  std::string fingerprint;
  std::uint64_t seed = 0;

  std::size_t feature_dim() const;
};

/// Hash of the skin, protocol (including its seed) and tones.
std::string dataset_fingerprint(const skin::SkinSpec& spec, const ProtocolSpec& protocol,
                                const signal::ToneSet& tones);

/// Every (point, peg, depth, trial) press, in that nesting order.
Dataset generate_dataset(const skin::SkinSpec& spec, const ProtocolSpec& protocol,
                         const signal::ToneSet& tones);

/// Rounds every numeric field to what the CSV file stores (9 significant digits).
void round_to_csv_precision(Dataset& dataset);

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

/// Shuffled partition: test = round(0.1 n), validation = round(0.225 n), rest train.
SplitIndices split_indices(std::size_t n, std::uint64_t seed);

struct Split {
  std::vector<LabeledSample> train, validation, test;
};

Split split(const Dataset& dataset, std::uint64_t seed);

// Persistence: CSV body plus `<basename>.meta.json` sidecar.

std::string csv_header(int layer_count);
void write_csv(std::ostream& out, const Dataset& dataset);
/// Rows only; the returned dataset carries no skin/protocol metadata.
std::vector<LabeledSample> read_csv(std::istream& in);

std::string meta_path(const std::string& csv_path);
void save_dataset(const Dataset& dataset, const std::string& csv_path);
/// Loads CSV + sidecar; throws ProvenanceError if the sidecar fingerprint does not match.
Dataset load_dataset(const std::string& csv_path);

}  // namespace ast::calib
