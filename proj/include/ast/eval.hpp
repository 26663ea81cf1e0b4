#pragma once

// Error statistics and report generation for trained bundles: held-out
// calibration error and the fixed-force real-time press protocol.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ast/bundle.hpp"
#include "ast/calib.hpp"

namespace ast::eval {

struct TactileEstimate {
  double force = 0.0;     // N
  double diameter = 0.0;  // mm
  double x = 0.0;         // mm
  double y = 0.0;         // mm
  std::array<double, 4> sd{};  // force, diameter, x, y

  double value(gp::Target t) const;
};

TactileEstimate estimate(const gp::ModelBundle& bundle, std::span<const double> features);

struct ErrorStats {
  double mae = 0.0;
  double stdev = 0.0;  // population sd of |error|
};

ErrorStats mae(std::span<const double> predictions, std::span<const double> truths);

struct GroupStats {
  std::string point_id;
  std::optional<double> x, y, peg;  // empty for pooled groups
  std::array<ErrorStats, 4> errors;  // indexed by gp::Target
  std::size_t trials = 0;
};

struct EvalReport {
  std::string skin;
  std::vector<GroupStats> groups;
};

/// Pooled errors of `samples` (one group labelled `label`).
EvalReport report_on_samples(const gp::ModelBundle& bundle, const std::vector<calib::LabeledSample>& samples,
                             const std::string& label);

/// Held-out test error of the bundle on the dataset it was trained from.
/// Throws ProvenanceError when the dataset is not that dataset.
EvalReport calibration_report(const gp::ModelBundle& bundle, const calib::Dataset& dataset);

struct RealtimeOptions {
  std::vector<calib::GridPoint> points = default_points();
  std::vector<double> pegs{5.0, 7.0, 9.0};
  double force = 3.0;
  int trials = 15;
  std::uint64_t seed = 0;
  double noise_sd = skin::kDefaultNoiseSd;

  /// D and F (calibrated), J(13,14) and K(10,12) (between grid points).
  static std::vector<calib::GridPoint> default_points();
};

/// Presses every point with every peg at `force`, `trials` times, grouped by (point, peg).
EvalReport realtime_protocol(const gp::ModelBundle& bundle, const RealtimeOptions& options);

enum class ReportFormat { csv, markdown };

enum class EmitStatus { ok, empty };

std::string report_csv_header();
std::string report_csv(const EvalReport& report);
/// Same table as the CSV, values at three decimals.
std::string report_markdown(const EvalReport& report);
/// Four response rows with MAE and STDEV columns.
std::string calibration_table(const GroupStats& group);

/// Writes the report; an empty report yields a header-only file and EmitStatus::empty.
EmitStatus emit_report(const EvalReport& report, ReportFormat format, const std::string& path);

}  // namespace ast::eval
