#pragma once

// The four per-feature GP models trained from one calibration dataset.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ast/calib.hpp"
#include "ast/gpr.hpp"

namespace ast::gp {

enum class Target { force = 0, diameter = 1, loc_x = 2, loc_y = 3 };

inline constexpr std::array<Target, 4> kTargets{Target::force, Target::diameter, Target::loc_x,
                                                Target::loc_y};

/// force | diameter | loc_x | loc_y
std::string_view target_name(Target t);
/// Row label used in printed summaries, e.g. "Force (N)".
std::string_view target_label(Target t);
double target_value(const calib::LabeledSample& s, Target t);

struct ModelBundle {
  std::array<GPModel, 4> models;
  skin::SkinSpec skin;
  calib::ProtocolSpec protocol;
  signal::ToneSet tones;
  std::string skin_fingerprint;
  std::string dataset_fingerprint;
  std::uint64_t seed = 0;  // split and optimiser seed
  int restarts = 0;
  std::array<double, 4> validation_rmse{};

  const GPModel& model(Target t) const { return models[static_cast<std::size_t>(t)]; }
  std::size_t input_dim() const { return models[0].input_dim(); }
};

Eigen::MatrixXd feature_matrix(const std::vector<calib::LabeledSample>& samples);
Eigen::VectorXd target_vector(const std::vector<calib::LabeledSample>& samples, Target t);

/// Splits `dataset` with `options.seed`, fits one model per target on the
/// training part and scores each on the validation part.
ModelBundle train_bundle(const calib::Dataset& dataset, const FitOptions& options);

/// The held-out test part of the dataset a bundle was trained on.
std::vector<calib::LabeledSample> held_out_test(const ModelBundle& bundle, const calib::Dataset& dataset);

std::string bundle_to_json(const ModelBundle& bundle);
/// Parses and re-factorises every model.
ModelBundle bundle_from_json(const std::string& text);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace ast::gp
