#include "ast/bundle.hpp"

#include <fstream>
#include <sstream>

#include "ast/errors.hpp"
#include "ast/json_io.hpp"
#include "ast/util.hpp"

namespace ast::gp {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json model_to_json(const GPModel& m) {
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.x_raw().rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.x_raw().cols(); ++c) row.push_back(m.x_raw()(i, c));
    x.push_back(std::move(row));
  }
  std::vector<double> y(m.y_raw().data(), m.y_raw().data() + m.y_raw().size());
  std::vector<double> x_mean(m.x_mean().data(), m.x_mean().data() + m.x_mean().size());
  std::vector<double> x_sd(m.x_sd().data(), m.x_sd().data() + m.x_sd().size());
  return {{"target_name", m.target_name()},
          {"log_signal", m.hyper().log_signal},
          {"log_lengthscale", m.hyper().log_lengthscale},
          {"log_noise", m.hyper().log_noise},
          {"x_mean", x_mean},
          {"x_sd", x_sd},
          {"y_mean", m.y_mean()},
          {"y_sd", m.y_sd()},
          {"train_inputs", std::move(x)},
          {"train_targets", y}};
}

GPModel model_from_json(const nlohmann::json& j) {
  const auto rows = j.at("train_inputs");
  const auto targets = j.at("train_targets").get<std::vector<double>>();
  if (rows.empty() || rows.size() != targets.size())
    throw InputError("bundle model has inconsistent training data");
  const auto dim = rows.front().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw InputError("bundle model has ragged training inputs");
    for (std::size_t c = 0; c < dim; ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                              static_cast<Eigen::Index>(targets.size()));
  const HyperParams hyper{j.at("log_signal").get<double>(), j.at("log_lengthscale").get<double>(),
                          j.at("log_noise").get<double>()};
  GPModel m = GPModel::condition(x, y, hyper, j.at("target_name").get<std::string>());

  // Normalisation is recomputed from the raw data; it must agree with what was stored.
  const auto x_mean = j.at("x_mean").get<std::vector<double>>();
  const auto x_sd = j.at("x_sd").get<std::vector<double>>();
  bool same = x_mean.size() == dim && x_sd.size() == dim && j.at("y_mean").get<double>() == m.y_mean() &&
              j.at("y_sd").get<double>() == m.y_sd();
  for (std::size_t c = 0; same && c < dim; ++c)
    same = x_mean[c] == m.x_mean()(static_cast<Eigen::Index>(c)) &&
           x_sd[c] == m.x_sd()(static_cast<Eigen::Index>(c));
  if (!same) throw ProvenanceError("bundle model '" + m.target_name() + "' normalisation does not match its data");
  return m;
}

}  // namespace

std::string_view target_name(Target t) {
  switch (t) {
    case Target::force: return "force";
    case Target::diameter: return "diameter";
    case Target::loc_x: return "loc_x";
    case Target::loc_y: return "loc_y";
  }
  return "";
}

std::string_view target_label(Target t) {
  switch (t) {
    case Target::force: return "Force (N)";
    case Target::diameter: return "Peg diameter (mm)";
    case Target::loc_x: return "Location X (mm)";
    case Target::loc_y: return "Location Y (mm)";
  }
  return "";
}

double target_value(const calib::LabeledSample& s, Target t) {
  switch (t) {
    case Target::force: return s.force;
    case Target::diameter: return s.diameter;
    case Target::loc_x: return s.x;
    case Target::loc_y: return s.y;
  }
  return 0.0;
}

Eigen::MatrixXd feature_matrix(const std::vector<calib::LabeledSample>& samples) {
  if (samples.empty()) return {};
  const auto dim = samples.front().features.magnitudes.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& m = samples[i].features.magnitudes;
    if (m.size() != dim) throw InputError("samples have differing feature dimensionality");
    for (std::size_t c = 0; c < dim; ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = m[c];
  }
  return x;
}

Eigen::VectorXd target_vector(const std::vector<calib::LabeledSample>& samples, Target t) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y(static_cast<Eigen::Index>(i)) = target_value(samples[i], t);
  return y;
}

ModelBundle train_bundle(const calib::Dataset& dataset, const FitOptions& options) {
  const calib::Split parts = calib::split(dataset, options.seed);
  const Eigen::MatrixXd x_train = feature_matrix(parts.train);
  const Eigen::MatrixXd x_val = feature_matrix(parts.validation);

  ModelBundle b;
  b.skin = dataset.skin;
  b.protocol = dataset.protocol;
  b.tones = dataset.tones;
  b.skin_fingerprint = dataset.skin.fingerprint();
  b.dataset_fingerprint = dataset.fingerprint;
  b.seed = options.seed;
  b.restarts = options.restarts;
  for (Target t : kTargets) {
    const auto i = static_cast<std::size_t>(t);
    FitOptions per_target = options;
    per_target.seed = derive_seed(options.seed, 1000 + i);
    try {
      b.models[i] = fit(x_train, target_vector(parts.train, t), per_target, std::string(target_name(t)));
    } catch (const Error& e) {
      throw Error("fitting model '" + std::string(target_name(t)) + "' failed: " + e.what());
    }
    b.validation_rmse[i] = validate(b.models[i], x_val, target_vector(parts.validation, t));
  }
  return b;
}

std::vector<calib::LabeledSample> held_out_test(const ModelBundle& bundle, const calib::Dataset& dataset) {
  if (dataset.fingerprint != bundle.dataset_fingerprint)
    throw ProvenanceError("dataset fingerprint " + dataset.fingerprint +
                          " does not match the bundle's training dataset " + bundle.dataset_fingerprint);
  return calib::split(dataset, bundle.seed).test;
}

std::string bundle_to_json(const ModelBundle& b) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : b.models) models.push_back(model_to_json(m));
  nlohmann::json rmse = nlohmann::json::object();
  for (Target t : kTargets) rmse[std::string(target_name(t))] = b.validation_rmse[static_cast<std::size_t>(t)];
  const nlohmann::json j = {{"format", "ast-model-bundle"},
                            {"version", kFormatVersion},
                            {"kernel", "exponential"},
                            {"skin", b.skin},
                            {"skin_fingerprint", b.skin_fingerprint},
                            {"protocol", b.protocol},
                            {"tones", b.tones},
                            {"dataset_fingerprint", b.dataset_fingerprint},
                            {"seed", b.seed},
                            {"restarts", b.restarts},
                            {"validation_rmse", rmse},
                            {"models", models}};
  return j.dump() + "\n";
}

ModelBundle bundle_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed bundle: ") + e.what());
  }
  ModelBundle b;
  try {
    if (j.at("format").get<std::string>() != "ast-model-bundle" || j.at("version").get<int>() != kFormatVersion)
      throw InputError("unsupported bundle format");
    j.at("skin").get_to(b.skin);
    j.at("skin_fingerprint").get_to(b.skin_fingerprint);
    j.at("protocol").get_to(b.protocol);
    j.at("tones").get_to(b.tones);
    j.at("dataset_fingerprint").get_to(b.dataset_fingerprint);
    j.at("seed").get_to(b.seed);
    j.at("restarts").get_to(b.restarts);
    const auto& models = j.at("models");
    if (models.size() != kTargets.size()) throw InputError("bundle must hold exactly four models");
    for (Target t : kTargets) {
      const auto i = static_cast<std::size_t>(t);
      b.models[i] = model_from_json(models.at(i));
      if (b.models[i].target_name() != target_name(t))
        throw InputError("bundle model " + std::to_string(i) + " is not '" + std::string(target_name(t)) + "'");
      b.validation_rmse[i] = j.at("validation_rmse").at(std::string(target_name(t))).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("incomplete bundle: ") + e.what());
  }
  if (b.skin.fingerprint() != b.skin_fingerprint)
    throw ProvenanceError("bundle skin spec does not match its fingerprint");
  for (const auto& m : b.models)
    if (m.input_dim() != b.models[0].input_dim())
      throw InputError("bundle models disagree on input dimensionality");
  if (b.input_dim() != b.tones.tone_count() * static_cast<std::size_t>(b.skin.layer_count))
    throw InputError("bundle input dimensionality does not match its skin and tones");
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write bundle '" + path + "'");
  out << bundle_to_json(bundle);
  if (!out) throw IoError("failed writing bundle '" + path + "'");
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bundle '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return bundle_from_json(ss.str());
}

}  // namespace ast::gp
