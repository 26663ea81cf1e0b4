#pragma once

// Exact Gaussian process regression with the isotropic exponential kernel
// k(x, x') = sf^2 exp(-|x - x'| / l) and Gaussian observation noise sn^2.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ast::gp {

struct HyperParams {
  double log_signal = 0.0;
  double log_lengthscale = 0.0;
  double log_noise = -2.0;

  double signal() const;
  double lengthscale() const;
  double noise() const;

  std::array<double, 3> as_array() const { return {log_signal, log_lengthscale, log_noise}; }
  static HyperParams from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
};

double kernel(std::span<const double> x1, std::span<const double> x2, const HyperParams& hyper);

/// Euclidean distances between the rows of `a` and `b`.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& distances, const HyperParams& hyper);

/// Lower Cholesky factor with the escalating-jitter policy.
struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Factorises `k` in place of a copy. Tries no jitter, then 1e-10, 1e-9, 1e-8
/// times the mean diagonal; throws ConditioningError after that.
Factorization factorize(const Eigen::MatrixXd& k);

struct Evidence {
  double value = 0.0;
  /// d value / d (log_signal, log_lengthscale, log_noise).
  std::array<double, 3> gradient{};
  double jitter = 0.0;
};

Evidence log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const HyperParams& hyper, bool with_gradient = true);

/// Same, for a precomputed distance matrix of the inputs.
Evidence log_marginal_likelihood_from_distances(const Eigen::MatrixXd& distances,
                                                const Eigen::VectorXd& y, const HyperParams& hyper,
                                                bool with_gradient = true);

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;           // includes observation noise
  double latent_var = 0.0;   // variance of the latent function, raw units
};

class GPModel {
 public:
  GPModel() = default;

  /// Normalises the raw data and factorises K + sn^2 I for fixed hyperparameters.
  static GPModel condition(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                           const HyperParams& hyper, std::string target_name);

  Prediction predict(std::span<const double> x_raw) const;
  std::vector<Prediction> predict(const Eigen::MatrixXd& x_raw) const;

  const HyperParams& hyper() const { return hyper_; }
  const std::string& target_name() const { return target_name_; }
  const Eigen::MatrixXd& x_raw() const { return x_raw_; }
  const Eigen::VectorXd& y_raw() const { return y_raw_; }
  const Eigen::MatrixXd& x_normalized() const { return x_; }
  const Eigen::VectorXd& y_normalized() const { return y_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::RowVectorXd& x_mean() const { return x_mean_; }
  const Eigen::RowVectorXd& x_sd() const { return x_sd_; }
  double y_mean() const { return y_mean_; }
  double y_sd() const { return y_sd_; }
  double jitter() const { return jitter_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(x_raw_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(x_raw_.rows()); }

 private:
  HyperParams hyper_;
  std::string target_name_;
  Eigen::MatrixXd x_raw_;
  Eigen::VectorXd y_raw_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  Eigen::RowVectorXd x_mean_;
  Eigen::RowVectorXd x_sd_;
  double y_mean_ = 0.0;
  double y_sd_ = 1.0;
  double jitter_ = 0.0;
};

struct FitOptions {
  int restarts = 8;
  int max_iters = 200;
  std::uint64_t seed = 0;
  /// Hyperparameters are optimised on a random subset of at most this many
  /// training points; the returned model is conditioned on all of them.
  std::size_t opt_subset = 400;
};

/// Log-space box the optimiser is confined to (normalised units).
struct HyperBounds {
  static constexpr std::array<double, 3> lower{-6.0, -6.0, -12.0};
  static constexpr std::array<double, 3> upper{6.0, 8.0, 2.0};
};

struct OptimizationTrace {
  int restart = -1;
  int iterations = 0;
  double value = 0.0;
};

/// Multi-start gradient ascent on the log marginal likelihood, then `condition`.
GPModel fit(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw, const FitOptions& options,
            std::string target_name, OptimizationTrace* trace = nullptr);

/// Root-mean-square error of predictive means, raw units.
double validate(const GPModel& model, const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw);

}  // namespace ast::gp
