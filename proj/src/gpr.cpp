#include "ast/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "ast/errors.hpp"
#include "ast/util.hpp"

namespace ast::gp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // ln(2 pi)
constexpr std::array<double, 3> kJitterScales{1e-10, 1e-9, 1e-8};

std::array<double, 3> project(std::array<double, 3> t) {
  for (std::size_t i = 0; i < 3; ++i)
    t[i] = std::clamp(t[i], HyperBounds::lower[i], HyperBounds::upper[i]);
  return t;
}

std::optional<Evidence> try_evidence(const Eigen::MatrixXd& distances, const Eigen::VectorXd& y,
                                     const std::array<double, 3>& theta, bool with_gradient) {
  try {
    Evidence ev = log_marginal_likelihood_from_distances(distances, y, HyperParams::from_array(theta),
                                                         with_gradient);
    if (!std::isfinite(ev.value)) return std::nullopt;
    return ev;
  } catch (const ConditioningError&) {
    return std::nullopt;
  }
}

struct Ascent {
  std::array<double, 3> theta{};
  double value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok = false;
};

// Normalised-gradient ascent with Armijo backtracking inside the bounding box.
// Trial points are scored by value only; the gradient is taken at accepted points.
Ascent ascend(const Eigen::MatrixXd& distances, const Eigen::VectorXd& y, std::array<double, 3> theta,
              int max_iters) {
  Ascent out;
  theta = project(theta);
  auto ev = try_evidence(distances, y, theta, true);
  if (!ev) return out;

  double step = 0.5;
  int it = 0;
  for (; it < max_iters; ++it) {
    const auto g = ev->gradient;
    const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (!(gnorm > 1e-10)) break;

    bool accepted = false;
    std::array<double, 3> cand{};
    double cand_value = 0.0;
    while (step > 1e-10) {
      for (std::size_t i = 0; i < 3; ++i) cand[i] = theta[i] + step * g[i] / gnorm;
      cand = project(cand);
      double ascent = 0.0;
      for (std::size_t i = 0; i < 3; ++i) ascent += g[i] * (cand[i] - theta[i]);
      const auto trial = try_evidence(distances, y, cand, false);
      if (trial && trial->value >= ev->value + 1e-4 * ascent) {
        accepted = true;
        cand_value = trial->value;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double gain = cand_value - ev->value;
    theta = cand;
    if (gain <= 1e-6 * std::max(1.0, std::abs(cand_value))) {
      ev->value = cand_value;
      ++it;
      break;
    }
    auto next = try_evidence(distances, y, theta, true);
    if (!next) break;
    ev = next;
    step = std::min(2.0 * step, 2.0);
  }
  out.theta = theta;
  out.value = ev->value;
  out.iterations = it;
  out.ok = true;
  return out;
}

struct Scaling {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd x_sd;
  double y_mean = 0.0;
  double y_sd = 1.0;
};

// Per-column z-score of the inputs and z-score of the targets (population sd).
// A constant target keeps unit scale.
Scaling compute_scaling(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw) {
  if (!x_raw.allFinite()) throw InputError("GP inputs contain non-finite values");
  if (!y_raw.allFinite()) throw InputError("GP targets contain non-finite values");
  const double n = static_cast<double>(x_raw.rows());
  Scaling s;
  s.x_mean = x_raw.colwise().mean();
  s.x_sd = ((x_raw.rowwise() - s.x_mean).array().square().colwise().sum() / n).sqrt().matrix();
  for (Eigen::Index c = 0; c < s.x_sd.size(); ++c)
    if (!(s.x_sd(c) > 0.0))
      throw InputError("input column " + std::to_string(c) +
                       " has zero variance; drop it before fitting");
  s.y_mean = y_raw.mean();
  const double y_sd = std::sqrt((y_raw.array() - s.y_mean).square().sum() / n);
  s.y_sd = y_sd > 0.0 ? y_sd : 1.0;
  return s;
}

Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& x_raw, const Scaling& s) {
  return (x_raw.rowwise() - s.x_mean).array().rowwise() / s.x_sd.array();
}

Eigen::VectorXd scale_targets(const Eigen::VectorXd& y_raw, const Scaling& s) {
  return (y_raw.array() - s.y_mean) / s.y_sd;
}

}  // namespace

double HyperParams::signal() const { return std::exp(log_signal); }
double HyperParams::lengthscale() const { return std::exp(log_lengthscale); }
double HyperParams::noise() const { return std::exp(log_noise); }

double kernel(std::span<const double> x1, std::span<const double> x2, const HyperParams& hyper) {
  if (x1.size() != x2.size()) throw InputError("kernel: dimensionality mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double d = x1[i] - x2[i];
    sq += d * d;
  }
  const double sf = hyper.signal();
  return sf * sf * std::exp(-std::sqrt(sq) / hyper.lengthscale());
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw InputError("pairwise_distances: dimensionality mismatch");
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double sq = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double diff = a(i, k) - b(j, k);
        sq += diff * diff;
      }
      d(i, j) = std::sqrt(sq);
    }
  }
  return d;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& distances, const HyperParams& hyper) {
  const double sf2 = std::exp(2.0 * hyper.log_signal);
  const double inv_l = std::exp(-hyper.log_lengthscale);
  return sf2 * (-inv_l * distances.array()).exp().matrix();
}

Factorization factorize(const Eigen::MatrixXd& k) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  const double mean_diag = k.diagonal().mean();
  double jitter = 0.0;
  for (double scale : kJitterScales) {
    jitter = scale * mean_diag;
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  throw ConditioningError("Cholesky failed with jitter up to " + format_sig(jitter, 3) +
                          " (" + format_sig(kJitterScales.back(), 1) + " x mean diagonal)");
}

Evidence log_marginal_likelihood_from_distances(const Eigen::MatrixXd& distances,
                                                const Eigen::VectorXd& y, const HyperParams& hyper,
                                                bool with_gradient) {
  const auto n = y.size();
  if (n < 1) throw InputError("log_marginal_likelihood: no data");
  if (distances.rows() != n || distances.cols() != n)
    throw InputError("log_marginal_likelihood: distance matrix shape mismatch");

  const Eigen::MatrixXd k = kernel_matrix(distances, hyper);
  const double sn2 = std::exp(2.0 * hyper.log_noise);
  Eigen::MatrixXd ky = k;
  ky.diagonal().array() += sn2;
  const Factorization f = factorize(ky);
  const auto lower = f.lower.triangularView<Eigen::Lower>();

  Eigen::VectorXd alpha = lower.solve(y);
  f.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);

  Evidence ev;
  ev.jitter = f.jitter;
  ev.value = -0.5 * y.dot(alpha) - f.lower.diagonal().array().log().sum() -
             0.5 * static_cast<double>(n) * kLogTwoPi;
  if (!with_gradient) return ev;

  // d/dtheta = 1/2 tr((alpha alpha^T - Ky^-1) dKy/dtheta), with
  // dK/dlog_signal = 2K, dK/dlog_lengthscale = K o D / l, dKy/dlog_noise = 2 sn^2 I.
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  lower.solveInPlace(linv);
  Eigen::MatrixXd ky_inv = Eigen::MatrixXd::Zero(n, n);
  ky_inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  const double trace_inv = ky_inv.trace();

  // tr(Ky^-1 K) = n - sn^2 tr(Ky^-1) (jitter ignored)
  const double inv_l = std::exp(-hyper.log_lengthscale);
  const Eigen::MatrixXd kd = k.cwiseProduct(distances);
  double tr_inv_kd = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    tr_inv_kd += ky_inv(j, j) * kd(j, j);
    tr_inv_kd += 2.0 * ky_inv.col(j).tail(n - j - 1).dot(kd.col(j).tail(n - j - 1));
  }
  const double quad_k = alpha.dot(k * alpha);
  const double quad_kd = alpha.dot(kd * alpha);
  ev.gradient[0] = quad_k - (static_cast<double>(n) - (sn2 + f.jitter) * trace_inv);
  ev.gradient[1] = 0.5 * (quad_kd - tr_inv_kd) * inv_l;
  ev.gradient[2] = sn2 * (alpha.squaredNorm() - trace_inv);
  return ev;
}

Evidence log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const HyperParams& hyper, bool with_gradient) {
  if (x.rows() != y.size()) throw InputError("log_marginal_likelihood: X/y size mismatch");
  return log_marginal_likelihood_from_distances(pairwise_distances(x, x), y, hyper, with_gradient);
}

GPModel GPModel::condition(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                           const HyperParams& hyper, std::string target_name) {
  if (x_raw.rows() < 1) throw InputError("GP needs at least one training point");
  if (x_raw.rows() != y_raw.size()) throw InputError("GP: X/y size mismatch");
  const Scaling s = compute_scaling(x_raw, y_raw);

  GPModel m;
  m.hyper_ = hyper;
  m.target_name_ = std::move(target_name);
  m.x_raw_ = x_raw;
  m.y_raw_ = y_raw;
  m.x_mean_ = s.x_mean;
  m.x_sd_ = s.x_sd;
  m.y_mean_ = s.y_mean;
  m.y_sd_ = s.y_sd;
  m.x_ = scale_inputs(x_raw, s);
  m.y_ = scale_targets(y_raw, s);

  Eigen::MatrixXd ky = kernel_matrix(pairwise_distances(m.x_, m.x_), hyper);
  ky.diagonal().array() += std::exp(2.0 * hyper.log_noise);
  Factorization f = factorize(ky);
  m.chol_ = std::move(f.lower);
  m.jitter_ = f.jitter;
  const auto lower = m.chol_.triangularView<Eigen::Lower>();
  m.alpha_ = lower.solve(m.y_);
  m.chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha_);
  return m;
}

Prediction GPModel::predict(std::span<const double> x_raw) const {
  if (x_raw.size() != input_dim())
    throw InputError("predict: expected " + std::to_string(input_dim()) + " inputs, got " +
                     std::to_string(x_raw.size()));
  Eigen::RowVectorXd xn(x_raw.size());
  for (std::size_t i = 0; i < x_raw.size(); ++i)
    xn(static_cast<Eigen::Index>(i)) = (x_raw[i] - x_mean_(static_cast<Eigen::Index>(i))) /
                                       x_sd_(static_cast<Eigen::Index>(i));

  const double sf2 = std::exp(2.0 * hyper_.log_signal);
  const double inv_l = std::exp(-hyper_.log_lengthscale);
  const Eigen::VectorXd dist = (x_.rowwise() - xn).rowwise().norm();
  const Eigen::VectorXd kstar = sf2 * (-inv_l * dist.array()).exp();

  Prediction p;
  p.mean = y_mean_ + y_sd_ * kstar.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kstar);
  const double latent = std::max(0.0, sf2 - v.squaredNorm());
  const double sn = std::exp(hyper_.log_noise);
  p.latent_var = y_sd_ * y_sd_ * latent;
  p.sd = std::sqrt(std::max(0.0, p.latent_var + sn * sn * y_sd_ * y_sd_));
  return p;
}

std::vector<Prediction> GPModel::predict(const Eigen::MatrixXd& x_raw) const {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x_raw.rows()));
  std::vector<double> row(static_cast<std::size_t>(x_raw.cols()));
  for (Eigen::Index i = 0; i < x_raw.rows(); ++i) {
    for (Eigen::Index c = 0; c < x_raw.cols(); ++c) row[static_cast<std::size_t>(c)] = x_raw(i, c);
    out.push_back(predict(row));
  }
  return out;
}

GPModel fit(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw, const FitOptions& options,
            std::string target_name, OptimizationTrace* trace) {
  if (x_raw.rows() < 2) throw InputError("fit needs at least two training points");
  if (options.restarts < 1) throw ConfigError("fit: restarts must be >= 1");
  if (x_raw.rows() != y_raw.size()) throw InputError("fit: X/y size mismatch");
  const Scaling scaling = compute_scaling(x_raw, y_raw);
  const Eigen::MatrixXd xn = scale_inputs(x_raw, scaling);
  const Eigen::VectorXd yn = scale_targets(y_raw, scaling);

  const auto n = static_cast<std::size_t>(x_raw.rows());

  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  if (options.opt_subset > 0 && n > options.opt_subset) {
    std::mt19937_64 rng(derive_seed(options.seed, ~0ULL));
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(options.opt_subset);
    std::sort(rows.begin(), rows.end());
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd xs(m, xn.cols());
  Eigen::VectorXd ys(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    xs.row(i) = xn.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    ys(i) = yn(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
  }
  const Eigen::MatrixXd dist = pairwise_distances(xs, xs);

  const double sqrt_d = std::sqrt(static_cast<double>(xn.cols()));
  Ascent best;
  int best_restart = -1;
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> u_signal(-2.0, 2.0);
    std::uniform_real_distribution<double> u_length(std::log(0.1 * sqrt_d), std::log(10.0 * sqrt_d));
    std::uniform_real_distribution<double> u_noise(-6.0, 0.0);
    std::array<double, 3> init{};
    init[0] = u_signal(rng);
    init[1] = u_length(rng);
    init[2] = u_noise(rng);
    const Ascent a = ascend(dist, ys, init, options.max_iters);
    if (a.ok && a.value > best.value) {
      best = a;
      best_restart = r;
    }
  }
  if (best_restart < 0)
    throw ConditioningError("fit '" + target_name + "': every restart failed to factorise");
  if (trace) *trace = {best_restart, best.iterations, best.value};
  return GPModel::condition(x_raw, y_raw, HyperParams::from_array(best.theta), std::move(target_name));
}

double validate(const GPModel& model, const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw) {
  if (x_raw.rows() < 1) throw InputError("validate: no samples");
  if (x_raw.rows() != y_raw.size()) throw InputError("validate: X/y size mismatch");
  const auto preds = model.predict(x_raw);
  double sq = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i].mean - y_raw(static_cast<Eigen::Index>(i));
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(preds.size()));
}

}  // namespace ast::gp
