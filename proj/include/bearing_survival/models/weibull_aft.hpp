#pragma once

// Weibull accelerated failure time model:
//   S(t | x) = exp(-(t / lambda(x))^k),  log lambda(x) = b0 + b . (x - mean)
// fitted by damped Newton on the right-censored log-likelihood with an L2
// penalty on b (not on the intercept or the shape). The shape is
// parameterized as k = exp(rho).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/models/common.hpp"
#include "bearing_survival/models/cox.hpp"

namespace bsurv::models {

struct WeibullOptions {
  double penalizer = 0.0;
  int max_iter = 200;
  double tol = 1e-8;
  int max_halvings = 20;
  std::optional<double> fixed_shape;  // hold k at this value instead of estimating it
};

struct WeibullAftModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double shape = 1.0;
  Eigen::VectorXd train_mean;
  FitDiagnostics diagnostics;

  std::size_t dimension() const { return static_cast<std::size_t>(coefficients.size()); }

  double log_scale(std::span<const double> x) const {
    require(x.size() == dimension(), ErrorCode::kDimensionMismatch,
            "expected " + std::to_string(dimension()) + " covariates, got " + std::to_string(x.size()));
    double mu = intercept;
    for (std::size_t k = 0; k < x.size(); ++k) {
      mu += coefficients[static_cast<Eigen::Index>(k)] * (x[k] - train_mean[static_cast<Eigen::Index>(k)]);
    }
    return mu;
  }

  double risk_score(std::span<const double> x) const { return -log_scale(x); }
};

struct WeibullObjective {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Penalized log-likelihood over theta = (b0, b, rho), or (b0, b) when the
/// shape is fixed. `x` must already be centered.
inline WeibullObjective weibull_objective(const Eigen::MatrixXd& x, std::span<const double> durations,
                                          std::span<const int> events, const Eigen::VectorXd& theta, double penalizer,
                                          std::optional<double> fixed_shape) {
  const Eigen::Index d = x.cols();
  const bool free_shape = !fixed_shape.has_value();
  const Eigen::Index p = d + 1 + (free_shape ? 1 : 0);
  const double rho = free_shape ? theta[d + 1] : std::log(*fixed_shape);
  const double k = std::exp(rho);

  WeibullObjective out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd z(d + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    z[0] = 1.0;
    z.tail(d) = x.row(i).transpose();
    const double mu = theta.head(d + 1).dot(z);
    const double y = std::log(durations[idx]);
    const double delta = events[idx];
    const double u = k * (y - mu);
    const double e = std::exp(u);
    out.value += delta * (rho - y + u) - e;

    const double g_mu = -k * (delta - e);
    const double h_mumu = -k * k * e;
    out.gradient.head(d + 1) += g_mu * z;
    out.hessian.topLeftCorner(d + 1, d + 1).selfadjointView<Eigen::Lower>().rankUpdate(z, h_mumu);
    if (free_shape) {
      const double g_rho = delta + (delta - e) * u;
      const double h_murho = -k * (delta - e) + k * u * e;
      const double h_rhorho = -u * u * e + (delta - e) * u;
      out.gradient[d + 1] += g_rho;
      out.hessian.row(d + 1).head(d + 1) += h_murho * z.transpose();
      out.hessian(d + 1, d + 1) += h_rhorho;
    }
  }
  // Mirror the lower-triangular accumulations.
  out.hessian.topLeftCorner(d + 1, d + 1) =
      Eigen::MatrixXd(out.hessian.topLeftCorner(d + 1, d + 1).selfadjointView<Eigen::Lower>());
  if (free_shape) out.hessian.col(d + 1).head(d + 1) = out.hessian.row(d + 1).head(d + 1).transpose();

  for (Eigen::Index j = 1; j <= d; ++j) {
    out.value -= penalizer * theta[j] * theta[j];
    out.gradient[j] -= 2.0 * penalizer * theta[j];
    out.hessian(j, j) -= 2.0 * penalizer;
  }
  return out;
}

namespace detail {

/// Newton ascent direction, shifted toward gradient ascent until -H + lambda*I
/// is positive definite.
inline Eigen::VectorXd damped_newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
  Eigen::MatrixXd a = -hessian;
  double lambda = 0.0;
  const double base = 1e-8 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(a + lambda * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    if (llt.info() == Eigen::Success) return llt.solve(gradient);
    lambda = lambda == 0.0 ? base : lambda * 10.0;
  }
  return gradient;
}

}  // namespace detail

inline WeibullAftModel fit_weibull_aft(const SurvivalData& data, const WeibullOptions& options = {}) {
  validate(data);
  require(options.penalizer >= 0.0, ErrorCode::kInvalidArgument, "Weibull AFT: penalizer must be >= 0");
  require(!options.fixed_shape || *options.fixed_shape > 0.0, ErrorCode::kInvalidArgument,
          "Weibull AFT: fixed shape must be positive");
  if (data.event_count() == 0) throw Error(ErrorCode::kNoEvents, "Weibull AFT needs at least one observed event");

  WeibullAftModel model;
  model.train_mean = data.x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.x.rowwise() - model.train_mean.transpose();
  const Eigen::Index d = centered.cols();
  const bool free_shape = !options.fixed_shape;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1 + (free_shape ? 1 : 0));
  double mean_log = 0.0;
  for (double t : data.durations) mean_log += std::log(t);
  theta[0] = mean_log / static_cast<double>(data.size());

  const auto evaluate = [&](const Eigen::VectorXd& th) {
    return weibull_objective(centered, data.durations, data.events, th, options.penalizer, options.fixed_shape);
  };
  WeibullObjective current = evaluate(theta);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (current.gradient.cwiseAbs().maxCoeff() < options.tol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd step = detail::damped_newton_direction(current.hessian, current.gradient);
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd candidate = theta + scale * step;
      WeibullObjective next = evaluate(candidate);
      if (std::isfinite(next.value) && next.value >= current.value - 1e-12 * std::abs(current.value)) {
        theta = candidate;
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  model.diagnostics = {iter, current.gradient.cwiseAbs().maxCoeff(), current.value};
  if (!converged) {
    throw Error(ErrorCode::kNonconvergence, "Weibull AFT stopped after " + std::to_string(iter) +
                                                " iterations with gradient norm " +
                                                io::format_double(model.diagnostics.gradient_norm));
  }
  model.intercept = theta[0];
  model.coefficients = theta.segment(1, d);
  model.shape = free_shape ? std::exp(theta[d + 1]) : *options.fixed_shape;
  return model;
}

inline SurvivalCurve predict_survival(const WeibullAftModel& model, std::span<const double> x,
                                      std::span<const double> times) {
  check_times(times);
  const double mu = model.log_scale(x);
  SurvivalCurve c;
  c.times.assign(times.begin(), times.end());
  for (double t : times) c.survival.push_back(t <= 0.0 ? 1.0 : std::exp(-std::exp(model.shape * (std::log(t) - mu))));
  return c;
}

}  // namespace bsurv::models
