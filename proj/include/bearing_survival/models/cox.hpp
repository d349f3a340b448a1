#pragma once

// Cox proportional hazards fitted by damped Newton on the Breslow partial
// log-likelihood.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/models/common.hpp"

namespace bsurv::models {

struct CoxOptions {
  int max_iter = 100;
  double tol = 1e-7;          // on the gradient infinity-norm
  double beta_bound = 1e3;    // |beta| beyond this is reported as monotone likelihood
  int max_halvings = 20;
};

struct FitDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;
};

struct CoxModel {
  Eigen::VectorXd beta;
  Eigen::VectorXd train_mean;
  BaselineHazard baseline;
  FitDiagnostics diagnostics;

  std::size_t dimension() const { return static_cast<std::size_t>(beta.size()); }

  double linear_predictor(std::span<const double> x) const {
    require(x.size() == dimension(), ErrorCode::kDimensionMismatch,
            "expected " + std::to_string(dimension()) + " covariates, got " + std::to_string(x.size()));
    double eta = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      eta += beta[static_cast<Eigen::Index>(k)] * (x[k] - train_mean[static_cast<Eigen::Index>(k)]);
    }
    return eta;
  }

  double risk_score(std::span<const double> x) const { return linear_predictor(x); }
};

struct CoxLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Risk-set bookkeeping shared across likelihood evaluations: records sorted
/// by decreasing duration and grouped by tied times.
class CoxProblem {
 public:
  CoxProblem(Eigen::MatrixXd x, std::vector<double> durations, std::vector<int> events)
      : x_(std::move(x)), rows_(x_), durations_(std::move(durations)), events_(std::move(events)) {
    const std::size_t n = durations_.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return durations_[a] > durations_[b]; });
    for (std::size_t k = 0; k < n;) {
      std::size_t j = k;
      while (j < n && durations_[order_[j]] == durations_[order_[k]]) ++j;
      double deaths = 0.0;
      for (std::size_t m = k; m < j; ++m) deaths += events_[order_[m]] ? 1.0 : 0.0;
      group_end_.push_back(j);
      group_deaths_.push_back(deaths);
      if (deaths > 0.0) ++event_groups_;
      k = j;
    }
    event_mask_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) event_mask_[static_cast<Eigen::Index>(i)] = events_[i] ? 1.0 : 0.0;
  }

  const Eigen::MatrixXd& x() const { return x_; }

  // The Hessian is assembled as X' diag(w * c) X - M diag(deaths) M', where
  // c_j sums deaths / S0 over the risk sets containing record j and M holds
  // the risk-set means, which avoids per-record d x d updates.
  CoxLikelihood evaluate(const Eigen::VectorXd& beta, bool with_hessian = true) const {
    const Eigen::Index n = x_.rows(), d = x_.cols();
    const Eigen::VectorXd eta = x_ * beta;
    const double shift = n ? eta.maxCoeff() : 0.0;
    const Eigen::VectorXd w = (eta.array() - shift).exp().matrix();

    CoxLikelihood out;
    out.gradient = x_.transpose() * event_mask_;
    Eigen::MatrixXd means(d, static_cast<Eigen::Index>(event_groups_));
    Eigen::VectorXd deaths_of(static_cast<Eigen::Index>(event_groups_));
    std::vector<double> ratio;  // deaths / S0 per event group, by decreasing time
    ratio.reserve(event_groups_);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
    std::size_t k = 0;
    Eigen::Index g = 0;
    for (std::size_t gi = 0; gi < group_end_.size(); ++gi) {
      for (; k < group_end_[gi]; ++k) {
        const auto i = static_cast<Eigen::Index>(order_[k]);
        s0 += w[i];
        s1.noalias() += w[i] * rows_.row(i).transpose();
      }
      const double deaths = group_deaths_[gi];
      if (deaths == 0.0) continue;
      out.value -= deaths * (std::log(s0) + shift);
      means.col(g) = s1 / s0;
      deaths_of[g] = deaths;
      ratio.push_back(deaths / s0);
      ++g;
    }
    out.value += eta.dot(event_mask_);
    out.gradient.noalias() -= means * deaths_of;
    if (with_hessian) {
      // Walk records by increasing time, accumulating deaths / S0 of every
      // event group at or before each record's time.
      Eigen::VectorXd weight(n);
      double c = 0.0;
      std::size_t next = ratio.size();
      std::size_t begin = order_.size();
      for (std::size_t gi = group_end_.size(); gi-- > 0;) {
        const std::size_t start = gi ? group_end_[gi - 1] : 0;
        if (group_deaths_[gi] > 0.0) c += ratio[--next];
        for (std::size_t j = start; j < begin; ++j) {
          const auto i = static_cast<Eigen::Index>(order_[j]);
          weight[i] = w[i] * c;
        }
        begin = start;
      }
      out.hessian = -(x_.transpose() * weight.asDiagonal() * x_);
      out.hessian.noalias() += means * deaths_of.asDiagonal() * means.transpose();
    }
    return out;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows_;  // contiguous records
  std::vector<double> durations_;
  std::vector<int> events_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> group_end_;
  std::vector<double> group_deaths_;
  std::size_t event_groups_ = 0;
  Eigen::VectorXd event_mask_;
};

/// Partial log-likelihood, gradient and Hessian at `beta` on uncentered data.
inline CoxLikelihood cox_partial_likelihood(const SurvivalData& data, const Eigen::VectorXd& beta) {
  return CoxProblem(data.x, data.durations, data.events).evaluate(beta);
}

namespace detail {

/// Solves (-H) step = g with a pseudo-inverse so flat directions from
/// constant covariates stay put.
inline Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-hessian);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double cutoff = 1e-14 * std::max(1.0, values.cwiseAbs().maxCoeff());
  Eigen::VectorXd coords = eig.eigenvectors().transpose() * gradient;
  for (Eigen::Index k = 0; k < coords.size(); ++k) coords[k] = values[k] > cutoff ? coords[k] / values[k] : 0.0;
  return eig.eigenvectors() * coords;
}

}  // namespace detail

inline CoxModel fit_coxph(const SurvivalData& data, const CoxOptions& options = {}) {
  validate(data);
  require(options.max_iter >= 1 && options.tol > 0.0, ErrorCode::kInvalidArgument, "CoxPH: bad max_iter or tol");
  if (data.event_count() == 0) throw Error(ErrorCode::kNoEvents, "CoxPH needs at least one observed event");

  CoxModel model;
  model.train_mean = data.x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.x.rowwise() - model.train_mean.transpose();
  CoxProblem problem(centered, data.durations, data.events);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(centered.cols());
  CoxLikelihood current = problem.evaluate(beta);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    const double gnorm = current.gradient.size() ? current.gradient.cwiseAbs().maxCoeff() : 0.0;
    const Eigen::VectorXd step = detail::newton_direction(current.hessian, current.gradient);
    if (gnorm < options.tol) {
      // A vanishing gradient with a non-vanishing Newton step means the
      // likelihood is still rising along a flat direction (separation).
      const double bnorm = beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0;
      if (step.size() && step.cwiseAbs().maxCoeff() > 1e-2 * (1.0 + bnorm)) {
        throw Error(ErrorCode::kMonotoneLikelihood,
                    "partial likelihood keeps increasing along a flat direction (|beta| = " + io::format_double(bnorm) + ")");
      }
      converged = true;
      break;
    }
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd candidate = beta + scale * step;
      CoxLikelihood next = problem.evaluate(candidate);
      if (std::isfinite(next.value) && next.value >= current.value - 1e-12 * std::abs(current.value)) {
        beta = candidate;
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (beta.size() && beta.cwiseAbs().maxCoeff() > options.beta_bound) {
      throw Error(ErrorCode::kMonotoneLikelihood, "|beta| exceeded " + io::format_double(options.beta_bound));
    }
    if (!accepted) break;
  }
  model.diagnostics = {iter, current.gradient.size() ? current.gradient.cwiseAbs().maxCoeff() : 0.0, current.value};
  if (!converged) {
    throw Error(ErrorCode::kNonconvergence, "CoxPH stopped after " + std::to_string(iter) +
                                                " iterations with gradient norm " +
                                                io::format_double(model.diagnostics.gradient_norm));
  }
  model.beta = beta;
  const Eigen::VectorXd eta = centered * beta;
  model.baseline = breslow_baseline(data.durations, data.events, std::span<const double>(eta.data(), eta.size()));
  return model;
}

inline SurvivalCurve predict_survival(const CoxModel& model, std::span<const double> x, std::span<const double> times) {
  check_times(times);
  return proportional_curve(model.baseline, model.linear_predictor(x), times);
}

}  // namespace bsurv::models
