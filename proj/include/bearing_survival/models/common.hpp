#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/dataset.hpp"
#include "bearing_survival/error.hpp"

namespace bsurv::models {

/// Column-major design matrix with right-censored outcomes.
struct SurvivalData {
  Eigen::MatrixXd x;  // n x d
  std::vector<double> durations;
  std::vector<int> events;

  std::size_t size() const { return durations.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t event_count() const { return static_cast<std::size_t>(std::count(events.begin(), events.end(), 1)); }

  SurvivalData subset(std::span<const std::size_t> rows) const {
    SurvivalData out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
      out.durations.push_back(durations[rows[i]]);
      out.events.push_back(events[rows[i]]);
    }
    return out;
  }
};

inline SurvivalData to_survival_data(const dataset::SurvivalDataset& data) {
  SurvivalData out;
  const auto n = static_cast<Eigen::Index>(data.records.size());
  const auto d = static_cast<Eigen::Index>(data.dimension());
  out.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data.records[static_cast<std::size_t>(i)];
    require(static_cast<Eigen::Index>(r.covariates.size()) == d, ErrorCode::kDimensionMismatch,
            "record covariate count differs from feature names");
    for (Eigen::Index k = 0; k < d; ++k) out.x(i, k) = r.covariates[static_cast<std::size_t>(k)];
    out.durations.push_back(r.duration);
    out.events.push_back(r.event);
  }
  return out;
}

inline void validate(const SurvivalData& data) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyInput, "no records");
  require(static_cast<std::size_t>(data.x.rows()) == data.size() && data.events.size() == data.size(),
          ErrorCode::kDimensionMismatch, "covariate rows, durations and events differ in length");
  for (std::size_t i = 0; i < data.size(); ++i) {
    require(data.durations[i] > 0.0 && std::isfinite(data.durations[i]), ErrorCode::kInvalidArgument,
            "durations must be positive and finite");
    require(data.events[i] == 0 || data.events[i] == 1, ErrorCode::kInvalidArgument, "events must be 0 or 1");
  }
}

/// Right-continuous step function (step estimators) or a sampled smooth
/// curve (parametric models); `at` returns the value at the last time <= t,
/// and 1 before the first time.
struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::optional<std::vector<double>> lower;
  std::optional<std::vector<double>> upper;

  double at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

/// Same lookup for a bare step function (time grid + values, value 0 before).
inline double step_value(std::span<const double> grid, std::span<const double> values, double t,
                         double before = 0.0) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return before;
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

/// Sorted distinct event times.
inline std::vector<double> unique_event_times(std::span<const double> durations, std::span<const int> events) {
  std::vector<double> t;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (events[i]) t.push_back(durations[i]);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

/// Breslow cumulative baseline hazard at each distinct event time for
/// linear predictors `eta`: H0(t) = sum_{t_k <= t} d_k / sum_{j: t_j >= t_k} exp(eta_j).
struct BaselineHazard {
  std::vector<double> times;
  std::vector<double> cumhaz;

  double at(double t) const { return step_value(times, cumhaz, t, 0.0); }
};

inline BaselineHazard breslow_baseline(std::span<const double> durations, std::span<const int> events,
                                       std::span<const double> eta) {
  const std::size_t n = durations.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return durations[a] > durations[b]; });
  const double shift = n ? *std::max_element(eta.begin(), eta.end()) : 0.0;

  BaselineHazard out;
  std::vector<double> increments;
  double risk = 0.0;
  for (std::size_t k = 0; k < n;) {
    const double t = durations[order[k]];
    std::size_t deaths = 0;
    std::size_t j = k;
    for (; j < n && durations[order[j]] == t; ++j) {
      risk += std::exp(eta[order[j]] - shift);
      deaths += static_cast<std::size_t>(events[order[j]]);
    }
    if (deaths > 0) {
      out.times.push_back(t);
      increments.push_back(static_cast<double>(deaths) / (risk * std::exp(shift)));
    }
    k = j;
  }
  std::reverse(out.times.begin(), out.times.end());
  std::reverse(increments.begin(), increments.end());
  out.cumhaz.resize(increments.size());
  std::partial_sum(increments.begin(), increments.end(), out.cumhaz.begin());
  return out;
}

/// Curve of exp(-H0(t) * exp(eta)) on the requested times.
inline SurvivalCurve proportional_curve(const BaselineHazard& baseline, double eta, std::span<const double> times) {
  SurvivalCurve c;
  c.times.assign(times.begin(), times.end());
  const double scale = std::exp(eta);
  for (double t : times) c.survival.push_back(std::exp(-baseline.at(t) * scale));
  return c;
}

inline void check_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.0, ErrorCode::kInvalidArgument, "prediction times must be non-negative");
    require(i == 0 || times[i] > times[i - 1], ErrorCode::kInvalidArgument, "prediction times must be strictly increasing");
  }
}

}  // namespace bsurv::models
