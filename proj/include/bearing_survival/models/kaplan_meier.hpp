#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bearing_survival/error.hpp"
#include "bearing_survival/models/common.hpp"

namespace bsurv::models {

/// Product-limit estimate at every distinct observed time, with Greenwood
/// 95% bands (S +/- 1.96 sd, clipped to [0, 1]). Records censored at t stay
/// in the risk set at t.
inline SurvivalCurve kaplan_meier(std::span<const double> durations, std::span<const int> events) {
  const std::size_t n = durations.size();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "Kaplan-Meier needs at least one record");
  require(events.size() == n, ErrorCode::kDimensionMismatch, "durations and events differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });

  SurvivalCurve curve;
  curve.lower.emplace();
  curve.upper.emplace();
  double s = 1.0;
  double greenwood = 0.0;
  std::size_t at_risk = n;
  for (std::size_t k = 0; k < n;) {
    const double t = durations[order[k]];
    require(t > 0.0, ErrorCode::kInvalidArgument, "durations must be positive");
    std::size_t deaths = 0, leaving = 0;
    for (; k < n && durations[order[k]] == t; ++k, ++leaving) deaths += static_cast<std::size_t>(events[order[k]]);
    if (deaths > 0) {
      const double nr = static_cast<double>(at_risk), d = static_cast<double>(deaths);
      s *= 1.0 - d / nr;
      if (at_risk > deaths) greenwood += d / (nr * (nr - d));
    }
    const double sd = s > 0.0 ? s * std::sqrt(greenwood) : 0.0;
    curve.times.push_back(t);
    curve.survival.push_back(s);
    curve.lower->push_back(std::clamp(s - 1.96 * sd, 0.0, 1.0));
    curve.upper->push_back(std::clamp(s + 1.96 * sd, 0.0, 1.0));
    at_risk -= leaving;
  }
  return curve;
}

/// Kaplan-Meier of the censoring distribution (event indicator flipped).
inline SurvivalCurve censoring_kaplan_meier(std::span<const double> durations, std::span<const int> events) {
  std::vector<int> flipped(events.size());
  std::transform(events.begin(), events.end(), flipped.begin(), [](int e) { return 1 - e; });
  return kaplan_meier(durations, flipped);
}

}  // namespace bsurv::models
