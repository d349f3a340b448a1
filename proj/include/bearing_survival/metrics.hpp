#pragma once

// Concordance (Harrell, Antolini) and the IPCW integrated Brier score.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/models/common.hpp"
#include "bearing_survival/models/kaplan_meier.hpp"

namespace bsurv::metrics {

inline constexpr std::size_t kIbsGridPoints = 100;
inline constexpr double kIbsUpperQuantile = 0.95;

struct Concordance {
  double value = 0.0;
  std::size_t comparable_pairs = 0;
};

/// Per-record predicted survival on a shared time grid (rows = records).
struct SurvivalMatrix {
  std::vector<double> times;
  Eigen::MatrixXd values;

  double at(std::size_t record, double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values(static_cast<Eigen::Index>(record), static_cast<Eigen::Index>(it - times.begin() - 1));
  }
};

namespace detail {

// Pair (i, j) is comparable when d_i < d_j and record i had the event.
// `concordant(i, j)` returns +1, 0 (tie) or -1. Counting in half-units keeps
// the sum exact and order independent.
template <typename Compare>
Concordance concordance(std::span<const double> durations, std::span<const int> events, Compare concordant) {
  const std::size_t n = durations.size();
  require(events.size() == n, ErrorCode::kDimensionMismatch, "durations and events differ in length");
  std::uint64_t half_units = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!events[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(durations[i] < durations[j])) continue;
      ++pairs;
      const int c = concordant(i, j);
      half_units += c > 0 ? 2 : (c == 0 ? 1 : 0);
    }
  }
  if (pairs == 0) throw Error(ErrorCode::kNoComparablePairs, "no comparable pairs");
  return {static_cast<double>(half_units) / (2.0 * static_cast<double>(pairs)), static_cast<std::size_t>(pairs)};
}

}  // namespace detail

/// Higher risk should go with shorter survival.
inline Concordance harrell_ci(std::span<const double> durations, std::span<const int> events,
                              std::span<const double> risk) {
  require(risk.size() == durations.size(), ErrorCode::kDimensionMismatch, "risk scores and durations differ in length");
  return detail::concordance(durations, events, [&](std::size_t i, std::size_t j) {
    return risk[i] > risk[j] ? 1 : (risk[i] == risk[j] ? 0 : -1);
  });
}

/// Concordant when the earlier-failing record has the lower predicted
/// survival at its own event time.
inline Concordance antolini_ci(std::span<const double> durations, std::span<const int> events,
                               const SurvivalMatrix& survival) {
  require(static_cast<std::size_t>(survival.values.rows()) == durations.size() &&
              static_cast<std::size_t>(survival.values.cols()) == survival.times.size(),
          ErrorCode::kDimensionMismatch, "survival matrix shape does not match records and grid");
  require(!survival.times.empty(), ErrorCode::kGridTooCoarse, "empty survival grid");
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (events[i] && durations[i] > survival.times.back()) {
      throw Error(ErrorCode::kGridTooCoarse, "event time " + std::to_string(durations[i]) + " lies beyond the grid");
    }
  }
  return detail::concordance(durations, events, [&](std::size_t i, std::size_t j) {
    const double si = survival.at(i, durations[i]);
    const double sj = survival.at(j, durations[i]);
    return si < sj ? 1 : (si == sj ? 0 : -1);
  });
}

/// Linear-interpolated quantile (type 7).
inline double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorCode::kEmptyInput, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// 100 equally spaced points on (0, 95th percentile of test durations].
inline std::vector<double> ibs_grid(std::span<const double> test_durations, std::size_t points = kIbsGridPoints) {
  const double upper = quantile(std::vector<double>(test_durations.begin(), test_durations.end()), kIbsUpperQuantile);
  require(upper > 0.0, ErrorCode::kInvalidArgument, "IBS grid needs positive durations");
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) grid[k] = upper * static_cast<double>(k + 1) / static_cast<double>(points);
  return grid;
}

struct BrierResult {
  double ibs = 0.0;
  std::vector<double> grid;   // possibly truncated
  std::vector<double> brier;  // BS(t) on grid
  bool truncated = false;
};

/// Graf et al. IPCW Brier score on `survival.times`, integrated by the
/// trapezoid rule and divided by the grid span. The censoring survival G is
/// the Kaplan-Meier of the TRAIN censoring times. Grid points where G
/// reaches 0 are dropped (`truncated`).
inline BrierResult integrated_brier(std::span<const double> train_durations, std::span<const int> train_events,
                                    std::span<const double> test_durations, std::span<const int> test_events,
                                    const SurvivalMatrix& survival) {
  const std::size_t n = test_durations.size();
  require(n > 0, ErrorCode::kEmptyInput, "IBS needs test records");
  require(static_cast<std::size_t>(survival.values.rows()) == n &&
              static_cast<std::size_t>(survival.values.cols()) == survival.times.size(),
          ErrorCode::kDimensionMismatch, "survival matrix shape does not match records and grid");
  const auto censoring = models::censoring_kaplan_meier(train_durations, train_events);

  BrierResult out;
  for (std::size_t k = 0; k < survival.times.size(); ++k) {
    const double t = survival.times[k];
    const double g_t = censoring.at(t);
    if (!(g_t > 0.0)) {
      out.truncated = true;
      break;
    }
    double sum = 0.0, comp = 0.0;  // Kahan
    for (std::size_t i = 0; i < n; ++i) {
      const double s = survival.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      double term = 0.0;
      if (test_durations[i] <= t && test_events[i]) {
        term = s * s / censoring.at(test_durations[i]);
      } else if (test_durations[i] > t) {
        term = (1.0 - s) * (1.0 - s) / g_t;
      }
      const double y = term - comp;
      const double next = sum + y;
      comp = (next - sum) - y;
      sum = next;
    }
    out.grid.push_back(t);
    out.brier.push_back(sum / static_cast<double>(n));
  }
  if (out.grid.empty()) {
    throw Error(ErrorCode::kDegenerateCensoringKm, "censoring survival is zero over the whole grid");
  }
  if (out.grid.size() == 1) {
    out.ibs = out.brier.front();
    return out;
  }
  double area = 0.0;
  for (std::size_t k = 1; k < out.grid.size(); ++k) {
    area += 0.5 * (out.brier[k] + out.brier[k - 1]) * (out.grid[k] - out.grid[k - 1]);
  }
  out.ibs = area / (out.grid.back() - out.grid.front());
  return out;
}

struct EvaluationReport {
  double harrell_ci = 0.0;
  double antolini_ci = 0.0;
  double ibs = 0.0;
  double train_seconds = 0.0;
  std::size_t n_comparable_pairs = 0;
  bool ibs_truncated = false;

  // 1 - IBS; a convenience reading, not a standard accuracy measure.
  double accuracy() const { return 1.0 - ibs; }
};

}  // namespace bsurv::metrics
