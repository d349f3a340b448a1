#pragma once

// Synthetic ground truth: degrading-bearing vibration and Cox survival times.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models/cox.hpp"
#include "bearing_survival/signal.hpp"

namespace bsurv::simulate {

/// Vibration model per window w:
///   x(t) = (base + sum_b m_b(w) cos(2 pi f_b t)) * cos(2 pi f_c t) + noise
/// with one tone per characteristic band. Before onset every band carries
/// `band_amplitude`; a running-in bump adds mass to the FS band, rising from
/// zero and settling back over `breakin_transient_windows` (sin^2 profile),
/// so divergence from the first window peaks inside the break-in and then
/// drops to a plateau; after onset the fault
/// band grows by growth_rate * (5 * band_amplitude) per window, i.e.
/// growth_rate is the added amplitude per window relative to the total
/// healthy band amplitude. Tone and carrier frequencies are snapped to
/// spectral lines of the window so noiseless windows repeat exactly.
struct SynthBearingConfig {
  std::size_t duration_windows = 100;
  std::size_t onset_window = 70;
  signal::Band fault_bin = signal::Band::kBPFO;
  double noise_sigma = 0.05;
  double growth_rate = 0.06;
  signal::BearingGeometry geometry = signal::xjtu_geometry();
  std::uint64_t seed = 0;
  double sample_rate = 25600.0;
  std::size_t window_len = 32768;
  double carrier_hz = 3000.0;
  double band_amplitude = 0.05;
  double breakin_amplitude = 0.15;
  std::size_t breakin_transient_windows = 8;

  void validate() const {
    geometry.validate();
    require(duration_windows >= 2, ErrorCode::kInvalidArgument, "synth: need at least 2 windows");
    require(onset_window <= duration_windows, ErrorCode::kInvalidArgument, "synth: onset beyond record");
    require(growth_rate > 0.0, ErrorCode::kInvalidArgument, "synth: growth_rate must be positive");
    require(noise_sigma >= 0.0, ErrorCode::kInvalidArgument, "synth: noise_sigma must be >= 0");
    require(window_len >= signal::kMinFrameLength, ErrorCode::kInvalidArgument, "synth: window too short");
    require(carrier_hz > 0.0 && carrier_hz < sample_rate / 2, ErrorCode::kInvalidArgument, "synth: bad carrier");
    require(band_amplitude > 0.0 && breakin_amplitude >= 0.0, ErrorCode::kInvalidArgument, "synth: bad amplitudes");
  }
};

/// Band amplitudes for one window, in band order.
inline std::array<double, signal::kNumBands> synth_band_amplitudes(const SynthBearingConfig& cfg, std::size_t w) {
  std::array<double, signal::kNumBands> m{};
  m.fill(cfg.band_amplitude);
  const double total = cfg.band_amplitude * static_cast<double>(signal::kNumBands);
  if (cfg.breakin_transient_windows > 0 && w < cfg.breakin_transient_windows) {
    const double r = std::sin(std::numbers::pi * static_cast<double>(w) / static_cast<double>(cfg.breakin_transient_windows));
    m[static_cast<std::size_t>(signal::Band::kFS)] += cfg.breakin_amplitude * total * r * r;
  }
  if (w > cfg.onset_window) {
    m[static_cast<std::size_t>(cfg.fault_bin)] += cfg.growth_rate * static_cast<double>(w - cfg.onset_window) * total;
  }
  return m;
}

inline signal::RawChannel synth_bearing(const SynthBearingConfig& cfg, signal::Axis axis = signal::Axis::kHorizontal) {
  cfg.validate();
  const std::size_t n = cfg.window_len;
  const double resolution = cfg.sample_rate / static_cast<double>(n);
  const auto snap = [&](double f) { return std::max(1.0, std::round(f / resolution)) * resolution; };
  const auto centers = signal::defect_frequencies(cfg.geometry);

  const auto tone = [&](double f) {
    std::vector<double> table(n);
    const double cycles = snap(f) / resolution;  // integer
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = std::fmod(cycles * static_cast<double>(i), static_cast<double>(n));
      table[i] = std::cos(2.0 * std::numbers::pi * phase / static_cast<double>(n));
    }
    return table;
  };
  const auto carrier = tone(cfg.carrier_hz);
  std::array<std::vector<double>, signal::kNumBands> tones;
  for (std::size_t b = 0; b < signal::kNumBands; ++b) tones[b] = tone(centers[b]);

  signal::RawChannel out{{}, cfg.sample_rate, axis};
  out.samples.resize(n * cfg.duration_windows);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t w = 0; w < cfg.duration_windows; ++w) {
    const auto m = synth_band_amplitudes(cfg, w);
    double base = 1.0;
    for (double a : m) base += a;
    double* window = out.samples.data() + w * n;
    for (std::size_t i = 0; i < n; ++i) {
      double envelope = base;
      for (std::size_t b = 0; b < signal::kNumBands; ++b) envelope += m[b] * tones[b][i];
      window[i] = envelope * carrier[i];
    }
    if (cfg.noise_sigma > 0.0) {
      for (std::size_t i = 0; i < n; ++i) window[i] += cfg.noise_sigma * noise(rng);
    }
  }
  return out;
}

struct SimulatedCohort {
  std::vector<double> durations;
  std::vector<std::size_t> group_labels;  // source covariate row of each draw
  std::vector<double> true_beta;
};

/// Exponential-baseline Cox times by inversion:
/// T = -ln(U) / (lambda * exp(beta . x)), n_per_record draws per covariate row.
inline SimulatedCohort simulate_cox_times(std::span<const double> beta, const Eigen::MatrixXd& covariates,
                                          double baseline_lambda, std::size_t n_per_record, std::uint64_t seed) {
  require(baseline_lambda > 0.0, ErrorCode::kInvalidArgument, "baseline_lambda must be positive");
  require(static_cast<std::size_t>(covariates.cols()) == beta.size(), ErrorCode::kDimensionMismatch,
          "beta length differs from covariate columns");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimulatedCohort cohort;
  cohort.true_beta.assign(beta.begin(), beta.end());
  cohort.durations.reserve(static_cast<std::size_t>(covariates.rows()) * n_per_record);
  for (Eigen::Index r = 0; r < covariates.rows(); ++r) {
    double eta = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) eta += beta[k] * covariates(r, static_cast<Eigen::Index>(k));
    const double rate = baseline_lambda * std::exp(eta);
    for (std::size_t j = 0; j < n_per_record; ++j) {
      double u = 0.0;
      while (u <= 0.0) u = unit(rng);
      cohort.durations.push_back(-std::log(u) / rate);
      cohort.group_labels.push_back(static_cast<std::size_t>(r));
    }
  }
  return cohort;
}

struct GroupCurve {
  models::SurvivalCurve curve;  // mean over members, with 2.5/97.5 percentile bands
  std::size_t members = 0;
  std::vector<double> simulated_times;
  double simulated_median = 0.0;
};

struct GroupComparison {
  GroupCurve low;   // feature <= threshold
  GroupCurve high;  // feature > threshold
};

/// Splits rows of `x` on column `split_feature` at `threshold`, averages the
/// Cox-predicted curves per group on `times`, and draws `simulated_per_group`
/// exponential-baseline times per group at the group's mean covariates.
inline GroupComparison group_survival_comparison(const models::CoxModel& model, const Eigen::MatrixXd& x,
                                                 std::size_t split_feature, double threshold,
                                                 std::span<const double> times, std::size_t simulated_per_group = 500,
                                                 std::uint64_t seed = 0) {
  require(split_feature < static_cast<std::size_t>(x.cols()), ErrorCode::kInvalidArgument, "split feature out of range");
  require(!times.empty(), ErrorCode::kInvalidArgument, "group comparison needs prediction times");
  std::vector<Eigen::Index> low_rows, high_rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    (x(i, static_cast<Eigen::Index>(split_feature)) <= threshold ? low_rows : high_rows).push_back(i);
  }
  if (low_rows.empty() || high_rows.empty()) {
    throw Error(ErrorCode::kEmptyGroup, "threshold " + std::to_string(threshold) + " leaves a group empty");
  }
  // Exponential approximation of the fitted baseline for simulation.
  const double t_end = model.baseline.times.empty() ? 1.0 : model.baseline.times.back();
  const double h_end = model.baseline.cumhaz.empty() ? 0.0 : model.baseline.cumhaz.back();
  const double lambda = h_end > 0.0 ? h_end / t_end : 1.0;

  const auto summarize = [&](const std::vector<Eigen::Index>& rows, std::uint64_t stream) {
    GroupCurve g;
    g.members = rows.size();
    const std::size_t t_count = times.size();
    std::vector<std::vector<double>> per_time(t_count);
    Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(x.cols());
    for (auto r : rows) {
      const Eigen::VectorXd xi = x.row(r).transpose();
      mean_x += xi;
      const auto c = models::predict_survival(model, std::span<const double>(xi.data(), xi.size()), times);
      for (std::size_t k = 0; k < t_count; ++k) per_time[k].push_back(c.survival[k]);
    }
    mean_x /= static_cast<double>(rows.size());
    g.curve.times.assign(times.begin(), times.end());
    g.curve.lower.emplace();
    g.curve.upper.emplace();
    for (std::size_t k = 0; k < t_count; ++k) {
      double s = 0.0;
      for (double v : per_time[k]) s += v;
      g.curve.survival.push_back(s / static_cast<double>(rows.size()));
      g.curve.lower->push_back(metrics::quantile(per_time[k], 0.025));
      g.curve.upper->push_back(metrics::quantile(per_time[k], 0.975));
    }
    if (simulated_per_group > 0) {
      Eigen::MatrixXd centered(1, x.cols());
      centered.row(0) = (mean_x - model.train_mean).transpose();
      std::vector<double> beta(model.beta.data(), model.beta.data() + model.beta.size());
      auto cohort = simulate_cox_times(beta, centered, lambda, simulated_per_group, seed + stream);
      g.simulated_times = std::move(cohort.durations);
      g.simulated_median = metrics::quantile(g.simulated_times, 0.5);
    }
    return g;
  };
  return {summarize(low_rows, 0), summarize(high_rows, 1)};
}

}  // namespace bsurv::simulate
