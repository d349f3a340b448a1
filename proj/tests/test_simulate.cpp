#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models.hpp"
#include "bearing_survival/simulate.hpp"
#include "test_support.hpp"

using namespace bsurv;
using namespace bsurv::simulate;

namespace {

SynthBearingConfig small_config() {
  SynthBearingConfig cfg;
  cfg.window_len = 4096;
  return cfg;
}

}  // namespace

TEST(SimulateCoxTimes, NullBetaMatchesExponential) {
  const double lambda = 0.3;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  const std::vector<double> beta{0.0, 0.0};
  const auto cohort = simulate_cox_times(beta, x, lambda, 10000, 7);
  ASSERT_EQ(cohort.durations.size(), 10000u);
  const auto km = models::kaplan_meier(cohort.durations, std::vector<int>(10000, 1));
  double sup = 0.0;
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    sup = std::max(sup, std::abs(km.survival[k] - std::exp(-lambda * km.times[k])));
  }
  EXPECT_LT(sup, 0.02);
}

TEST(SimulateCoxTimes, MedianRatioForLogTwo) {
  Eigen::MatrixXd x(2, 1);
  x << std::log(2.0), 0.0;
  const std::vector<double> beta{1.0};
  const auto cohort = simulate_cox_times(beta, x, 0.1, 10000, 11);
  std::vector<double> high, low;
  for (std::size_t i = 0; i < cohort.durations.size(); ++i) {
    (cohort.group_labels[i] == 0 ? high : low).push_back(cohort.durations[i]);
  }
  const double ratio = metrics::quantile(high, 0.5) / metrics::quantile(low, 0.5);
  EXPECT_NEAR(ratio, 0.5, 0.05);
}

TEST(SimulateCoxTimes, DeterministicAndValidated) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
  const std::vector<double> beta{0.4};
  EXPECT_EQ(simulate_cox_times(beta, x, 0.2, 50, 3).durations, simulate_cox_times(beta, x, 0.2, 50, 3).durations);
  EXPECT_NE(simulate_cox_times(beta, x, 0.2, 50, 3).durations, simulate_cox_times(beta, x, 0.2, 50, 4).durations);
  EXPECT_THROW(simulate_cox_times(beta, x, 0.0, 5, 0), Error);
  EXPECT_THROW(simulate_cox_times(std::vector<double>{1, 2}, x, 0.2, 5, 0), Error);
}

TEST(SynthBearing, ShapeAndDeterminism) {
  auto cfg = small_config();
  cfg.duration_windows = 12;
  cfg.onset_window = 8;
  const auto a = synth_bearing(cfg);
  EXPECT_EQ(a.samples.size(), 12u * 4096u);
  EXPECT_EQ(a.samples, synth_bearing(cfg).samples);
  cfg.onset_window = 20;
  EXPECT_THROW(synth_bearing(cfg), Error);
}

TEST(SynthBearing, NoiselessStationaryAfterBreakin) {
  auto cfg = small_config();
  cfg.noise_sigma = 0.0;
  cfg.duration_windows = 40;
  cfg.onset_window = 40;
  const auto pdfs = support::synth_pdfs(cfg);
  for (std::size_t w = cfg.breakin_transient_windows + 1; w < pdfs.size(); ++w) {
    for (std::size_t b = 0; b < signal::kNumBands; ++b) EXPECT_NEAR(pdfs[w].bin_mass[b], pdfs[w - 1].bin_mass[b], 1e-6);
    EXPECT_LT(events::kl_divergence(pdfs[w], pdfs[w - 1]), 1e-6);
  }
}

TEST(SynthBearing, BreakinBumpPeaksThenSettles) {
  auto cfg = small_config();
  cfg.noise_sigma = 0.0;
  cfg.onset_window = 100;
  const auto d = support::synth_detect(cfg);
  const auto& kl = d.trace.kl;
  const auto peak = std::max_element(kl.begin(), kl.begin() + 10) - kl.begin();
  EXPECT_GT(peak, 0);
  EXPECT_LT(peak, 10);
  EXPECT_LT(kl[20], 0.1 * kl[static_cast<std::size_t>(peak)]);
  EXPECT_FALSE(d.annotation.observed());
}

TEST(SynthBearing, OnsetSeventyDetected) {
  auto cfg = small_config();
  cfg.onset_window = 70;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.seed = seed;
    const auto d = support::synth_detect(cfg);
    ASSERT_TRUE(d.annotation.observed());
    EXPECT_GE(*d.annotation.event_window, 70u);
    EXPECT_LE(*d.annotation.event_window, 78u);
  }
  // Fault mass by window 80 is at least 30% of the band total.
  const auto m = synth_band_amplitudes(cfg, 80);
  double total = 0.0;
  for (double v : m) total += v;
  EXPECT_GE(m[static_cast<std::size_t>(signal::Band::kBPFO)] / total, 0.3);
}

TEST(SynthBearing, NoOnsetStaysCensored) {
  auto cfg = small_config();
  cfg.onset_window = cfg.duration_windows;
  for (double noise : {0.0, 0.05, 0.1}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      cfg.noise_sigma = noise;
      cfg.seed = seed;
      for (double margin : {0.1, 0.3}) {
        EXPECT_FALSE(support::synth_detect(cfg, margin).annotation.observed()) << "noise " << noise << " seed " << seed;
      }
    }
  }
}

TEST(GroupComparison, EmptyGroup) {
  models::SurvivalData data;
  data.x.resize(4, 1);
  data.x << 0.1, 0.2, 0.3, 0.4;
  data.durations = {4, 2, 3, 1};
  data.events = {1, 1, 1, 1};
  const auto model = models::fit_coxph(data);
  const std::vector<double> times{1, 2};
  try {
    group_survival_comparison(model, data.x, 0, -5.0, times);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGroup);
  }
}

TEST(GroupComparison, HighGroupBelowLowGroup) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  models::SurvivalData data;
  data.x.resize(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) {
    data.x(i, 0) = g(rng);
    data.x(i, 1) = g(rng);
    data.durations.push_back(-std::log(u(rng) + 1e-12) / (0.2 * std::exp(0.9 * data.x(i, 0))));
    data.events.push_back(u(rng) < 0.8);
  }
  const auto model = models::fit_coxph(data);
  ASSERT_GT(model.beta[0], 0.0);
  std::vector<double> times;
  for (int k = 0; k <= 50; ++k) times.push_back(0.4 * k);
  const auto cmp = group_survival_comparison(model, data.x, 0, 0.0, times, 500, 5);
  EXPECT_GT(cmp.low.members, 0u);
  EXPECT_EQ(cmp.low.members + cmp.high.members, 400u);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_LE(cmp.high.curve.survival[k], cmp.low.curve.survival[k]);
    EXPECT_LE((*cmp.high.curve.lower)[k], cmp.high.curve.survival[k] + 1e-12);
    EXPECT_GE((*cmp.high.curve.upper)[k], cmp.high.curve.survival[k] - 1e-12);
  }
  EXPECT_EQ(cmp.high.simulated_times.size(), 500u);
  EXPECT_LT(cmp.high.simulated_median, cmp.low.simulated_median);
}
