#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bearing_survival/events.hpp"
#include "test_support.hpp"

using namespace bsurv;
using namespace bsurv::events;
using support::make_pdf;

namespace {

const auto kUniform = make_pdf({0.2, 0.2, 0.2, 0.2, 0.2});

std::array<double, 5> point_mass(std::size_t b) {
  std::array<double, 5> m{};
  m[b] = 1.0;
  return m;
}

}  // namespace

TEST(KlDivergence, IdentityIsZero) {
  EXPECT_EQ(kl_divergence(kUniform, kUniform), 0.0);
  const auto p = make_pdf({0.1, 0.3, 0.05, 0.5, 0.05});
  EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
}

TEST(KlDivergence, TwoBinHandCase) {
  const auto p = make_pdf({0.5, 0.5, 0, 0, 0});
  const auto q = make_pdf({0.25, 0.75, 0, 0, 0});
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(kl_divergence(p, q), expected, 1e-8);
  EXPECT_NEAR(kl_divergence(p, q), 0.1438, 1e-3);
}

TEST(KlDivergence, DisjointSupportStaysFinite) {
  const double kl = kl_divergence(make_pdf(point_mass(0)), make_pdf(point_mass(1)), 1e-9);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_GT(kl, 10.0);
}

TEST(KlDivergence, NonNegativeAndAsymmetric) {
  const auto p = make_pdf({0.7, 0.1, 0.1, 0.05, 0.05});
  const auto q = make_pdf({0.1, 0.2, 0.3, 0.2, 0.2});
  EXPECT_GT(kl_divergence(p, q), 0.0);
  EXPECT_GT(kl_divergence(q, p), 0.0);
  EXPECT_NE(kl_divergence(p, q), kl_divergence(q, p));
}

TEST(KlDivergence, RejectsInvalidPdf) {
  try {
    kl_divergence(make_pdf({0.5, 0.6, 0, 0, 0}), kUniform);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPdf);
  }
  EXPECT_THROW(kl_divergence(make_pdf({1.2, -0.2, 0, 0, 0}), kUniform), Error);
  EXPECT_THROW(kl_divergence(kUniform, kUniform, 0.0), Error);
}

TEST(SdDiscrepancy, Examples) {
  EXPECT_EQ(sd_discrepancy(kUniform, kUniform), 0.0);
  EXPECT_NEAR(sd_discrepancy(make_pdf(point_mass(0)), make_pdf(point_mass(4))), 0.0, 1e-15);
  EXPECT_NEAR(sd_discrepancy(kUniform, make_pdf(point_mass(2))), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(band_index_sd(kUniform), std::sqrt(2.0), 1e-12);
  // Mass 0.5 at bins 0 and 4: mean 2, variance 4.
  EXPECT_NEAR(band_index_sd(make_pdf({0.5, 0, 0, 0, 0.5})), 2.0, 1e-12);
}

TEST(DetectEvent, ConstantSequenceIsCensored) {
  const std::vector<SpectralPdf> pdfs(100, kUniform);
  const auto d = detect_event(pdfs, 10, 0.1);
  EXPECT_FALSE(d.annotation.observed());
  EXPECT_FALSE(d.annotation.event_time.has_value());
  EXPECT_EQ(d.annotation.total_windows, 100u);
  for (double v : d.trace.kl) EXPECT_EQ(v, 0.0);
}

TEST(DetectEvent, LinearMassShiftOntoBpfo) {
  std::vector<SpectralPdf> pdfs;
  for (std::size_t w = 0; w < 100; ++w) {
    const double s = w < 70 ? 0.0 : std::min(1.0, 0.05 * static_cast<double>(w - 69));
    std::array<double, 5> m;
    for (std::size_t b = 0; b < 5; ++b) m[b] = (1.0 - s) * 0.2 + (b == 3 ? s : 0.0);
    pdfs.push_back(make_pdf(m));
  }
  const auto d = detect_event(pdfs, 10, 0.1, 2.0);
  ASSERT_TRUE(d.annotation.observed());
  EXPECT_GE(*d.annotation.event_window, 70u);
  EXPECT_LE(*d.annotation.event_window, 78u);
  EXPECT_DOUBLE_EQ(*d.annotation.event_time, 2.0 * static_cast<double>(*d.annotation.event_window));
}

TEST(DetectEvent, LastCrossingRule) {
  // Windows 50-59 keep the reference spread (sigma = sqrt 2) with a new
  // shape, so only KL moves; from 60 a point mass moves both.
  std::vector<SpectralPdf> pdfs;
  for (std::size_t w = 0; w < 100; ++w) {
    if (w < 50) pdfs.push_back(kUniform);
    else if (w < 60) pdfs.push_back(make_pdf({0.25, 0, 0.5, 0, 0.25}));
    else pdfs.push_back(make_pdf(point_mass(3)));
  }
  const auto d = detect_event(pdfs, 10, 0.1);
  ASSERT_TRUE(d.trace.kl_crossing && d.trace.sd_crossing);
  EXPECT_EQ(*d.trace.kl_crossing, 50u);
  EXPECT_EQ(*d.trace.sd_crossing, 60u);
  EXPECT_EQ(d.annotation.event_window, 60u);
}

TEST(DetectEvent, ThresholdsScaleBreakinPeak) {
  std::vector<SpectralPdf> pdfs(40, kUniform);
  pdfs[3] = make_pdf({0.3, 0.2, 0.2, 0.15, 0.15});
  const auto d = detect_event(pdfs, 5, 0.25);
  EXPECT_NEAR(d.trace.kl_threshold, 1.25 * d.trace.kl[3], 1e-15);
  EXPECT_NEAR(d.trace.sd_threshold, 1.25 * d.trace.sd[3], 1e-15);
  EXPECT_FALSE(d.annotation.observed());
  ASSERT_TRUE(d.trace.plateau_window.has_value());
  EXPECT_GE(*d.trace.plateau_window, 5u);
}

TEST(DetectEvent, TooFewWindows) {
  const std::vector<SpectralPdf> pdfs(5, kUniform);
  for (std::size_t breakin : {0u, 5u, 6u}) {
    try {
      detect_event(pdfs, breakin);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kTooFewWindows);
    }
  }
  EXPECT_THROW(detect_event(pdfs, 2, -0.1), Error);
}

TEST(DetectEvent, SyntheticOnsetRecovered) {
  simulate::SynthBearingConfig cfg;
  cfg.window_len = 4096;
  cfg.onset_window = 70;
  cfg.noise_sigma = 0.05;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    cfg.seed = seed;
    const auto d = support::synth_detect(cfg);
    ASSERT_TRUE(d.annotation.observed()) << "seed " << seed;
    EXPECT_GE(*d.annotation.event_window, 70u);
    EXPECT_LE(*d.annotation.event_window, 78u);
  }
}

TEST(DetectEvent, LargerMarginNeverEarlier) {
  simulate::SynthBearingConfig cfg;
  cfg.window_len = 4096;
  cfg.noise_sigma = 0.1;
  for (std::size_t onset : {55u, 80u}) {
    cfg.onset_window = onset;
    cfg.seed = onset;
    const auto pdfs = support::synth_pdfs(cfg);
    std::optional<std::size_t> previous;
    for (double margin : {0.0, 0.1, 0.2, 0.5, 1.0}) {
      const auto d = detect_event(pdfs, 10, margin);
      if (previous) {
        if (d.annotation.event_window) EXPECT_GE(*d.annotation.event_window, *previous);
      }
      if (d.annotation.event_window) previous = d.annotation.event_window;
      else previous = std::size_t{1000};  // censored stays censored for larger margins
    }
  }
}

TEST(TraceCsv, HeaderAndRows) {
  const std::vector<SpectralPdf> pdfs(12, kUniform);
  const auto d = detect_event(pdfs, 2);
  std::ostringstream out;
  write_trace_csv(out, d.trace);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "window,kl,sd,kl_threshold,sd_threshold");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
}
