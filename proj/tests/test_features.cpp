#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bearing_survival/features.hpp"

using namespace bsurv;
using namespace bsurv::features;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

signal::SignalFrame frame_of(std::vector<double> v, std::size_t index = 0) { return {std::move(v), index, 0.0}; }

std::vector<double> sinusoid(std::size_t n, double amplitude) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(2.0 * std::numbers::pi * 7.0 * static_cast<double>(i) / static_cast<double>(n));
  return x;
}

}  // namespace

TEST(ExtractFeatures, HandCaseRepeated) {
  // [1,-2,3,-4] tiled four times has the same moments as the 4-sample frame.
  std::vector<double> x;
  for (int r = 0; r < 4; ++r) x.insert(x.end(), {1.0, -2.0, 3.0, -4.0});
  const auto f = extract_features(x);
  EXPECT_DOUBLE_EQ(f.abs_mean, 2.5);
  EXPECT_NEAR(f.rms, std::sqrt(30.0 / 4.0), 1e-12);
  EXPECT_DOUBLE_EQ(f.max_abs, 4.0);
  EXPECT_NEAR(f.crest, 4.0 / std::sqrt(7.5), 1e-12);
  EXPECT_NEAR(f.crest, 1.4606, 1e-4);
  EXPECT_DOUBLE_EQ(f.peak_to_peak, 7.0);
  // mean -0.5, deviations 1.5,-1.5,3.5,-3.5
  EXPECT_NEAR(f.std, std::sqrt((2.25 + 2.25 + 12.25 + 12.25) / 4.0), 1e-12);
  EXPECT_NEAR(f.skewness, 0.0, 1e-12);
  const double m2 = 7.25, m4 = (2 * std::pow(1.5, 4) + 2 * std::pow(3.5, 4)) / 4.0;
  EXPECT_NEAR(f.kurtosis, m4 / (m2 * m2), 1e-12);
  const double root_mean = (1.0 + std::sqrt(2.0) + std::sqrt(3.0) + 2.0) / 4.0;
  EXPECT_NEAR(f.clearance, 4.0 / (root_mean * root_mean), 1e-12);
  EXPECT_NEAR(f.shape, std::sqrt(7.5) / 2.5, 1e-12);
  EXPECT_NEAR(f.impulse, 4.0 / 2.5, 1e-12);
}

TEST(ExtractFeatures, ConstantFrameIsDegenerate) {
  try {
    extract_features(std::vector<double>(16, 3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateFrame);
  }
}

TEST(ExtractFeatures, ShortFrameRejected) {
  EXPECT_THROW(extract_features(std::vector<double>{3, 3, 3, 3}), Error);
  EXPECT_THROW(extract_features(gaussian(64, 1), 1), Error);
}

TEST(ExtractFeatures, AntisymmetricHasZeroSkew) {
  auto x = gaussian(5000, 2);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) x.push_back(-x[i]);
  EXPECT_NEAR(extract_features(x).skewness, 0.0, 1e-12);
}

TEST(ExtractFeatures, UniformOccupancyGivesLogBins) {
  // Values 0..63 in 8 equal-width bins: 8 values per bin.
  std::vector<double> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  EXPECT_NEAR(extract_features(x, 8).entropy, std::log(8.0), 1e-12);
  EXPECT_NEAR(histogram_entropy(x, 8), 2.0794, 1e-4);
}

TEST(ExtractFeatures, RatioIdentities) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = extract_features(gaussian(4096, seed, 0.3 + static_cast<double>(seed)));
    EXPECT_NEAR(f.crest * f.rms, f.max_abs, 1e-12 * f.max_abs);
    EXPECT_NEAR(f.impulse * f.abs_mean, f.max_abs, 1e-12 * f.max_abs);
    EXPECT_NEAR(f.shape * f.abs_mean, f.rms, 1e-12 * f.rms);
  }
}

TEST(ExtractFeatures, GaussianKurtosisIsThree) {
  EXPECT_NEAR(extract_features(gaussian(100000, 11)).kurtosis, 3.0, 0.3);
}

TEST(ExtractFeatures, ScaleLaws) {
  const auto x = gaussian(8192, 5);
  const auto base = extract_features(x);
  for (double c : {0.5, 2.0, 10.0}) {
    std::vector<double> y(x);
    for (double& v : y) v *= c;
    const auto f = extract_features(y);
    EXPECT_NEAR(f.abs_mean, c * base.abs_mean, 1e-12 * c * base.abs_mean);
    EXPECT_NEAR(f.std, c * base.std, 1e-12 * c * base.std);
    EXPECT_NEAR(f.rms, c * base.rms, 1e-12 * c * base.rms);
    EXPECT_NEAR(f.max_abs, c * base.max_abs, 1e-12 * c * base.max_abs);
    EXPECT_NEAR(f.peak_to_peak, c * base.peak_to_peak, 1e-12 * c * base.peak_to_peak);
    EXPECT_NEAR(f.skewness, base.skewness, 1e-10);
    EXPECT_NEAR(f.kurtosis, base.kurtosis, 1e-10);
    EXPECT_NEAR(f.crest, base.crest, 1e-10);
    EXPECT_NEAR(f.shape, base.shape, 1e-10);
    EXPECT_NEAR(f.impulse, base.impulse, 1e-10);
    EXPECT_NEAR(f.clearance, base.clearance, 1e-10);
    EXPECT_NEAR(f.entropy, base.entropy, 1e-12);
  }
}

TEST(ExtractFeatures, ValuesOrderMatchesLabels) {
  const auto f = extract_features(gaussian(256, 9));
  const auto v = f.values();
  EXPECT_EQ(v[kRmsIndex], f.rms);
  EXPECT_STREQ(kFeatureLabels[kRmsIndex], "rms");
  EXPECT_EQ(v[0], f.abs_mean);
  EXPECT_EQ(v[11], f.impulse);
}

TEST(FeatureMatrix, PreservesOrder) {
  std::vector<signal::SignalFrame> frames;
  for (std::size_t k = 0; k < 4; ++k) frames.push_back(frame_of(sinusoid(128, 1.0 + static_cast<double>(k)), k));
  const auto table = feature_matrix(frames);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_TRUE(table.missing.empty());
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(table.rows[k]->frame_index, k);
    EXPECT_NEAR(table.rows[k]->max_abs, 1.0 + static_cast<double>(k), 1e-2);
  }
}

TEST(FeatureMatrix, ConstantFrameFlaggedMissing) {
  std::vector<signal::SignalFrame> frames = {frame_of(sinusoid(64, 1.0), 0), frame_of(sinusoid(64, 2.0), 1),
                                             frame_of(std::vector<double>(64, 0.7), 2), frame_of(sinusoid(64, 3.0), 3)};
  const auto table = feature_matrix(frames);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_EQ(table.valid_count(), 3u);
  ASSERT_EQ(table.missing, std::vector<std::size_t>{2});
  EXPECT_FALSE(table.rows[2].has_value());
  EXPECT_TRUE(table.rows[3].has_value());
}

TEST(FeatureMatrix, AllDegenerate) {
  std::vector<signal::SignalFrame> frames = {frame_of(std::vector<double>(32, 1.0)), frame_of(std::vector<double>(32, 2.0))};
  try {
    feature_matrix(frames);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllFramesDegenerate);
  }
}

TEST(FeatureMatrix, DoubledSinusoidAmplitude) {
  std::vector<signal::SignalFrame> frames = {frame_of(sinusoid(1000, 1.0)), frame_of(sinusoid(1000, 2.0))};
  const auto table = feature_matrix(frames);
  EXPECT_NEAR(table.rows[1]->rms, 2.0 * table.rows[0]->rms, 1e-12);
  EXPECT_NEAR(table.rows[1]->crest, table.rows[0]->crest, 1e-12);
  EXPECT_NEAR(table.rows[0]->rms, 1.0 / std::sqrt(2.0), 1e-9);
}
