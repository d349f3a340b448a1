#pragma once

// Twelve time-domain features per signal frame.
//
// Moments are population (1/N) moments about the arithmetic mean.
// Peak-to-peak is max(x) - min(x) over signed values; the clearance
// factor uses the peak |x| as its numerator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bearing_survival/error.hpp"
#include "bearing_survival/signal.hpp"

namespace bsurv::features {

inline constexpr std::size_t kNumFeatures = 12;
inline constexpr std::size_t kDefaultEntropyBins = 64;

inline constexpr std::array<const char*, kNumFeatures> kFeatureLabels = {
    "abs_mean", "std",  "skewness",     "kurtosis", "entropy",   "rms",
    "max_abs",  "peak_to_peak", "crest", "clearance", "shape", "impulse"};

// Position of RMS in FeatureVector order (feature_6 in exported CSVs).
inline constexpr std::size_t kRmsIndex = 5;

struct FeatureVector {
  double abs_mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double entropy = 0.0;
  double rms = 0.0;
  double max_abs = 0.0;
  double peak_to_peak = 0.0;
  double crest = 0.0;
  double clearance = 0.0;
  double shape = 0.0;
  double impulse = 0.0;
  std::size_t frame_index = 0;

  std::array<double, kNumFeatures> values() const {
    return {abs_mean, std, skewness, kurtosis, entropy, rms, max_abs, peak_to_peak, crest, clearance, shape, impulse};
  }
};

/// Shannon entropy (nats) of an equal-width histogram spanning [min, max].
inline double histogram_entropy(std::span<const double> x, std::size_t bins) {
  require(bins >= 2, ErrorCode::kInvalidArgument, "entropy_bins must be >= 2");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(bins);
  if (!(width > 0.0)) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : x) {
    auto k = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(k, bins - 1)]++;
  }
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

inline FeatureVector extract_features(std::span<const double> x, std::size_t entropy_bins = kDefaultEntropyBins,
                                      std::size_t frame_index = 0) {
  require(x.size() >= signal::kMinFrameLength, ErrorCode::kInvalidArgument, "feature frame needs >= 16 samples");
  require(entropy_bins >= 2, ErrorCode::kInvalidArgument, "entropy_bins must be >= 2");
  const double n = static_cast<double>(x.size());

  double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0, sum_sqrt_abs = 0.0;
  double max_abs = 0.0;
  double lo = x.front(), hi = x.front();
  for (double v : x) {
    sum += v;
    sum_abs += std::abs(v);
    sum_sq += v * v;
    sum_sqrt_abs += std::sqrt(std::abs(v));
    max_abs = std::max(max_abs, std::abs(v));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sigma = std::sqrt(m2);
  if (!(sigma > 1e-12 * max_abs)) {
    throw Error(ErrorCode::kDegenerateFrame, "frame " + std::to_string(frame_index) + " has zero standard deviation");
  }

  FeatureVector f;
  f.frame_index = frame_index;
  f.abs_mean = sum_abs / n;
  f.std = sigma;
  f.skewness = m3 / (sigma * sigma * sigma);
  f.kurtosis = m4 / (m2 * m2);
  f.entropy = histogram_entropy(x, entropy_bins);
  f.rms = std::sqrt(sum_sq / n);
  f.max_abs = max_abs;
  f.peak_to_peak = hi - lo;
  f.crest = max_abs / f.rms;
  const double root_mean = sum_sqrt_abs / n;
  f.clearance = max_abs / (root_mean * root_mean);
  f.shape = f.rms / f.abs_mean;
  f.impulse = max_abs / f.abs_mean;
  return f;
}

inline FeatureVector extract_features(const signal::SignalFrame& frame,
                                      std::size_t entropy_bins = kDefaultEntropyBins) {
  return extract_features(frame.values, entropy_bins, frame.frame_index);
}

/// One row per input frame. Degenerate frames stay in place as empty rows
/// and are listed in `missing`.
struct FeatureTable {
  std::vector<std::optional<FeatureVector>> rows;
  std::vector<std::size_t> missing;

  std::size_t valid_count() const { return rows.size() - missing.size(); }
};

inline FeatureTable feature_matrix(std::span<const signal::SignalFrame> frames,
                                   std::size_t entropy_bins = kDefaultEntropyBins) {
  require(!frames.empty(), ErrorCode::kInvalidArgument, "feature_matrix needs at least one frame");
  FeatureTable table;
  table.rows.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      table.rows.emplace_back(extract_features(frames[i], entropy_bins));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateFrame) throw;
      table.rows.emplace_back(std::nullopt);
      table.missing.push_back(i);
    }
  }
  if (table.valid_count() == 0) {
    throw Error(ErrorCode::kAllFramesDegenerate, "none of " + std::to_string(frames.size()) + " frames yields features");
  }
  return table;
}

}  // namespace bsurv::features
