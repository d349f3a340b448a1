#pragma once

// Event detection on a sequence of five-band spectral PDFs.
//
// Every window is compared with the first one (the reference) by KL
// divergence and by the change in spread of the band-index distribution.
// Each trace gets a threshold of (1 + margin) times its maximum over the
// break-in windows. A trace crosses at the first post-break-in window that
// exceeds its threshold; the event is the later of the two crossings. A
// single window above threshold counts as a crossing (no debouncing).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bearing_survival/error.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/signal.hpp"

namespace bsurv::events {

using signal::kNumBands;
using signal::SpectralPdf;

inline constexpr double kDefaultEpsilon = 1e-9;
inline constexpr double kDefaultMargin = 0.10;
inline constexpr double kSimplexTolerance = 1e-9;

struct DivergenceTrace {
  std::vector<double> kl;
  std::vector<double> sd;
  double kl_threshold = 0.0;
  double sd_threshold = 0.0;
  std::size_t breakin_windows = 0;
  std::optional<std::size_t> kl_crossing;
  std::optional<std::size_t> sd_crossing;
  // Post-break-in window with the lowest KL before the event (or the end).
  std::optional<std::size_t> plateau_window;
};

struct EventAnnotation {
  std::optional<std::size_t> event_window;
  std::optional<double> event_time;  // seconds
  std::size_t total_windows = 0;

  bool observed() const { return event_window.has_value(); }
};

inline void validate_pdf(const SpectralPdf& pdf, const char* which) {
  double total = 0.0;
  for (double m : pdf.bin_mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kInvalidPdf, std::string(which) + " has a negative or non-finite mass");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::kInvalidPdf, std::string(which) + " masses sum to " + io::format_double(total));
  }
}

/// D_KL(p || q) after adding epsilon to every bin and renormalizing.
inline double kl_divergence(const SpectralPdf& p, const SpectralPdf& q, double epsilon = kDefaultEpsilon) {
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be positive");
  validate_pdf(p, "p");
  validate_pdf(q, "q");
  const double norm = 1.0 + static_cast<double>(kNumBands) * epsilon;
  double kl = 0.0;
  for (std::size_t i = 0; i < kNumBands; ++i) {
    const double pi = (p.bin_mass[i] + epsilon) / norm;
    const double qi = (q.bin_mass[i] + epsilon) / norm;
    kl += pi * std::log(pi / qi);
  }
  return kl < 0.0 ? 0.0 : kl;
}

/// Standard deviation of the band index (0..4) under the PDF's masses.
inline double band_index_sd(const SpectralPdf& p) {
  double mean = 0.0;
  for (std::size_t i = 0; i < kNumBands; ++i) mean += static_cast<double>(i) * p.bin_mass[i];
  double var = 0.0;
  for (std::size_t i = 0; i < kNumBands; ++i) {
    const double d = static_cast<double>(i) - mean;
    var += d * d * p.bin_mass[i];
  }
  return std::sqrt(std::max(var, 0.0));
}

inline double sd_discrepancy(const SpectralPdf& p, const SpectralPdf& q) {
  validate_pdf(p, "p");
  validate_pdf(q, "q");
  return std::abs(band_index_sd(q) - band_index_sd(p));
}

/// Break-in length used when the caller does not pick one: 10% of the record.
inline std::size_t default_breakin(std::size_t windows) { return std::max<std::size_t>(1, windows / 10); }

struct Detection {
  DivergenceTrace trace;
  EventAnnotation annotation;
};

namespace detail {

inline std::optional<std::size_t> first_crossing(const std::vector<double>& trace, std::size_t from,
                                                 double threshold) {
  for (std::size_t i = from; i < trace.size(); ++i) {
    if (trace[i] > threshold) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// `window_seconds` converts the event window into seconds on the annotation.
inline Detection detect_event(std::span<const SpectralPdf> pdfs, std::size_t breakin_windows,
                              double margin = kDefaultMargin, double window_seconds = 1.0,
                              double epsilon = kDefaultEpsilon) {
  if (breakin_windows < 1 || pdfs.size() <= breakin_windows) {
    throw Error(ErrorCode::kTooFewWindows, std::to_string(pdfs.size()) + " windows with a break-in of " +
                                               std::to_string(breakin_windows));
  }
  require(margin >= 0.0, ErrorCode::kInvalidArgument, "margin must be non-negative");

  Detection out;
  DivergenceTrace& trace = out.trace;
  const SpectralPdf& reference = pdfs.front();
  trace.kl.reserve(pdfs.size());
  trace.sd.reserve(pdfs.size());
  for (const auto& pdf : pdfs) {
    trace.kl.push_back(kl_divergence(pdf, reference, epsilon));
    trace.sd.push_back(sd_discrepancy(reference, pdf));
  }
  trace.breakin_windows = breakin_windows;
  const auto kl_peak = *std::max_element(trace.kl.begin(), trace.kl.begin() + static_cast<std::ptrdiff_t>(breakin_windows));
  const auto sd_peak = *std::max_element(trace.sd.begin(), trace.sd.begin() + static_cast<std::ptrdiff_t>(breakin_windows));
  trace.kl_threshold = (1.0 + margin) * kl_peak;
  trace.sd_threshold = (1.0 + margin) * sd_peak;
  trace.kl_crossing = detail::first_crossing(trace.kl, breakin_windows, trace.kl_threshold);
  trace.sd_crossing = detail::first_crossing(trace.sd, breakin_windows, trace.sd_threshold);

  EventAnnotation& ann = out.annotation;
  ann.total_windows = pdfs.size();
  if (trace.kl_crossing && trace.sd_crossing) {
    ann.event_window = std::max(*trace.kl_crossing, *trace.sd_crossing);
    ann.event_time = static_cast<double>(*ann.event_window) * window_seconds;
  }

  const std::size_t plateau_end = ann.event_window.value_or(pdfs.size());
  if (plateau_end > breakin_windows) {
    auto first = trace.kl.begin() + static_cast<std::ptrdiff_t>(breakin_windows);
    auto it = std::min_element(first, trace.kl.begin() + static_cast<std::ptrdiff_t>(plateau_end));
    trace.plateau_window = static_cast<std::size_t>(it - trace.kl.begin());
  }
  return out;
}

/// Columns: window,kl,sd,kl_threshold,sd_threshold
inline void write_trace_csv(std::ostream& out, const DivergenceTrace& trace) {
  out << "window,kl,sd,kl_threshold,sd_threshold\n";
  for (std::size_t i = 0; i < trace.kl.size(); ++i) {
    out << i << ',' << io::format_double(trace.kl[i]) << ',' << io::format_double(trace.sd[i]) << ','
        << io::format_double(trace.kl_threshold) << ',' << io::format_double(trace.sd_threshold) << '\n';
  }
}

}  // namespace bsurv::events
