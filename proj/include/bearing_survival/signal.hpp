#pragma once

// Framing, analytic-signal envelopes, envelope spectra and the five-band
// characteristic-frequency PDF consumed by event detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "bearing_survival/error.hpp"

namespace bsurv::signal {

enum class Axis { kHorizontal, kVertical };

inline std::string axis_suffix(Axis axis) { return axis == Axis::kHorizontal ? "_X" : "_Y"; }

struct RawChannel {
  std::vector<double> samples;  // acceleration, g
  double sample_rate = 25600.0;
  Axis axis = Axis::kHorizontal;
};

struct SignalFrame {
  std::vector<double> values;
  std::size_t frame_index = 0;
  double start_time = 0.0;  // seconds
};

struct BearingGeometry {
  int n_balls = 8;
  double ball_diameter_mm = 7.92;
  double pitch_diameter_mm = 34.55;
  double contact_angle_rad = 0.0;
  double shaft_rate_hz = 35.0;

  void validate() const {
    require(n_balls >= 3, ErrorCode::kInvalidArgument, "geometry: n_balls must be >= 3");
    require(ball_diameter_mm > 0.0 && ball_diameter_mm < pitch_diameter_mm, ErrorCode::kInvalidArgument,
            "geometry: need 0 < ball_diameter < pitch_diameter");
    require(shaft_rate_hz > 0.0, ErrorCode::kInvalidArgument, "geometry: shaft_rate must be positive");
    require(contact_angle_rad >= 0.0 && contact_angle_rad < std::numbers::pi / 2, ErrorCode::kInvalidArgument,
            "geometry: contact_angle must lie in [0, pi/2)");
  }
};

/// LDK UER204, the XJTU-SY test bearing, at 2100 rpm.
inline BearingGeometry xjtu_geometry() { return {8, 7.92, 34.55, 0.0, 35.0}; }

/// PRONOSTIA (FEMTO) test bearing at 1500 rpm.
inline BearingGeometry pronostia_geometry() { return {13, 3.5, 25.6, 0.0, 25.0}; }

// Band order used everywhere a five-bin quantity appears.
enum class Band : std::size_t { kFS = 0, kFTF = 1, kBSF = 2, kBPFO = 3, kBPFI = 4 };
inline constexpr std::size_t kNumBands = 5;
inline constexpr std::array<const char*, kNumBands> kBandNames = {"FS", "FTF", "BSF", "BPFO", "BPFI"};

inline Band band_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kNumBands; ++i) {
    if (name == kBandNames[i]) return static_cast<Band>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown band '" + name + "'");
}

/// Centers in band order (FS, FTF, BSF, BPFO, BPFI).
inline std::array<double, kNumBands> defect_frequencies(const BearingGeometry& g) {
  g.validate();
  const double ratio = g.ball_diameter_mm / g.pitch_diameter_mm * std::cos(g.contact_angle_rad);
  const double fr = g.shaft_rate_hz;
  const double n = g.n_balls;
  return {
      fr,
      fr / 2.0 * (1.0 - ratio),
      g.pitch_diameter_mm * fr / (2.0 * g.ball_diameter_mm) * (1.0 - ratio * ratio),
      n * fr / 2.0 * (1.0 - ratio),
      n * fr / 2.0 * (1.0 + ratio),
  };
}

struct SpectralPdf {
  std::array<double, kNumBands> bin_mass{};
  std::array<double, kNumBands> bin_centers{};
  std::size_t window_index = 0;
};

struct Spectrum {
  std::vector<double> frequency;  // Hz, k * resolution
  std::vector<double> magnitude;  // single-sided amplitude
  double resolution = 0.0;        // sample_rate / N
};

inline constexpr std::size_t kMinFrameLength = 16;

/// Non-overlapping frames; the trailing partial frame is discarded.
inline std::vector<SignalFrame> frame_signal(const RawChannel& channel, std::size_t frame_len) {
  require(frame_len >= kMinFrameLength, ErrorCode::kInvalidArgument, "frame_len must be >= 16");
  require(channel.sample_rate > 0.0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  if (channel.samples.size() < frame_len) {
    throw Error(ErrorCode::kEmptySignal, std::to_string(channel.samples.size()) +
                                             " samples is fewer than one frame of " + std::to_string(frame_len));
  }
  const std::size_t count = channel.samples.size() / frame_len;
  std::vector<SignalFrame> frames;
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto first = channel.samples.begin() + static_cast<std::ptrdiff_t>(k * frame_len);
    frames.push_back({std::vector<double>(first, first + static_cast<std::ptrdiff_t>(frame_len)), k,
                      static_cast<double>(k * frame_len) / channel.sample_rate});
  }
  return frames;
}

/// Magnitude of the analytic signal, built in the frequency domain:
/// keep DC (and Nyquist for even N), double positive bins, zero negative bins.
inline std::vector<double> analytic_envelope(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= kMinFrameLength, ErrorCode::kInvalidArgument, "envelope needs at least 16 samples");
  std::vector<std::complex<double>> time(values.begin(), values.end());
  std::vector<std::complex<double>> freq;
  Eigen::FFT<double> fft;
  fft.fwd(freq, time);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      freq[k] *= 2.0;
    } else if (!(n % 2 == 0 && k == half)) {
      freq[k] = 0.0;
    }
  }
  fft.inv(time, freq);
  std::vector<double> envelope(n);
  std::transform(time.begin(), time.end(), envelope.begin(), [](const auto& z) { return std::abs(z); });
  return envelope;
}

inline std::vector<double> analytic_envelope(const SignalFrame& frame) { return analytic_envelope(frame.values); }

/// One-sided amplitude spectrum of the mean-removed sequence.
/// A tone a*cos(2*pi*f*t) on a spectral line reads back as magnitude a.
inline Spectrum envelope_spectrum(std::span<const double> envelope, double sample_rate) {
  const std::size_t n = envelope.size();
  require(n >= kMinFrameLength, ErrorCode::kInvalidArgument, "spectrum needs at least 16 samples");
  require(sample_rate > 0.0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  double mean = 0.0;
  for (double v : envelope) mean += v;
  mean /= static_cast<double>(n);
  std::vector<std::complex<double>> time(n);
  for (std::size_t i = 0; i < n; ++i) time[i] = envelope[i] - mean;
  std::vector<std::complex<double>> freq;
  Eigen::FFT<double> fft;
  fft.fwd(freq, time);

  Spectrum out;
  out.resolution = sample_rate / static_cast<double>(n);
  const std::size_t lines = n / 2 + 1;
  out.frequency.resize(lines);
  out.magnitude.resize(lines);
  for (std::size_t k = 0; k < lines; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    out.frequency[k] = static_cast<double>(k) * out.resolution;
    out.magnitude[k] = std::abs(freq[k]) * (edge ? 1.0 : 2.0) / static_cast<double>(n);
  }
  return out;
}

/// Per-band half-widths: max(relative * center, min_halfwidth_hz).
struct BandSpec {
  double relative = 0.05;
  double min_halfwidth_hz = 0.0;

  double halfwidth(double center) const { return std::max(relative * center, min_halfwidth_hz); }
};

namespace detail {

inline SpectralPdf bin_spectrum(const Spectrum& spectrum, const std::array<double, kNumBands>& centers,
                                const std::array<double, kNumBands>& halfwidths) {
  SpectralPdf pdf;
  pdf.bin_centers = centers;
  double total = 0.0;
  for (std::size_t b = 0; b < kNumBands; ++b) {
    require(halfwidths[b] > 0.0, ErrorCode::kInvalidArgument, "band half-width must be positive");
    const double lo = centers[b] - halfwidths[b];
    const double hi = centers[b] + halfwidths[b];
    auto first = std::lower_bound(spectrum.frequency.begin(), spectrum.frequency.end(), lo);
    auto last = std::upper_bound(spectrum.frequency.begin(), spectrum.frequency.end(), hi);
    if (first >= last) {
      throw Error(ErrorCode::kResolutionTooCoarse,
                  std::string("no spectral line within the ") + kBandNames[b] + " band [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "] Hz at resolution " + std::to_string(spectrum.resolution));
    }
    double mass = 0.0;
    for (auto it = first; it != last; ++it) {
      mass += spectrum.magnitude[static_cast<std::size_t>(it - spectrum.frequency.begin())];
    }
    pdf.bin_mass[b] = mass;
    total += mass;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kDegenerateSpectrum, "zero energy in all five bands");
  for (double& m : pdf.bin_mass) m /= total;
  return pdf;
}

}  // namespace detail

inline SpectralPdf characteristic_bins(const Spectrum& spectrum, const BearingGeometry& geometry,
                                       const BandSpec& band = {}) {
  const auto centers = defect_frequencies(geometry);
  std::array<double, kNumBands> halfwidths{};
  for (std::size_t b = 0; b < kNumBands; ++b) halfwidths[b] = band.halfwidth(centers[b]);
  return detail::bin_spectrum(spectrum, centers, halfwidths);
}

/// Same half-width (Hz) for every band.
inline SpectralPdf characteristic_bins(const Spectrum& spectrum, const BearingGeometry& geometry,
                                       double band_halfwidth_hz) {
  const auto centers = defect_frequencies(geometry);
  std::array<double, kNumBands> halfwidths{};
  halfwidths.fill(band_halfwidth_hz);
  return detail::bin_spectrum(spectrum, centers, halfwidths);
}

/// Frame -> envelope -> envelope spectrum -> five-band PDF.
inline SpectralPdf window_pdf(const SignalFrame& frame, double sample_rate, const BearingGeometry& geometry,
                              const BandSpec& band = {}) {
  const auto spectrum = envelope_spectrum(analytic_envelope(frame), sample_rate);
  SpectralPdf pdf = characteristic_bins(spectrum, geometry, band);
  pdf.window_index = frame.frame_index;
  return pdf;
}

}  // namespace bsurv::signal
