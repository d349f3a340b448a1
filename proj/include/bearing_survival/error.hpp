#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bsurv {

enum class ErrorCode {
  kInvalidArgument,
  // signal
  kEmptySignal,
  kDegenerateSpectrum,
  kResolutionTooCoarse,
  // features
  kDegenerateFrame,
  kAllFramesDegenerate,
  // events
  kInvalidPdf,
  kTooFewWindows,
  // dataset
  kIo,
  kMalformedCsv,
  kNonMonotoneTimestamps,
  kEmptyBearing,
  kNoEvent,
  kDegenerateFeature,
  kOverlappingSplit,
  // models
  kEmptyInput,
  kNoEvents,
  kNonconvergence,
  kMonotoneLikelihood,
  kDimensionMismatch,
  kTooFewEvents,
  kBadModelDocument,
  // metrics
  kNoComparablePairs,
  kGridTooCoarse,
  kDegenerateCensoringKm,
  // simulate / experiment
  kEmptyGroup,
  kAllConfigurationsFailed,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptySignal: return "EmptySignal";
    case ErrorCode::kDegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::kResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kAllFramesDegenerate: return "AllFramesDegenerate";
    case ErrorCode::kInvalidPdf: return "InvalidPdf";
    case ErrorCode::kTooFewWindows: return "TooFewWindows";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kNonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::kEmptyBearing: return "EmptyBearing";
    case ErrorCode::kNoEvent: return "NoEvent";
    case ErrorCode::kDegenerateFeature: return "DegenerateFeature";
    case ErrorCode::kOverlappingSplit: return "OverlappingSplit";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNoEvents: return "NoEvents";
    case ErrorCode::kNonconvergence: return "Nonconvergence";
    case ErrorCode::kMonotoneLikelihood: return "MonotoneLikelihood";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewEvents: return "TooFewEvents";
    case ErrorCode::kBadModelDocument: return "BadModelDocument";
    case ErrorCode::kNoComparablePairs: return "NoComparablePairs";
    case ErrorCode::kGridTooCoarse: return "GridTooCoarse";
    case ErrorCode::kDegenerateCensoringKm: return "DegenerateCensoringKm";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kAllConfigurationsFailed: return "AllConfigurationsFailed";
  }
  return "Unknown";
}

/// Library-wide exception. The code is stable and meant for dispatch;
/// the message carries context (file, line, field, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace bsurv
