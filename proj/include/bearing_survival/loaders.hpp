#pragma once

// Readers for the XJTU-SY and PRONOSTIA raw vibration archives.
//
// XJTU:      <root>/<bearing>/<n>.csv, two columns (horizontal, vertical).
// PRONOSTIA: <root>/<bearing>/acc_<n>.csv, six columns
//            (hour, minute, second, microsecond, horizontal, vertical).
// Files are concatenated per bearing in natural order. A leading header row
// is detected (non-numeric first field) and skipped.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "bearing_survival/error.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/signal.hpp"

namespace bsurv::dataset {

inline constexpr double kArchiveSampleRate = 25600.0;

struct OperatingCondition {
  double load_kn = 0.0;
  double speed_rpm = 0.0;
};

struct BearingRecord {
  std::string bearing_id;
  signal::RawChannel horizontal;
  signal::RawChannel vertical;
  OperatingCondition condition;
  std::vector<std::size_t> file_lengths;  // rows per acquisition file, in order
};

/// A single-axis view of a bearing, treated as an independent unit.
struct PseudoBearing {
  std::string id;
  signal::RawChannel channel;
  OperatingCondition condition;
  std::vector<std::size_t> file_lengths;
};

inline std::vector<PseudoBearing> axis_split(const BearingRecord& record) {
  return {
      {record.bearing_id + signal::axis_suffix(signal::Axis::kHorizontal), record.horizontal, record.condition,
       record.file_lengths},
      {record.bearing_id + signal::axis_suffix(signal::Axis::kVertical), record.vertical, record.condition,
       record.file_lengths},
  };
}

inline std::vector<PseudoBearing> axis_split(const std::vector<BearingRecord>& records) {
  std::vector<PseudoBearing> out;
  for (const auto& r : records) {
    for (auto& p : axis_split(r)) out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

namespace fs = std::filesystem;

inline std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories, const std::string& prefix = {}) {
  std::vector<fs::path> out;
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot list '" + dir.string() + "': " + ec.message());
  for (const auto& entry : it) {
    const auto name = entry.path().filename().string();
    if (directories) {
      if (entry.is_directory()) out.push_back(entry.path());
    } else if (entry.is_regular_file() && entry.path().extension() == ".csv" && name.rfind(prefix, 0) == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return io::natural_less(a.filename().string(), b.filename().string()); });
  return out;
}

inline char detect_separator(std::string_view line) {
  if (line.find(',') == std::string_view::npos && line.find(';') != std::string_view::npos) return ';';
  return ',';
}

// Appends one file's rows; returns the number of rows read.
inline std::size_t read_acceleration_file(const fs::path& path, std::size_t columns, BearingRecord& record) {
  const std::string text = io::read_file(path);
  std::string_view rest(text);
  std::size_t lineno = 0, rows = 0;
  bool first = true;
  char sep = ',';
  double last_stamp = -1.0;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++lineno;
    if (io::trim(line).empty()) continue;
    if (first) sep = detect_separator(line);
    const auto cells = io::split(line, sep);
    const auto malformed = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedCsv, path.string() + " line " + std::to_string(lineno) + ": " + why);
    };
    if (first && !cells.empty() && !io::parse_double(cells.front())) {
      first = false;
      continue;  // header row
    }
    first = false;
    if (cells.size() != columns) {
      throw malformed("expected " + std::to_string(columns) + " fields, found " + std::to_string(cells.size()));
    }
    double values[6] = {};
    for (std::size_t k = 0; k < columns; ++k) {
      auto v = io::parse_double(cells[k]);
      if (!v) throw malformed("non-numeric field '" + std::string(cells[k]) + "'");
      values[k] = *v;
    }
    if (columns == 6) {
      const double stamp = values[0] * 3600.0 + values[1] * 60.0 + values[2] + values[3] * 1e-6;
      if (stamp < last_stamp) {
        throw Error(ErrorCode::kNonMonotoneTimestamps, path.string() + " line " + std::to_string(lineno));
      }
      last_stamp = stamp;
    }
    record.horizontal.samples.push_back(values[columns - 2]);
    record.vertical.samples.push_back(values[columns - 1]);
    ++rows;
  }
  return rows;
}

inline std::vector<BearingRecord> load_archive(const fs::path& root, std::size_t columns, const std::string& prefix,
                                               OperatingCondition condition) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, "archive directory '" + root.string() + "' not found");
  std::vector<BearingRecord> out;
  for (const auto& dir : sorted_entries(root, true)) {
    BearingRecord record;
    record.bearing_id = dir.filename().string();
    record.horizontal = {{}, kArchiveSampleRate, signal::Axis::kHorizontal};
    record.vertical = {{}, kArchiveSampleRate, signal::Axis::kVertical};
    record.condition = condition;
    for (const auto& file : sorted_entries(dir, false, prefix)) {
      const std::size_t rows = read_acceleration_file(file, columns, record);
      if (rows > 0) record.file_lengths.push_back(rows);
    }
    if (record.horizontal.samples.empty()) {
      throw Error(ErrorCode::kEmptyBearing, "bearing directory '" + dir.string() + "' holds no samples");
    }
    out.push_back(std::move(record));
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyBearing, "archive '" + root.string() + "' has no bearing directories");
  return out;
}

}  // namespace detail

inline std::vector<BearingRecord> load_xjtu(const std::filesystem::path& root,
                                            OperatingCondition condition = {12.0, 2100.0}) {
  return detail::load_archive(root, 2, "", condition);
}

inline std::vector<BearingRecord> load_pronostia(const std::filesystem::path& root,
                                                 OperatingCondition condition = {5.0, 1500.0}) {
  return detail::load_archive(root, 6, "acc_", condition);
}

/// Writes one bearing in the XJTU layout: <root>/<id>/<k+1>.csv per window.
inline void write_xjtu_bearing(const std::filesystem::path& root, const std::string& id,
                               const signal::RawChannel& horizontal, const signal::RawChannel& vertical,
                               std::size_t rows_per_file) {
  require(horizontal.samples.size() == vertical.samples.size(), ErrorCode::kInvalidArgument,
          "channels must have equal length");
  require(rows_per_file > 0, ErrorCode::kInvalidArgument, "rows_per_file must be positive");
  const std::size_t files = horizontal.samples.size() / rows_per_file;
  for (std::size_t f = 0; f < files; ++f) {
    auto out = io::open_output(root / id / (std::to_string(f + 1) + ".csv"));
    out << "Horizontal_vibration_signals,Vertical_vibration_signals\n";
    for (std::size_t i = f * rows_per_file; i < (f + 1) * rows_per_file; ++i) {
      out << io::format_double(horizontal.samples[i]) << ',' << io::format_double(vertical.samples[i]) << '\n';
    }
  }
}

}  // namespace bsurv::dataset
