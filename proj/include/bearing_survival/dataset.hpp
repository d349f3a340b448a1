#pragma once

// Survival records built from annotated bearings, plus the augmentation,
// normalization and split steps that turn them into a learning problem.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bearing_survival/error.hpp"
#include "bearing_survival/events.hpp"
#include "bearing_survival/features.hpp"
#include "bearing_survival/io.hpp"

namespace bsurv::dataset {

struct SurvivalRecord {
  std::vector<double> covariates;
  double duration = 0.0;  // window units
  int event = 0;          // 1 observed, 0 censored
  std::string source_bearing;
};

struct SurvivalDataset {
  std::vector<SurvivalRecord> records;
  double censoring_rate = 0.0;
  std::vector<std::string> feature_names;

  std::size_t size() const { return records.size(); }
  std::size_t dimension() const { return feature_names.size(); }

  double censored_fraction() const {
    if (records.empty()) return 0.0;
    const auto censored = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.event == 0; });
    return static_cast<double>(censored) / static_cast<double>(records.size());
  }
};

inline std::vector<std::string> default_feature_names() {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= features::kNumFeatures; ++i) names.push_back("feature_" + std::to_string(i));
  return names;
}

/// Physical bearing behind an axis-split id ("Bearing1_1_X" -> "Bearing1_1").
inline std::string physical_bearing(const std::string& id) {
  if (id.size() > 2 && id[id.size() - 2] == '_' && (id.back() == 'X' || id.back() == 'Y')) {
    return id.substr(0, id.size() - 2);
  }
  return id;
}

inline void validate_record(const SurvivalRecord& r) {
  require(r.duration > 0.0 && std::isfinite(r.duration), ErrorCode::kInvalidArgument,
          "record duration must be positive and finite");
  require(r.event == 0 || r.event == 1, ErrorCode::kInvalidArgument, "record event must be 0 or 1");
  for (double v : r.covariates) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "record covariates must be finite");
  }
}

/// Slices [0, L) into `n_slices` equal parts. L is the event window for an
/// observed bearing, otherwise `censor_end` (windows on record). Each slice
/// yields one record: covariates are the mean feature vector of the slice's
/// windows.
///
/// Observed: duration = L - slice_end; the final slice (duration 0) is dropped.
/// Censored: duration = L - slice_start, so every slice is kept.
inline std::vector<SurvivalRecord> build_survival_records(const features::FeatureTable& table,
                                                          const events::EventAnnotation& annotation,
                                                          std::size_t n_slices, const std::string& source_bearing,
                                                          std::optional<double> censor_end = std::nullopt) {
  require(n_slices >= 2, ErrorCode::kInvalidArgument, "n_slices must be >= 2");
  double lifetime = 0.0;
  int event = 0;
  if (annotation.observed()) {
    lifetime = static_cast<double>(*annotation.event_window);
    event = 1;
  } else if (censor_end) {
    lifetime = *censor_end;
  } else {
    throw Error(ErrorCode::kNoEvent, "bearing " + source_bearing + " has neither an event nor a censoring time");
  }
  require(lifetime > 0.0, ErrorCode::kInvalidArgument, "lifetime must be positive");

  const double width = lifetime / static_cast<double>(n_slices);
  const std::size_t rows = table.rows.size();
  std::vector<SurvivalRecord> out;
  for (std::size_t s = 0; s < n_slices; ++s) {
    const double start = width * static_cast<double>(s);
    const double end = s + 1 == n_slices ? lifetime : width * static_cast<double>(s + 1);
    const double duration = event ? lifetime - end : lifetime - start;
    if (!(duration > 0.0)) continue;

    std::vector<double> mean(features::kNumFeatures, 0.0);
    std::size_t used = 0;
    const auto accumulate = [&](std::size_t w) {
      if (w >= rows || !table.rows[w]) return;
      const auto v = table.rows[w]->values();
      for (std::size_t k = 0; k < v.size(); ++k) mean[k] += v[k];
      ++used;
    };
    const auto first = static_cast<std::size_t>(std::ceil(start));
    for (std::size_t w = first; static_cast<double>(w) < end; ++w) accumulate(w);
    if (used == 0) accumulate(static_cast<std::size_t>(std::floor(start)));
    if (used == 0) continue;
    for (double& m : mean) m /= static_cast<double>(used);
    out.push_back({std::move(mean), duration, event, source_bearing});
  }
  return out;
}

/// Per-bearing bootstrap that always keeps the bearing's shortest- and
/// longest-duration records, so the resampled support matches the original.
/// Output has factor * input records, grouped by bearing in first-seen order.
inline std::vector<SurvivalRecord> constrained_bootstrap(std::span<const SurvivalRecord> records, std::size_t factor,
                                                         std::uint64_t seed) {
  require(factor >= 1, ErrorCode::kInvalidArgument, "bootstrap factor must be >= 1");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(records[i].source_bearing);
    if (inserted) order.push_back(records[i].source_bearing);
    it->second.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<SurvivalRecord> out;
  out.reserve(records.size() * factor);
  for (const auto& id : order) {
    const auto& members = groups[id];
    require(members.size() >= 2, ErrorCode::kInvalidArgument, "bearing " + id + " needs >= 2 records to bootstrap");
    std::size_t lo = members.front(), hi = members.back();
    for (std::size_t i : members) {
      if (records[i].duration < records[lo].duration) lo = i;
    }
    for (auto it = members.rbegin(); it != members.rend(); ++it) {
      if (records[*it].duration > records[hi].duration) hi = *it;
    }
    if (lo == hi) hi = lo == members.front() ? members.back() : members.front();
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    out.push_back(records[lo]);
    out.push_back(records[hi]);
    const std::size_t target = members.size() * factor;
    for (std::size_t k = 2; k < target; ++k) out.push_back(records[members[pick(rng)]]);
  }
  return out;
}

/// Brings the censored count to floor(rate * n) by censoring uniformly chosen
/// observed records at a time drawn uniformly from (0, duration).
inline SurvivalDataset apply_censoring(std::vector<SurvivalRecord> records, double rate, std::uint64_t seed,
                                       std::vector<std::string> feature_names = default_feature_names()) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::kInvalidArgument, "censoring rate must lie in [0, 1)");
  const auto target = static_cast<std::size_t>(std::floor(rate * static_cast<double>(records.size())));
  std::vector<std::size_t> observed;
  std::size_t already = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].event == 1) observed.push_back(i);
    else ++already;
  }
  std::mt19937_64 rng(seed);
  if (target > already) {
    const std::size_t needed = std::min(target - already, observed.size());
    std::shuffle(observed.begin(), observed.end(), rng);
    std::sort(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(needed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < needed; ++k) {
      auto& r = records[observed[k]];
      double u = 0.0;
      while (u <= 0.0) u = unit(rng);
      r.duration *= u;
      r.event = 0;
    }
  }
  return {std::move(records), rate, std::move(feature_names)};
}

struct Scaler {
  std::vector<std::size_t> kept;  // column indices of the input kept after fitting
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::string> names;  // kept column names

  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) out[k] = (x[kept[k]] - mean[k]) / std[k];
    return out;
  }
};

struct NormalizedSplit {
  SurvivalDataset train;
  SurvivalDataset test;
  Scaler scaler;
  std::vector<std::string> dropped;  // degenerate columns removed from both sets
};

/// Z-scores every covariate with TRAIN statistics (population std).
/// Columns constant on train are dropped from both sets and listed in `dropped`.
inline NormalizedSplit zscore_fit_transform(const SurvivalDataset& train, const SurvivalDataset& test) {
  require(!train.records.empty(), ErrorCode::kInvalidArgument, "z-score needs a non-empty train set");
  const std::size_t d = train.feature_names.size();
  const double n = static_cast<double>(train.records.size());
  NormalizedSplit out;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const auto& r : train.records) mean += r.covariates.at(k);
    mean /= n;
    double var = 0.0;
    for (const auto& r : train.records) var += (r.covariates[k] - mean) * (r.covariates[k] - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      out.dropped.push_back(train.feature_names[k]);
      continue;
    }
    out.scaler.kept.push_back(k);
    out.scaler.mean.push_back(mean);
    out.scaler.std.push_back(sd);
    out.scaler.names.push_back(train.feature_names[k]);
  }
  if (out.scaler.kept.empty()) throw Error(ErrorCode::kDegenerateFeature, "every covariate is constant on train");
  const auto apply = [&](const SurvivalDataset& in) {
    SurvivalDataset res{{}, in.censoring_rate, out.scaler.names};
    res.records.reserve(in.records.size());
    for (const auto& r : in.records) res.records.push_back({out.scaler.transform(r.covariates), r.duration, r.event, r.source_bearing});
    return res;
  };
  out.train = apply(train);
  out.test = apply(test);
  return out;
}

/// Routes records by physical bearing; axis-split ids follow their source.
/// Records of bearings in neither list are dropped.
inline std::pair<SurvivalDataset, SurvivalDataset> split_by_bearing(const SurvivalDataset& data,
                                                                    const std::vector<std::string>& train_ids,
                                                                    const std::vector<std::string>& test_ids) {
  require(!train_ids.empty() && !test_ids.empty(), ErrorCode::kInvalidArgument, "train and test id lists must be non-empty");
  const std::set<std::string> train_set(train_ids.begin(), train_ids.end());
  const std::set<std::string> test_set(test_ids.begin(), test_ids.end());
  for (const auto& id : train_set) {
    if (test_set.count(id)) throw Error(ErrorCode::kOverlappingSplit, "bearing " + id + " is in both train and test");
  }
  SurvivalDataset train{{}, data.censoring_rate, data.feature_names};
  SurvivalDataset test{{}, data.censoring_rate, data.feature_names};
  for (const auto& r : data.records) {
    const auto phys = physical_bearing(r.source_bearing);
    if (train_set.count(phys)) train.records.push_back(r);
    else if (test_set.count(phys)) test.records.push_back(r);
  }
  return {std::move(train), std::move(test)};
}

/// Header: <feature names>,duration,event,source_bearing
inline void write_csv(std::ostream& out, const SurvivalDataset& data) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << "duration,event,source_bearing\n";
  for (const auto& r : data.records) {
    for (double v : r.covariates) out << io::format_double(v) << ',';
    out << io::format_double(r.duration) << ',' << r.event << ',' << r.source_bearing << '\n';
  }
}

inline SurvivalDataset read_csv(std::istream& in, const std::string& label = "dataset") {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kMalformedCsv, label + ": missing header");
  const auto header = io::split(line);
  if (header.size() < 4 || header[header.size() - 3] != "duration" || header[header.size() - 2] != "event" ||
      header.back() != "source_bearing") {
    throw Error(ErrorCode::kMalformedCsv, label + ": header must end with duration,event,source_bearing");
  }
  SurvivalDataset data;
  for (std::size_t k = 0; k + 3 < header.size(); ++k) data.feature_names.emplace_back(header[k]);
  const std::size_t d = data.feature_names.size();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split(line);
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedCsv, label + " line " + std::to_string(lineno) + ": " + why);
    };
    if (cells.size() != d + 3) throw fail("expected " + std::to_string(d + 3) + " fields");
    SurvivalRecord r;
    for (std::size_t k = 0; k < d + 2; ++k) {
      auto v = io::parse_double(cells[k]);
      if (!v) throw fail("non-numeric field " + std::to_string(k + 1));
      if (k < d) r.covariates.push_back(*v);
      else if (k == d) r.duration = *v;
      else r.event = static_cast<int>(*v);
    }
    r.source_bearing = std::string(cells.back());
    try {
      validate_record(r);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    data.records.push_back(std::move(r));
  }
  data.censoring_rate = data.censored_fraction();
  return data;
}

}  // namespace bsurv::dataset
