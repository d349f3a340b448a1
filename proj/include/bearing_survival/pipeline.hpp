#pragma once

// End-to-end commands behind the CLI: detect, prepare, benchmark, simulate.
// Every file is written below PipelineConfig::output_dir.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bearing_survival/dataset.hpp"
#include "bearing_survival/error.hpp"
#include "bearing_survival/events.hpp"
#include "bearing_survival/experiment.hpp"
#include "bearing_survival/features.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/loaders.hpp"
#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models.hpp"
#include "bearing_survival/signal.hpp"
#include "bearing_survival/simulate.hpp"

namespace bsurv::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoModel = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;

struct PipelineConfig {
  std::string dataset = "xjtu";  // xjtu | pronostia
  std::string data_path;
  std::string output_dir = "out";
  std::size_t frame_len = 0;  // 0: one acquisition file per window
  std::size_t entropy_bins = features::kDefaultEntropyBins;
  std::size_t breakin_windows = 0;  // 0: 10% of the windows
  double margin = events::kDefaultMargin;
  double band_relative = 0.05;
  std::size_t n_slices = 20;
  std::size_t bootstrap_factor = 5;
  double censoring_rate = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::string> models{"coxph", "rsf", "coxboost", "weibull_aft"};
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  // search space overrides
  std::size_t n_iterations = 10;
  std::size_t n_folds = 5;
  std::size_t timing_repeats = 3;
  std::vector<int> cox_max_iter{50, 100, 200};
  std::vector<double> cox_tol{1e-5, 1e-7, 1e-9};
  std::vector<int> rsf_trees{50, 100, 200};
  std::vector<int> rsf_depth{3, 5, 7, 0};  // 0: unlimited
  int rsf_min_leaf = 5;
  std::vector<double> boost_rate{0.05, 0.1, 0.3};
  std::vector<int> boost_depth{1, 2, 3};
  std::vector<int> boost_rounds{100, 200};
  std::vector<double> aft_penalizer{0.0, 0.01, 0.1, 1.0};

  double rms_threshold = 2.0;  // raw RMS units
  std::size_t simulated_per_group = 500;
  bool table2 = false;

  // simulate
  std::string sim_kind = "archive";  // archive | cohort
  std::size_t sim_bearings = 5;
  std::size_t sim_censored_bearings = 0;  // bearings without a fault onset
  std::size_t sim_windows = 100;
  std::size_t sim_window_len = 32768;
  double sim_noise = 0.05;
  double sim_growth = 0.06;
  std::size_t cohort_records = 1000;
  std::size_t cohort_bearings = 10;
  std::size_t cohort_test_bearings = 4;

  fs::path out(const fs::path& relative) const { return fs::path(output_dir) / relative; }

  /// Throws kInvalidArgument naming the offending field.
  void validate(const std::string& command) const {
    const auto check = [](bool ok, const std::string& field, const std::string& what) {
      if (!ok) throw Error(ErrorCode::kInvalidArgument, field + ": " + what);
    };
    check(!output_dir.empty(), "output_dir", "must not be empty");
    if (command == "detect" || command == "prepare") {
      check(dataset == "xjtu" || dataset == "pronostia", "dataset", "must be xjtu or pronostia");
      check(!data_path.empty(), "data_path", "must be set");
      check(frame_len == 0 || frame_len >= signal::kMinFrameLength, "frame_len", "must be 0 or >= 16");
      check(entropy_bins >= 2, "entropy_bins", "must be >= 2");
      check(margin >= 0.0, "margin", "must be >= 0");
      check(band_relative > 0.0 && band_relative < 0.5, "band_relative", "must lie in (0, 0.5)");
    }
    if (command == "prepare") {
      check(n_slices >= 2, "n_slices", "must be >= 2");
      check(bootstrap_factor >= 1, "bootstrap_factor", "must be >= 1");
      check(censoring_rate >= 0.0 && censoring_rate < 1.0, "censoring_rate", "must lie in [0, 1)");
      std::set<std::string> train(train_ids.begin(), train_ids.end());
      for (const auto& id : test_ids) check(!train.count(id), "test_ids", "bearing " + id + " is also in train_ids");
    }
    if (command == "benchmark") {
      check(!models.empty(), "models", "must list at least one model");
      for (const auto& m : models) {
        try {
          experiment::model_kind_from_string(m);
        } catch (const Error&) {
          check(false, "models", "unknown model '" + m + "'");
        }
      }
      check(n_iterations >= 1, "n_iterations", "must be >= 1");
      check(n_folds >= 2, "n_folds", "must be >= 2");
      check(timing_repeats >= 1, "timing_repeats", "must be >= 1");
      check(!cox_max_iter.empty() && std::all_of(cox_max_iter.begin(), cox_max_iter.end(), [](int v) { return v >= 1; }),
            "cox_max_iter", "values must be >= 1");
      check(!cox_tol.empty() && std::all_of(cox_tol.begin(), cox_tol.end(), [](double v) { return v > 0.0; }), "cox_tol",
            "values must be > 0");
      check(!rsf_trees.empty() && std::all_of(rsf_trees.begin(), rsf_trees.end(), [](int v) { return v >= 1; }),
            "rsf_trees", "values must be >= 1");
      check(!rsf_depth.empty() && std::all_of(rsf_depth.begin(), rsf_depth.end(), [](int v) { return v >= 0; }),
            "rsf_depth", "values must be >= 0 (0 = unlimited)");
      check(rsf_min_leaf >= 1, "rsf_min_leaf", "must be >= 1");
      check(!boost_rate.empty() && std::all_of(boost_rate.begin(), boost_rate.end(), [](double v) { return v > 0.0 && v <= 1.0; }),
            "boost_rate", "values must lie in (0, 1]");
      check(!boost_depth.empty() && std::all_of(boost_depth.begin(), boost_depth.end(), [](int v) { return v >= 1; }),
            "boost_depth", "values must be >= 1");
      check(!boost_rounds.empty() && std::all_of(boost_rounds.begin(), boost_rounds.end(), [](int v) { return v >= 1; }),
            "boost_rounds", "values must be >= 1");
      check(!aft_penalizer.empty() && std::all_of(aft_penalizer.begin(), aft_penalizer.end(), [](double v) { return v >= 0.0; }),
            "aft_penalizer", "values must be >= 0");
    }
    if (command == "simulate") {
      check(sim_kind == "archive" || sim_kind == "cohort", "sim_kind", "must be archive or cohort");
      check(sim_bearings >= 2, "sim_bearings", "must be >= 2");
      check(sim_censored_bearings <= sim_bearings, "sim_censored_bearings", "must not exceed sim_bearings");
      check(sim_windows >= 10, "sim_windows", "must be >= 10");
      check(sim_window_len >= 256, "sim_window_len", "must be >= 256");
      check(sim_noise >= 0.0, "sim_noise", "must be >= 0");
      check(sim_growth > 0.0, "sim_growth", "must be > 0");
      check(censoring_rate >= 0.0 && censoring_rate < 1.0, "censoring_rate", "must lie in [0, 1)");
      check(cohort_bearings >= 2, "cohort_bearings", "must be >= 2");
      check(cohort_test_bearings >= 1 && cohort_test_bearings < cohort_bearings, "cohort_test_bearings",
            "must lie in [1, cohort_bearings)");
      check(cohort_records >= cohort_bearings, "cohort_records", "must be >= cohort_bearings");
    }
  }

  experiment::SearchSpace search_space() const {
    experiment::SearchSpace s;
    s.cox_max_iter = cox_max_iter;
    s.cox_tol = cox_tol;
    s.rsf_trees = rsf_trees;
    s.rsf_depth.clear();
    for (int d : rsf_depth) s.rsf_depth.push_back(d == 0 ? std::nullopt : std::optional<int>(d));
    s.rsf_min_leaf = rsf_min_leaf;
    s.boost_rate = boost_rate;
    s.boost_depth = boost_depth;
    s.boost_rounds = boost_rounds;
    s.aft_penalizer = aft_penalizer;
    s.n_iterations = n_iterations;
    s.n_folds = n_folds;
    s.seed = seed;
    return s;
  }
};

namespace detail {

inline void write_json(const fs::path& path, const ordered_json& doc) {
  auto out = io::open_output(path);
  out << doc.dump(2) << '\n';
}

inline ordered_json optional_json(const std::optional<std::size_t>& v) { return v ? ordered_json(*v) : ordered_json(); }

inline signal::BearingGeometry geometry_for(const std::string& dataset) {
  return dataset == "pronostia" ? signal::pronostia_geometry() : signal::xjtu_geometry();
}

inline std::vector<dataset::BearingRecord> load(const PipelineConfig& cfg) {
  if (!fs::is_directory(cfg.data_path)) {
    throw Error(ErrorCode::kIo, "data_path: '" + cfg.data_path + "' is not a directory");
  }
  return cfg.dataset == "pronostia" ? dataset::load_pronostia(cfg.data_path) : dataset::load_xjtu(cfg.data_path);
}

struct BearingAnalysis {
  std::string id;
  events::Detection detection;
  features::FeatureTable features;
};

inline BearingAnalysis analyze(const PipelineConfig& cfg, const dataset::PseudoBearing& bearing, bool with_features) {
  const std::size_t frame_len = cfg.frame_len ? cfg.frame_len : bearing.file_lengths.front();
  const auto frames = signal::frame_signal(bearing.channel, frame_len);
  const double fs_hz = bearing.channel.sample_rate;
  // Short acquisitions give coarse spectra; a band never gets narrower than one line.
  const signal::BandSpec band{cfg.band_relative, fs_hz / static_cast<double>(frame_len)};
  const auto geometry = geometry_for(cfg.dataset);
  std::vector<signal::SpectralPdf> pdfs;
  pdfs.reserve(frames.size());
  for (const auto& f : frames) pdfs.push_back(signal::window_pdf(f, fs_hz, geometry, band));
  const std::size_t breakin = cfg.breakin_windows ? cfg.breakin_windows : events::default_breakin(pdfs.size());
  BearingAnalysis out{bearing.id, events::detect_event(pdfs, breakin, cfg.margin, static_cast<double>(frame_len) / fs_hz),
                      {}};
  if (with_features) out.features = features::feature_matrix(frames, cfg.entropy_bins);
  return out;
}

inline ordered_json annotation_json(const BearingAnalysis& a, const PipelineConfig& cfg) {
  const auto& t = a.detection.trace;
  const auto& ann = a.detection.annotation;
  return {{"bearing", a.id},
          {"observed", ann.observed()},
          {"event_window", optional_json(ann.event_window)},
          {"event_time_seconds", ann.event_time ? ordered_json(*ann.event_time) : ordered_json()},
          {"total_windows", ann.total_windows},
          {"breakin_windows", t.breakin_windows},
          {"margin", cfg.margin},
          {"kl_threshold", t.kl_threshold},
          {"sd_threshold", t.sd_threshold},
          {"kl_crossing", optional_json(t.kl_crossing)},
          {"sd_crossing", optional_json(t.sd_crossing)},
          {"plateau_window", optional_json(t.plateau_window)}};
}

inline void write_detection(const PipelineConfig& cfg, const BearingAnalysis& a) {
  write_json(cfg.out("annotations") / (a.id + ".json"), annotation_json(a, cfg));
  auto trace = io::open_output(cfg.out("traces") / (a.id + ".csv"));
  events::write_trace_csv(trace, a.detection.trace);
}

inline void write_dataset(const fs::path& path, const dataset::SurvivalDataset& data) {
  auto out = io::open_output(path);
  dataset::write_csv(out, data);
}

inline dataset::SurvivalDataset read_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return dataset::read_csv(in, path.string());
}

inline ordered_json scaler_json(const dataset::Scaler& s) {
  return {{"names", s.names}, {"mean", s.mean}, {"std", s.std}};
}

inline std::size_t censored_count(const dataset::SurvivalDataset& d) {
  return static_cast<std::size_t>(
      std::count_if(d.records.begin(), d.records.end(), [](const auto& r) { return r.event == 0; }));
}

// Writes data/{train,test}.csv and data/summary.json for a normalized split.
inline void write_prepared(const PipelineConfig& cfg, const dataset::NormalizedSplit& split,
                           const std::vector<std::string>& train_ids, const std::vector<std::string>& test_ids,
                           ordered_json extra) {
  write_dataset(cfg.out("data/train.csv"), split.train);
  write_dataset(cfg.out("data/test.csv"), split.test);
  const std::size_t n = split.train.size() + split.test.size();
  const std::size_t censored = censored_count(split.train) + censored_count(split.test);
  const double rate = n ? static_cast<double>(censored) / static_cast<double>(n) : 0.0;
  ordered_json summary = {{"N", n},
                          {"N_train", split.train.size()},
                          {"N_test", split.test.size()},
                          {"censored", censored},
                          {"censoring_rate", rate},
                          {"C_percent", std::round(rate * 1000.0) / 10.0},
                          {"d", split.scaler.names.size()},
                          {"feature_names", split.scaler.names},
                          {"dropped_features", split.dropped},
                          {"train_bearings", train_ids},
                          {"test_bearings", test_ids},
                          {"seed", cfg.seed},
                          {"scaler", scaler_json(split.scaler)}};
  for (auto& [k, v] : extra.items()) summary[k] = v;
  write_json(cfg.out("data/summary.json"), summary);
}

// Physical bearing ids split into train/test. Without explicit lists the
// last 40% (at least one) of the bearings are held out.
inline std::pair<std::vector<std::string>, std::vector<std::string>> resolve_split(
    const PipelineConfig& cfg, const std::vector<std::string>& physical) {
  std::vector<std::string> train = cfg.train_ids, test = cfg.test_ids;
  const std::set<std::string> known(physical.begin(), physical.end());
  for (const auto* list : {&train, &test}) {
    for (const auto& id : *list) {
      if (!known.count(id)) throw Error(ErrorCode::kInvalidArgument, "train_ids/test_ids: unknown bearing '" + id + "'");
    }
  }
  if (train.empty() && test.empty()) {
    const std::size_t n_test = std::max<std::size_t>(1, physical.size() * 2 / 5);
    require(physical.size() > n_test, ErrorCode::kInvalidArgument, "dataset: need at least two bearings to split");
    train.assign(physical.begin(), physical.end() - static_cast<std::ptrdiff_t>(n_test));
    test.assign(physical.end() - static_cast<std::ptrdiff_t>(n_test), physical.end());
  } else if (test.empty() || train.empty()) {
    auto& fill = test.empty() ? test : train;
    const auto& given = test.empty() ? train : test;
    const std::set<std::string> g(given.begin(), given.end());
    for (const auto& id : physical) {
      if (!g.count(id)) fill.push_back(id);
    }
  }
  require(!train.empty() && !test.empty(), ErrorCode::kInvalidArgument, "train_ids/test_ids: both sides must be non-empty");
  return {train, test};
}

inline std::size_t column_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? names.size() : static_cast<std::size_t>(it - names.begin());
}

}  // namespace detail

/// Per pseudo-bearing annotation JSON and divergence trace CSV.
inline std::vector<events::EventAnnotation> cmd_detect(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate("detect");
  const auto pseudo = dataset::axis_split(detail::load(cfg));
  std::vector<events::EventAnnotation> out;
  for (const auto& b : pseudo) {
    const auto a = detail::analyze(cfg, b, false);
    detail::write_detection(cfg, a);
    log << b.id << ": "
        << (a.detection.annotation.observed() ? "event at window " + std::to_string(*a.detection.annotation.event_window)
                                              : std::string("censored"))
        << " of " << a.detection.annotation.total_windows << '\n';
    out.push_back(a.detection.annotation);
  }
  return out;
}

/// Detection, slicing, bootstrap, censoring, split and z-scoring.
inline void cmd_prepare(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate("prepare");
  const auto bearings = detail::load(cfg);
  std::vector<std::string> physical;
  for (const auto& b : bearings) physical.push_back(b.bearing_id);
  const auto [train_ids, test_ids] = detail::resolve_split(cfg, physical);

  std::vector<dataset::SurvivalRecord> records;
  ordered_json events_doc = ordered_json::object();
  ordered_json missing_doc = ordered_json::object();
  for (const auto& b : dataset::axis_split(bearings)) {
    const auto a = detail::analyze(cfg, b, true);
    detail::write_detection(cfg, a);
    const auto& ann = a.detection.annotation;
    events_doc[b.id] = detail::optional_json(ann.event_window);
    if (!a.features.missing.empty()) missing_doc[b.id] = a.features.missing;
    auto slices = dataset::build_survival_records(a.features, ann, cfg.n_slices, b.id,
                                                  static_cast<double>(ann.total_windows));
    records.insert(records.end(), slices.begin(), slices.end());
  }
  auto boot = dataset::constrained_bootstrap(records, cfg.bootstrap_factor, cfg.seed);
  const auto all = dataset::apply_censoring(std::move(boot), cfg.censoring_rate, models::mix_seed(cfg.seed, 1),
                                            dataset::default_feature_names());
  const auto [train, test] = dataset::split_by_bearing(all, train_ids, test_ids);
  const auto split = dataset::zscore_fit_transform(train, test);
  for (const auto& name : split.dropped) log << "warning: dropped constant feature " << name << '\n';
  detail::write_prepared(cfg, split, train_ids, test_ids,
                         {{"events", events_doc}, {"missing_frames", missing_doc}});
  log << "prepared " << split.train.size() << " train / " << split.test.size() << " test records\n";
}

namespace detail {

inline std::vector<double> curve_grid(const std::vector<double>& durations, std::size_t points = 100) {
  const double hi = *std::max_element(durations.begin(), durations.end());
  std::vector<double> grid(points + 1);
  for (std::size_t k = 0; k <= points; ++k) grid[k] = hi * static_cast<double>(k) / static_cast<double>(points);
  return grid;
}

inline void write_mean_curve(const fs::path& path, const metrics::SurvivalMatrix& m) {
  auto out = io::open_output(path);
  out << "time,mean,lower,upper\n";
  for (Eigen::Index k = 0; k < m.values.cols(); ++k) {
    std::vector<double> col(m.values.col(k).data(), m.values.col(k).data() + m.values.rows());
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    out << io::format_double(m.times[static_cast<std::size_t>(k)]) << ',' << io::format_double(mean) << ','
        << io::format_double(metrics::quantile(col, 0.025)) << ',' << io::format_double(metrics::quantile(col, 0.975))
        << '\n';
  }
}

inline void write_curve(const fs::path& path, const models::SurvivalCurve& c) {
  auto out = io::open_output(path);
  out << "time,survival,lower,upper\n";
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    out << io::format_double(c.times[k]) << ',' << io::format_double(c.survival[k]) << ','
        << io::format_double(c.lower ? (*c.lower)[k] : c.survival[k]) << ','
        << io::format_double(c.upper ? (*c.upper)[k] : c.survival[k]) << '\n';
  }
}

inline std::string fmt_fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string table2(const std::vector<experiment::BenchmarkRow>& rows, std::size_t n, double c_percent,
                          std::size_t d) {
  std::ostringstream out;
  out << "N=" << n << ", C=" << fmt_fixed(c_percent, 0) << "%, d=" << d << '\n';
  out << std::left << std::setw(12) << "Model" << std::right << std::setw(14) << "T_train[ms]" << std::setw(8) << "CI"
      << std::setw(8) << "CI_td" << std::setw(8) << "IBS" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << experiment::display_name(r.kind) << std::right;
    if (r.report) {
      out << std::setw(14) << fmt_fixed(r.report->train_seconds * 1e3, 2) << std::setw(8) << fmt_fixed(r.report->harrell_ci, 3)
          << std::setw(8) << fmt_fixed(r.report->antolini_ci, 3) << std::setw(8) << fmt_fixed(r.report->ibs, 3);
    } else {
      out << "  failed: " << r.error;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace detail

/// Tuning, final fits and test metrics. report/report.{csv,json} carry only
/// deterministic columns; wall-clock T_train goes to report/timing.csv and
/// the printed results table. Returns the number of models that succeeded.
inline std::size_t cmd_benchmark(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate("benchmark");
  const auto train = detail::read_dataset(cfg.out("data/train.csv"));
  const auto test = detail::read_dataset(cfg.out("data/test.csv"));
  require(train.feature_names == test.feature_names, ErrorCode::kDimensionMismatch,
          "train and test CSVs have different columns");
  nlohmann::json summary;
  if (fs::exists(cfg.out("data/summary.json"))) summary = nlohmann::json::parse(io::read_file(cfg.out("data/summary.json")));

  std::vector<experiment::ModelKind> kinds;
  for (const auto& m : cfg.models) kinds.push_back(experiment::model_kind_from_string(m));
  experiment::BenchmarkOptions options;
  options.space = cfg.search_space();
  options.timing_repeats = cfg.timing_repeats;
  const auto rows = experiment::run_benchmark(train, test, kinds, options);

  const auto train_data = models::to_survival_data(train);
  const auto test_data = models::to_survival_data(test);

  auto csv = io::open_output(cfg.out("report/report.csv"));
  csv << "model,CI,CI_td,IBS,accuracy,comparable_pairs,ibs_truncated,config,status\n";
  auto timing = io::open_output(cfg.out("report/timing.csv"));
  timing << "model,T_train\n";
  ordered_json report = ordered_json::array();
  std::size_t succeeded = 0;
  const auto grid = detail::curve_grid(test_data.durations);
  for (const auto& r : rows) {
    const auto name = experiment::to_string(r.kind);
    ordered_json entry = {{"model", name}, {"config", r.config}};
    if (r.report) {
      ++succeeded;
      const auto& e = *r.report;
      csv << name << ',' << io::format_double(e.harrell_ci) << ',' << io::format_double(e.antolini_ci) << ','
          << io::format_double(e.ibs) << ',' << io::format_double(e.accuracy()) << ',' << e.n_comparable_pairs << ','
          << (e.ibs_truncated ? 1 : 0) << ",\"" << r.config << "\",ok\n";
      timing << name << ',' << io::format_double(e.train_seconds) << '\n';
      entry["CI"] = e.harrell_ci;
      entry["CI_td"] = e.antolini_ci;
      entry["IBS"] = e.ibs;
      entry["accuracy"] = e.accuracy();
      entry["comparable_pairs"] = e.n_comparable_pairs;
      entry["ibs_truncated"] = e.ibs_truncated;
      entry["status"] = "ok";
      detail::write_mean_curve(cfg.out("curves/" + name + ".csv"), experiment::predict_matrix(*r.model, test_data, grid));
      detail::write_json(cfg.out("models/" + name + ".json"), models::to_json(*r.model));
    } else {
      csv << name << ",,,,,,,\"" << r.config << "\",\"error: " << r.error << "\"\n";
      timing << name << ",\n";
      entry["status"] = "error: " + r.error;
      log << name << " failed: " << r.error << '\n';
    }
    for (const auto& w : r.warnings) log << name << ": warning: " << w << '\n';
    report.push_back(std::move(entry));

    auto cv = io::open_output(cfg.out("report/cv_" + name + ".csv"));
    cv << "config_index,config,fold,antolini_ci,error\n";
    for (const auto& row : r.cv_table) {
      cv << row.config_index << ",\"" << row.config << "\"," << row.fold << ','
         << (std::isnan(row.antolini_ci) ? std::string() : io::format_double(row.antolini_ci)) << ",\"" << row.error
         << "\"\n";
    }
  }
  detail::write_json(cfg.out("report/report.json"), report);

  detail::write_curve(cfg.out("curves/km.csv"), models::kaplan_meier(test_data.durations, test_data.events));

  // RMS groups from a Cox model on the training data.
  try {
    const std::size_t rms = detail::column_of(train.feature_names, dataset::default_feature_names()[features::kRmsIndex]);
    require(rms < train.feature_names.size(), ErrorCode::kInvalidArgument, "RMS column not present");
    double threshold = cfg.rms_threshold;
    if (summary.contains("scaler")) {
      const auto names = summary["scaler"]["names"].get<std::vector<std::string>>();
      const std::size_t k = detail::column_of(names, train.feature_names[rms]);
      if (k < names.size()) {
        threshold = (threshold - summary["scaler"]["mean"][k].get<double>()) / summary["scaler"]["std"][k].get<double>();
      }
    }
    std::optional<models::CoxModel> cox;
    for (const auto& r : rows) {
      if (r.model && std::holds_alternative<models::CoxModel>(*r.model)) cox = std::get<models::CoxModel>(*r.model);
    }
    if (!cox) cox = models::fit_coxph(train_data);
    std::string threshold_source = "configured";
    const auto compare = [&](double th) {
      return simulate::group_survival_comparison(*cox, test_data.x, rms, th, grid, cfg.simulated_per_group, cfg.seed);
    };
    std::optional<simulate::GroupComparison> found;
    try {
      found = compare(threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyGroup) throw;
      const Eigen::VectorXd col = test_data.x.col(static_cast<Eigen::Index>(rms));
      threshold = metrics::quantile(std::vector<double>(col.data(), col.data() + col.size()), 0.5);
      threshold_source = "test median";
      log << "warning: RMS threshold " << cfg.rms_threshold << " leaves a group empty; using the test median\n";
      found = compare(threshold);
    }
    const auto& groups = *found;
    auto out = io::open_output(cfg.out("curves/rms_groups.csv"));
    out << "time,low_mean,low_lower,low_upper,high_mean,high_lower,high_upper\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      out << io::format_double(grid[k]);
      for (const auto* g : {&groups.low, &groups.high}) {
        out << ',' << io::format_double(g->curve.survival[k]) << ',' << io::format_double((*g->curve.lower)[k]) << ','
            << io::format_double((*g->curve.upper)[k]);
      }
      out << '\n';
    }
    auto sim = io::open_output(cfg.out("curves/rms_simulated.csv"));
    sim << "group,time\n";
    for (const auto& [label, g] : {std::pair{"low", &groups.low}, std::pair{"high", &groups.high}}) {
      for (double t : g->simulated_times) sim << label << ',' << io::format_double(t) << '\n';
    }
    detail::write_json(cfg.out("curves/rms_groups.json"),
                       {{"feature", train.feature_names[rms]},
                        {"configured_threshold_raw", cfg.rms_threshold},
                        {"threshold_used_normalized", threshold},
                        {"threshold_source", threshold_source},
                        {"low_members", groups.low.members},
                        {"high_members", groups.high.members},
                        {"low_simulated_median", groups.low.simulated_median},
                        {"high_simulated_median", groups.high.simulated_median}});
  } catch (const Error& e) {
    log << "warning: RMS group comparison skipped: " << e.what() << '\n';
  }

  const std::size_t n = summary.value("N", train.size() + test.size());
  const double c_percent = summary.value("C_percent", 0.0);
  const std::size_t d = train.feature_names.size();
  const auto table = detail::table2(rows, n, c_percent, d);
  auto t2 = io::open_output(cfg.out("report/table2.txt"));
  t2 << table;
  if (cfg.table2) std::cout << table;
  return succeeded;
}

/// Synthetic archive in the XJTU layout (plus truth.json), or a synthetic
/// linear-hazard cohort written straight to data/.
inline void cmd_simulate(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate("simulate");
  std::mt19937_64 rng(cfg.seed);
  if (cfg.sim_kind == "archive") {
    ordered_json truth = ordered_json::array();
    const fs::path root = cfg.out("archive");
    const std::size_t first_censored = cfg.sim_bearings - cfg.sim_censored_bearings;
    std::uniform_int_distribution<std::size_t> onset_dist(cfg.sim_windows / 2, cfg.sim_windows * 9 / 10);
    for (std::size_t b = 0; b < cfg.sim_bearings; ++b) {
      simulate::SynthBearingConfig s;
      s.duration_windows = cfg.sim_windows;
      s.window_len = cfg.sim_window_len;
      s.noise_sigma = cfg.sim_noise;
      s.growth_rate = cfg.sim_growth;
      // The transient must settle inside the detector's default break-in.
      s.breakin_transient_windows = std::max<std::size_t>(1, events::default_breakin(cfg.sim_windows) * 4 / 5);
      s.onset_window = b < first_censored ? onset_dist(rng) : cfg.sim_windows;
      s.seed = models::mix_seed(cfg.seed, 2 * b);
      const auto h = simulate::synth_bearing(s, signal::Axis::kHorizontal);
      s.seed = models::mix_seed(cfg.seed, 2 * b + 1);
      const auto v = simulate::synth_bearing(s, signal::Axis::kVertical);
      const std::string id = "Bearing1_" + std::to_string(b + 1);
      dataset::write_xjtu_bearing(root, id, h, v, s.window_len);
      truth.push_back({{"bearing", id},
                       {"onset_window", b < first_censored ? ordered_json(s.onset_window) : ordered_json()},
                       {"windows", s.duration_windows}});
    }
    detail::write_json(root / "truth.json", truth);
    log << "wrote " << cfg.sim_bearings << " synthetic bearings to " << root.string() << '\n';
    return;
  }

  // Linear-hazard cohort: covariates ~ N(0, 1) except the RMS column, which
  // lives around 2 so the RMS <= 2 split is balanced; hazard uses the
  // standardized values.
  const std::size_t d = features::kNumFeatures;
  const std::vector<double> beta{0.8, -0.6, 0.5, 0.0, 0.3, 0.7, 0.0, -0.4, 0.0, 0.2, 0.0, 0.0};
  const double lambda = 0.05;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(cfg.cohort_records), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) z(i, k) = normal(rng);
  }
  const auto cohort = simulate::simulate_cox_times(beta, z, lambda, 1, models::mix_seed(cfg.seed, 7));
  std::vector<dataset::SurvivalRecord> records;
  const std::size_t per = cfg.cohort_records / cfg.cohort_bearings;
  for (std::size_t i = 0; i < cfg.cohort_records; ++i) {
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    x[features::kRmsIndex] = 2.0 + 0.5 * x[features::kRmsIndex];
    const std::size_t bearing = std::min(i / std::max<std::size_t>(per, 1), cfg.cohort_bearings - 1);
    records.push_back({std::move(x), cohort.durations[i], 1, "S" + std::to_string(bearing + 1)});
  }
  const auto all = dataset::apply_censoring(std::move(records), cfg.censoring_rate, models::mix_seed(cfg.seed, 1),
                                            dataset::default_feature_names());
  std::vector<std::string> train_ids, test_ids;
  for (std::size_t b = 0; b < cfg.cohort_bearings; ++b) {
    (b + cfg.cohort_test_bearings < cfg.cohort_bearings ? train_ids : test_ids).push_back("S" + std::to_string(b + 1));
  }
  const auto [train, test] = dataset::split_by_bearing(all, train_ids, test_ids);
  const auto split = dataset::zscore_fit_transform(train, test);
  detail::write_prepared(cfg, split, train_ids, test_ids, {{"true_beta", beta}, {"baseline_lambda", lambda}});
  log << "wrote synthetic cohort: " << split.train.size() << " train / " << split.test.size() << " test records\n";
}

/// Maps errors to exit codes: 2 for unreadable input, 3 for invalid
/// configuration or data.
inline int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIo:
    case ErrorCode::kMalformedCsv:
    case ErrorCode::kNonMonotoneTimestamps:
    case ErrorCode::kEmptyBearing:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

inline int run(const std::string& command, const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  try {
    if (command == "detect") cmd_detect(cfg, log);
    else if (command == "prepare") cmd_prepare(cfg, log);
    else if (command == "simulate") cmd_simulate(cfg, log);
    else if (command == "benchmark") return cmd_benchmark(cfg, log) > 0 ? kExitOk : kExitNoModel;
    else throw Error(ErrorCode::kInvalidArgument, "command: unknown '" + command + "'");
    return kExitOk;
  } catch (const Error& e) {
    log << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace bsurv::pipeline
