#pragma once

// Cross-validated random hyperparameter search and the train/test benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bearing_survival/dataset.hpp"
#include "bearing_survival/error.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models.hpp"

namespace bsurv::experiment {

enum class ModelKind { kCoxPH, kRSF, kCoxBoost, kWeibullAFT };

inline constexpr ModelKind kAllModels[] = {ModelKind::kCoxPH, ModelKind::kRSF, ModelKind::kCoxBoost,
                                           ModelKind::kWeibullAFT};

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCoxPH: return "coxph";
    case ModelKind::kRSF: return "rsf";
    case ModelKind::kCoxBoost: return "coxboost";
    case ModelKind::kWeibullAFT: return "weibull_aft";
  }
  return "unknown";
}

/// Display names used in the printed results table.
inline std::string display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCoxPH: return "CoxPH";
    case ModelKind::kRSF: return "RSF";
    case ModelKind::kCoxBoost: return "CoxBoost";
    case ModelKind::kWeibullAFT: return "WeibullAFT";
  }
  return "unknown";
}

inline ModelKind model_kind_from_string(const std::string& name) {
  for (auto kind : kAllModels) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model '" + name + "'");
}

using ModelConfig = std::variant<models::CoxOptions, models::ForestOptions, models::BoostOptions, models::WeibullOptions>;

inline std::string describe(const ModelConfig& config) {
  std::ostringstream out;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, models::CoxOptions>) {
          out << "max_iter=" << c.max_iter << " tol=" << io::format_double(c.tol);
        } else if constexpr (std::is_same_v<T, models::ForestOptions>) {
          out << "n_trees=" << c.n_trees << " max_depth=" << (c.max_depth ? std::to_string(*c.max_depth) : "none")
              << " split=" << models::to_string(c.split_rule);
        } else if constexpr (std::is_same_v<T, models::BoostOptions>) {
          out << "learning_rate=" << io::format_double(c.learning_rate) << " max_depth=" << c.max_depth
              << " n_rounds=" << c.n_rounds;
        } else {
          out << "penalizer=" << io::format_double(c.penalizer);
        }
      },
      config);
  return out.str();
}

/// Discrete per-model ranges. Defaults are implementer-chosen: only the
/// parameter names are fixed by the method.
struct SearchSpace {
  std::vector<int> cox_max_iter{50, 100, 200};
  std::vector<double> cox_tol{1e-5, 1e-7, 1e-9};
  std::vector<int> rsf_trees{50, 100, 200};
  std::vector<std::optional<int>> rsf_depth{3, 5, 7, std::nullopt};
  std::vector<models::SplitRule> rsf_split{models::SplitRule::kLogRank};
  int rsf_min_leaf = 5;
  std::vector<double> boost_rate{0.05, 0.1, 0.3};
  std::vector<int> boost_depth{1, 2, 3};
  std::vector<int> boost_rounds{100, 200};
  std::vector<double> aft_penalizer{0.0, 0.01, 0.1, 1.0};
  std::size_t n_iterations = 10;
  std::size_t n_folds = 5;
  std::uint64_t seed = 0;
};

/// Every configuration of the grid for `kind`, in a fixed order.
inline std::vector<ModelConfig> configurations(ModelKind kind, const SearchSpace& space) {
  std::vector<ModelConfig> out;
  switch (kind) {
    case ModelKind::kCoxPH:
      for (int it : space.cox_max_iter) {
        for (double tol : space.cox_tol) {
          models::CoxOptions c;
          c.max_iter = it;
          c.tol = tol;
          out.emplace_back(c);
        }
      }
      break;
    case ModelKind::kRSF:
      for (int trees : space.rsf_trees) {
        for (const auto& depth : space.rsf_depth) {
          for (auto rule : space.rsf_split) {
            models::ForestOptions c;
            c.n_trees = trees;
            c.max_depth = depth;
            c.split_rule = rule;
            c.min_leaf = space.rsf_min_leaf;
            c.seed = space.seed;
            out.emplace_back(c);
          }
        }
      }
      break;
    case ModelKind::kCoxBoost:
      for (double rate : space.boost_rate) {
        for (int depth : space.boost_depth) {
          for (int rounds : space.boost_rounds) {
            models::BoostOptions c;
            c.learning_rate = rate;
            c.max_depth = depth;
            c.n_rounds = rounds;
            c.seed = space.seed;
            out.emplace_back(c);
          }
        }
      }
      break;
    case ModelKind::kWeibullAFT:
      for (double p : space.aft_penalizer) {
        models::WeibullOptions c;
        c.penalizer = p;
        out.emplace_back(c);
      }
      break;
  }
  return out;
}

inline models::AnyModel fit_model(const ModelConfig& config, const models::SurvivalData& data) {
  return std::visit(
      [&](const auto& c) -> models::AnyModel {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, models::CoxOptions>) return models::fit_coxph(data, c);
        else if constexpr (std::is_same_v<T, models::ForestOptions>) return models::fit_rsf(data, c);
        else if constexpr (std::is_same_v<T, models::BoostOptions>) return models::fit_coxboost(data, c);
        else return models::fit_weibull_aft(data, c);
      },
      config);
}

inline metrics::SurvivalMatrix predict_matrix(const models::AnyModel& model, const models::SurvivalData& data,
                                              std::vector<double> times) {
  metrics::SurvivalMatrix m;
  m.values.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd xi = data.x.row(static_cast<Eigen::Index>(i)).transpose();
    const auto curve = models::predict_survival(model, std::span<const double>(xi.data(), xi.size()), times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = curve.survival[k];
    }
  }
  m.times = std::move(times);
  return m;
}

inline std::vector<double> risk_scores(const models::AnyModel& model, const models::SurvivalData& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd xi = data.x.row(static_cast<Eigen::Index>(i)).transpose();
    out[i] = models::risk_score(model, std::span<const double>(xi.data(), xi.size()));
  }
  return out;
}

/// Antolini concordance on the distinct event times of `data`.
inline metrics::Concordance evaluate_antolini(const models::AnyModel& model, const models::SurvivalData& data) {
  auto grid = models::unique_event_times(data.durations, data.events);
  require(!grid.empty(), ErrorCode::kNoComparablePairs, "no events to evaluate");
  const auto matrix = predict_matrix(model, data, std::move(grid));
  return metrics::antolini_ci(data.durations, data.events, matrix);
}

/// Fold index per record. Folds group records by source_bearing when there
/// are at least n_folds distinct ids; otherwise records are assigned
/// individually and `grouped` is false.
struct FoldAssignment {
  std::vector<std::size_t> fold;
  bool grouped = true;
};

inline FoldAssignment assign_folds(const dataset::SurvivalDataset& data, std::size_t n_folds, std::uint64_t seed) {
  require(n_folds >= 2, ErrorCode::kInvalidArgument, "need at least 2 folds");
  require(data.size() >= n_folds, ErrorCode::kInvalidArgument, "fewer records than folds");
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  for (const auto& r : data.records) ids.push_back(r.source_bearing);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  FoldAssignment out;
  out.fold.resize(data.size());
  if (ids.size() >= n_folds) {
    std::shuffle(ids.begin(), ids.end(), rng);
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t k = 0; k < ids.size(); ++k) fold_of[ids[k]] = k % n_folds;
    for (std::size_t i = 0; i < data.size(); ++i) out.fold[i] = fold_of[data.records[i].source_bearing];
  } else {
    out.grouped = false;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) out.fold[order[k]] = k % n_folds;
  }
  return out;
}

struct CvRow {
  std::size_t config_index = 0;
  std::string config;
  std::size_t fold = 0;
  double antolini_ci = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct SearchResult {
  ModelConfig best;
  std::size_t best_index = 0;
  double best_score = 0.0;
  std::vector<CvRow> table;
  std::vector<std::string> warnings;
  std::set<std::string> bearings_seen;  // source ids touched by tuning
};

/// Samples up to n_iterations distinct grid configurations (seeded) and
/// keeps the one with the highest mean validation Antolini concordance.
inline SearchResult random_search(ModelKind kind, const dataset::SurvivalDataset& train, const SearchSpace& space) {
  auto grid = configurations(kind, space);
  require(!grid.empty(), ErrorCode::kInvalidArgument, "empty search space for " + to_string(kind));
  std::mt19937_64 rng(models::mix_seed(space.seed, static_cast<std::uint64_t>(kind)));
  std::shuffle(grid.begin(), grid.end(), rng);
  grid.resize(std::min(grid.size(), space.n_iterations));

  SearchResult result{grid.front(), 0, -1.0, {}, {}, {}};
  const auto folds = assign_folds(train, space.n_folds, space.seed);
  if (!folds.grouped) {
    result.warnings.push_back("fewer source bearings than folds; falling back to record-level folds");
  }
  for (const auto& r : train.records) result.bearings_seen.insert(r.source_bearing);
  const auto all = models::to_survival_data(train);

  bool any = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double sum = 0.0;
    std::size_t ok = 0;
    for (std::size_t f = 0; f < space.n_folds; ++f) {
      std::vector<std::size_t> fit_rows, val_rows;
      for (std::size_t i = 0; i < train.size(); ++i) (folds.fold[i] == f ? val_rows : fit_rows).push_back(i);
      CvRow row{c, describe(grid[c]), f, std::numeric_limits<double>::quiet_NaN(), {}};
      try {
        const auto model = fit_model(grid[c], all.subset(fit_rows));
        row.antolini_ci = evaluate_antolini(model, all.subset(val_rows)).value;
        sum += row.antolini_ci;
        ++ok;
      } catch (const Error& e) {
        row.error = e.what();
      }
      result.table.push_back(std::move(row));
    }
    if (ok == 0) continue;
    const double mean = sum / static_cast<double>(ok);
    if (!any || mean > result.best_score) {
      any = true;
      result.best_score = mean;
      result.best = grid[c];
      result.best_index = c;
    }
  }
  if (!any) throw Error(ErrorCode::kAllConfigurationsFailed, to_string(kind) + ": every configuration failed in every fold");
  return result;
}

struct BenchmarkRow {
  ModelKind kind = ModelKind::kCoxPH;
  std::optional<metrics::EvaluationReport> report;
  std::string config;
  std::string error;
  std::optional<models::AnyModel> model;
  std::vector<CvRow> cv_table;
  std::vector<std::string> warnings;
};

struct BenchmarkOptions {
  SearchSpace space;
  std::size_t timing_repeats = 3;  // T_train is the median over repeats
};

/// Physical bearings shared by the two sets; must be empty.
inline void audit_split(const dataset::SurvivalDataset& train, const dataset::SurvivalDataset& test) {
  std::set<std::string> train_ids;
  for (const auto& r : train.records) train_ids.insert(dataset::physical_bearing(r.source_bearing));
  for (const auto& r : test.records) {
    if (train_ids.count(dataset::physical_bearing(r.source_bearing))) {
      throw Error(ErrorCode::kOverlappingSplit, "bearing " + r.source_bearing + " appears in train and test");
    }
  }
}

inline metrics::EvaluationReport evaluate(const models::AnyModel& model, const models::SurvivalData& train,
                                          const models::SurvivalData& test) {
  metrics::EvaluationReport report;
  const auto risk = risk_scores(model, test);
  const auto harrell = metrics::harrell_ci(test.durations, test.events, risk);
  report.harrell_ci = harrell.value;
  report.n_comparable_pairs = harrell.comparable_pairs;
  report.antolini_ci = evaluate_antolini(model, test).value;
  const auto matrix = predict_matrix(model, test, metrics::ibs_grid(test.durations));
  const auto brier = metrics::integrated_brier(train.durations, train.events, test.durations, test.events, matrix);
  report.ibs = brier.ibs;
  report.ibs_truncated = brier.truncated;
  return report;
}

/// Tune -> timed final fit on all training records -> test evaluation, per
/// model. A failing model is recorded in its row and does not stop the rest.
inline std::vector<BenchmarkRow> run_benchmark(const dataset::SurvivalDataset& train,
                                               const dataset::SurvivalDataset& test, const std::vector<ModelKind>& kinds,
                                               const BenchmarkOptions& options = {}) {
  audit_split(train, test);
  const auto train_data = models::to_survival_data(train);
  const auto test_data = models::to_survival_data(test);
  std::vector<BenchmarkRow> rows;
  for (auto kind : kinds) {
    BenchmarkRow row;
    row.kind = kind;
    try {
      const auto search = random_search(kind, train, options.space);
      row.config = describe(search.best);
      row.cv_table = search.table;
      row.warnings = search.warnings;
      std::vector<double> seconds;
      std::optional<models::AnyModel> model;
      for (std::size_t k = 0; k < std::max<std::size_t>(1, options.timing_repeats); ++k) {
        const auto start = std::chrono::steady_clock::now();
        auto fitted = fit_model(search.best, train_data);
        seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        model = std::move(fitted);
      }
      std::sort(seconds.begin(), seconds.end());
      auto report = evaluate(*model, train_data, test_data);
      report.train_seconds = seconds[seconds.size() / 2];
      row.report = report;
      row.model = std::move(model);
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bsurv::experiment
