#pragma once

// Gradient boosting on the Cox partial likelihood. Each round fits a
// least-squares regression tree to the martingale residuals of the current
// scores and adds learning_rate * tree to the score. If the full step would
// lower the training partial likelihood it is halved until it does not, and
// the tree's leaves are rescaled so the score stays learning_rate * sum(trees).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/models/common.hpp"
#include "bearing_survival/models/regression_tree.hpp"

namespace bsurv::models {

struct BoostOptions {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 1;
  int min_leaf = 5;
  double subsample = 1.0;  // fraction of records per round, drawn without replacement
  std::uint64_t seed = 0;
};

struct BoostedCoxModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  int n_rounds = 0;
  std::size_t dimension = 0;
  BaselineHazard baseline;
  std::vector<double> log_likelihood;  // training partial log-likelihood after each round

  double risk_score(std::span<const double> x) const {
    require(x.size() == dimension, ErrorCode::kDimensionMismatch,
            "expected " + std::to_string(dimension) + " covariates, got " + std::to_string(x.size()));
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return learning_rate * s;
  }
};

/// Breslow partial likelihood of fixed scores, with the records' martingale
/// residuals delta_i - exp(f_i) * H0(t_i).
class ScoreLikelihood {
 public:
  ScoreLikelihood(std::span<const double> durations, std::span<const int> events)
      : durations_(durations), events_(events) {
    order_.resize(durations.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return durations[a] > durations[b]; });
  }

  double log_likelihood(std::span<const double> f) const {
    const double shift = *std::max_element(f.begin(), f.end());
    double risk = 0.0, ll = 0.0;
    const std::size_t n = order_.size();
    for (std::size_t k = 0; k < n;) {
      const double t = durations_[order_[k]];
      double deaths = 0.0, event_f = 0.0;
      for (; k < n && durations_[order_[k]] == t; ++k) {
        const std::size_t i = order_[k];
        risk += std::exp(f[i] - shift);
        if (events_[i]) {
          deaths += 1.0;
          event_f += f[i];
        }
      }
      if (deaths > 0.0) ll += event_f - deaths * (std::log(risk) + shift);
    }
    return ll;
  }

  std::vector<double> martingale_residuals(std::span<const double> f) const {
    const auto base = breslow_baseline(durations_, events_, f);
    std::vector<double> r(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) r[i] = events_[i] - std::exp(f[i]) * base.at(durations_[i]);
    return r;
  }

 private:
  std::span<const double> durations_;
  std::span<const int> events_;
  std::vector<std::size_t> order_;
};

inline BoostedCoxModel fit_coxboost(const SurvivalData& data, const BoostOptions& options = {}) {
  validate(data);
  require(options.n_rounds >= 1, ErrorCode::kInvalidArgument, "CoxBoost: n_rounds must be >= 1");
  require(options.learning_rate >= 0.0 && options.learning_rate <= 1.0, ErrorCode::kInvalidArgument,
          "CoxBoost: learning_rate must lie in [0, 1]");
  require(options.subsample > 0.0 && options.subsample <= 1.0, ErrorCode::kInvalidArgument,
          "CoxBoost: subsample must lie in (0, 1]");
  if (data.event_count() == 0) throw Error(ErrorCode::kNoEvents, "CoxBoost needs at least one observed event");

  const std::size_t n = data.size();
  BoostedCoxModel model;
  model.learning_rate = options.learning_rate;
  model.n_rounds = options.n_rounds;
  model.dimension = data.dimension();
  const ScoreLikelihood likelihood(data.durations, data.events);
  const RegressionTreeOptions tree_options{options.max_depth, options.min_leaf};
  std::mt19937_64 rng(options.seed);

  std::vector<double> score(n, 0.0), trial(n);
  double current = likelihood.log_likelihood(score);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int round = 0; round < options.n_rounds; ++round) {
    const auto residual = likelihood.martingale_residuals(score);
    std::vector<std::size_t> rows = all;
    if (options.subsample < 1.0) {
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(std::max<std::size_t>(1, static_cast<std::size_t>(options.subsample * static_cast<double>(n))));
      std::sort(rows.begin(), rows.end());
    }
    RegressionTree tree = fit_regression_tree(data.x, residual, tree_options, std::move(rows));
    std::vector<double> update(n);
    for (std::size_t i = 0; i < n; ++i) update[i] = tree.predict_row(data.x, static_cast<Eigen::Index>(i));

    double factor = 1.0;
    double next = current;
    for (int h = 0; h <= 30; ++h, factor *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = score[i] + options.learning_rate * factor * update[i];
      next = likelihood.log_likelihood(trial);
      if (next >= current) break;
    }
    if (next < current) {
      factor = 0.0;
      next = current;
    } else {
      score = trial;
    }
    tree.scale(factor);
    model.trees.push_back(std::move(tree));
    current = next;
    model.log_likelihood.push_back(current);
  }
  model.baseline = breslow_baseline(data.durations, data.events, score);
  return model;
}

inline SurvivalCurve predict_survival(const BoostedCoxModel& model, std::span<const double> x,
                                      std::span<const double> times) {
  check_times(times);
  return proportional_curve(model.baseline, model.risk_score(x), times);
}

}  // namespace bsurv::models
