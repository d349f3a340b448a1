#pragma once

// Random survival forest: bootstrap-grown survival trees with log-rank (or
// hazard-separation) splitting and Nelson-Aalen leaves. The ensemble
// averages cumulative hazards on the training event-time grid and reports
// S = exp(-H).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"
#include "bearing_survival/models/common.hpp"

namespace bsurv::models {

enum class SplitRule { kLogRank, kConservation };

inline std::string to_string(SplitRule rule) { return rule == SplitRule::kLogRank ? "logrank" : "conservation"; }

inline SplitRule split_rule_from_string(const std::string& name) {
  if (name == "logrank") return SplitRule::kLogRank;
  if (name == "conservation") return SplitRule::kConservation;
  throw Error(ErrorCode::kInvalidArgument, "unknown split rule '" + name + "'");
}

/// SplitMix64 finalizer; derives independent per-tree seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct ForestOptions {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when empty
  int min_leaf = 5;
  int mtry = 0;                  // 0: ceil(sqrt(d))
  SplitRule split_rule = SplitRule::kLogRank;
  int max_candidates = 32;       // split points scanned per feature; 0 = all
  std::uint64_t seed = 0;
};

/// Flat node arrays; feature < 0 marks a leaf whose hazard row is `leaf`.
struct SurvivalTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> leaf;
  std::vector<double> leaf_cumhaz;  // n_leaves x grid, row-major
  std::vector<int> leaf_size;

  std::size_t terminal_node(std::span<const double> x) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
      node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node] : right[node]);
    }
    return node;
  }
};

struct SurvivalForest {
  std::vector<SurvivalTree> trees;
  std::vector<double> grid;  // training event times
  std::size_t dimension = 0;
  ForestOptions options;

  /// Ensemble-averaged cumulative hazard on `grid`.
  std::vector<double> cumulative_hazard(std::span<const double> x) const {
    require(x.size() == dimension, ErrorCode::kDimensionMismatch,
            "expected " + std::to_string(dimension) + " covariates, got " + std::to_string(x.size()));
    std::vector<double> h(grid.size(), 0.0);
    for (const auto& tree : trees) {
      const auto node = tree.terminal_node(x);
      const auto row = static_cast<std::size_t>(tree.leaf[node]) * grid.size();
      for (std::size_t k = 0; k < grid.size(); ++k) h[k] += tree.leaf_cumhaz[row + k];
    }
    for (double& v : h) v /= static_cast<double>(trees.size());
    return h;
  }

  /// Ensemble mortality: summed cumulative hazard over the grid.
  double risk_score(std::span<const double> x) const {
    const auto h = cumulative_hazard(x);
    return std::accumulate(h.begin(), h.end(), 0.0);
  }
};

namespace detail {

class TreeGrower {
 public:
  TreeGrower(const SurvivalData& data, const std::vector<int>& time_rank, std::size_t n_ranks,
             const std::vector<double>& grid, const ForestOptions& options, std::uint64_t seed)
      : data_(data), time_rank_(time_rank), n_ranks_(n_ranks), grid_(grid), options_(options), rng_(seed) {
    const std::size_t d = data.dimension();
    mtry_ = options.mtry > 0 ? std::min<std::size_t>(static_cast<std::size_t>(options.mtry), d)
                             : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
  }

  SurvivalTree grow() {
    const std::size_t n = data_.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = pick(rng_);
    std::sort(sample.begin(), sample.end());
    tree_ = {};
    build(sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  int add_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.leaf.push_back(-1);
    return static_cast<int>(tree_.feature.size() - 1);
  }

  void make_leaf(int node, const std::vector<std::size_t>& members) {
    // Nelson-Aalen on the node's (bootstrap) members, sampled on the grid.
    std::vector<double> at_time(n_ranks_, 0.0), deaths(n_ranks_, 0.0);
    for (std::size_t i : members) {
      at_time[static_cast<std::size_t>(time_rank_[i])] += 1.0;
      deaths[static_cast<std::size_t>(time_rank_[i])] += data_.events[i];
    }
    std::vector<double> at_risk(n_ranks_, 0.0);
    double running = 0.0;
    for (std::size_t k = n_ranks_; k-- > 0;) {
      running += at_time[k];
      at_risk[k] = running;
    }
    tree_.leaf[static_cast<std::size_t>(node)] = static_cast<int>(tree_.leaf_size.size());
    tree_.leaf_size.push_back(static_cast<int>(members.size()));
    // Grid times are event times, hence a subset of the ranked times.
    std::size_t rank = 0;
    double h = 0.0;
    for (double t : grid_) {
      while (rank < n_ranks_ && rank_time_[rank] <= t) {
        if (deaths[rank] > 0.0) h += deaths[rank] / at_risk[rank];
        ++rank;
      }
      tree_.leaf_cumhaz.push_back(h);
    }
  }

  void build_from(int node, std::vector<std::size_t> members, int depth) {
    std::size_t events = 0;
    for (std::size_t i : members) events += static_cast<std::size_t>(data_.events[i]);
    const auto min_leaf = static_cast<std::size_t>(options_.min_leaf);
    const bool depth_left = !options_.max_depth || depth < *options_.max_depth;
    Split best;
    if (depth_left && members.size() >= 2 * min_leaf && events >= 2) best = find_split(members);
    if (best.feature < 0) {
      make_leaf(node, members);
      return;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : members) {
      (data_.x(static_cast<Eigen::Index>(i), best.feature) <= best.threshold ? left : right).push_back(i);
    }
    members.clear();
    members.shrink_to_fit();
    tree_.feature[static_cast<std::size_t>(node)] = best.feature;
    tree_.threshold[static_cast<std::size_t>(node)] = best.threshold;
    const int l = add_node();
    tree_.left[static_cast<std::size_t>(node)] = l;
    build_from(l, std::move(left), depth + 1);
    const int r = add_node();
    tree_.right[static_cast<std::size_t>(node)] = r;
    build_from(r, std::move(right), depth + 1);
  }

  void build(const std::vector<std::size_t>& sample, int depth) {
    rank_time_.assign(n_ranks_, 0.0);
    for (std::size_t i = 0; i < data_.size(); ++i) rank_time_[static_cast<std::size_t>(time_rank_[i])] = data_.durations[i];
    const int root = add_node();
    build_from(root, sample, depth);
  }

  Split find_split(const std::vector<std::size_t>& members) {
    // Partial Fisher-Yates: the first mtry entries become the candidate features.
    for (std::size_t k = 0; k < mtry_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, features_.size() - 1);
      std::swap(features_[k], features_[pick(rng_)]);
    }
    // Node-local time ranks.
    std::vector<int> local_of(n_ranks_, -1);
    std::vector<int> ranks;
    for (std::size_t i : members) ranks.push_back(time_rank_[i]);
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    for (std::size_t k = 0; k < ranks.size(); ++k) local_of[static_cast<std::size_t>(ranks[k])] = static_cast<int>(k);
    const std::size_t t_count = ranks.size();
    std::vector<double> count(t_count, 0.0), death(t_count, 0.0);
    for (std::size_t i : members) {
      const auto k = static_cast<std::size_t>(local_of[static_cast<std::size_t>(time_rank_[i])]);
      count[k] += 1.0;
      death[k] += data_.events[i];
    }
    double total_events = std::accumulate(death.begin(), death.end(), 0.0);

    Split best;
    const std::size_t m = members.size();
    const auto min_leaf = static_cast<std::size_t>(options_.min_leaf);
    std::vector<std::pair<double, std::size_t>> sorted(m);
    std::vector<double> count_left(t_count), death_left(t_count);
    std::vector<std::size_t> valid;
    for (std::size_t fi = 0; fi < mtry_; ++fi) {
      const int f = static_cast<int>(features_[fi]);
      for (std::size_t j = 0; j < m; ++j) sorted[j] = {data_.x(static_cast<Eigen::Index>(members[j]), f), members[j]};
      std::sort(sorted.begin(), sorted.end());
      // Valid cut positions p: left = sorted[0, p).
      valid.clear();
      double events_left = 0.0;
      for (std::size_t p = 1; p < m; ++p) {
        events_left += data_.events[sorted[p - 1].second];
        if (sorted[p - 1].first == sorted[p].first) continue;
        if (p < min_leaf || m - p < min_leaf) continue;
        if (events_left < 1.0 || total_events - events_left < 1.0) continue;
        valid.push_back(p);
      }
      if (valid.empty()) continue;
      std::vector<std::size_t> cuts;
      const auto cap = static_cast<std::size_t>(options_.max_candidates);
      if (cap == 0 || valid.size() <= cap) {
        cuts = valid;
      } else {
        for (std::size_t c = 0; c < cap; ++c) cuts.push_back(valid[(c * (valid.size() - 1)) / (cap - 1)]);
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      }
      std::fill(count_left.begin(), count_left.end(), 0.0);
      std::fill(death_left.begin(), death_left.end(), 0.0);
      std::size_t p = 0;
      for (std::size_t cut : cuts) {
        for (; p < cut; ++p) {
          const std::size_t i = sorted[p].second;
          const auto k = static_cast<std::size_t>(local_of[static_cast<std::size_t>(time_rank_[i])]);
          count_left[k] += 1.0;
          death_left[k] += data_.events[i];
        }
        const double score = split_score(count, death, count_left, death_left, cut, m);
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = 0.5 * (sorted[cut - 1].first + sorted[cut].first);
        }
      }
    }
    if (!(best.score > 0.0)) best.feature = -1;
    return best;
  }

  double split_score(const std::vector<double>& count, const std::vector<double>& death,
                     const std::vector<double>& count_left, const std::vector<double>& death_left, std::size_t n_left,
                     std::size_t n) const {
    const std::size_t t_count = count.size();
    if (options_.split_rule == SplitRule::kLogRank) {
      double y = 0.0, yl = 0.0, num = 0.0, var = 0.0;
      for (std::size_t k = t_count; k-- > 0;) {
        y += count[k];
        yl += count_left[k];
        const double dk = death[k];
        if (dk <= 0.0) continue;
        num += death_left[k] - yl * dk / y;
        if (y > 1.0) var += (yl / y) * (1.0 - yl / y) * ((y - dk) / (y - 1.0)) * dk;
      }
      return var > 0.0 ? std::abs(num) / std::sqrt(var) : 0.0;
    }
    // Hazard separation: mean |H_left - H_right| over node event times,
    // weighted by the balance of the split.
    std::vector<double> yl_at(t_count), y_at(t_count);
    double y = 0.0, yl = 0.0;
    for (std::size_t k = t_count; k-- > 0;) {
      y += count[k];
      yl += count_left[k];
      y_at[k] = y;
      yl_at[k] = yl;
    }
    double hl = 0.0, hr = 0.0, gap = 0.0;
    std::size_t times = 0;
    for (std::size_t k = 0; k < t_count; ++k) {
      if (death[k] <= 0.0) continue;
      if (yl_at[k] > 0.0) hl += death_left[k] / yl_at[k];
      const double yr = y_at[k] - yl_at[k];
      if (yr > 0.0) hr += (death[k] - death_left[k]) / yr;
      gap += std::abs(hl - hr);
      ++times;
    }
    if (times == 0) return 0.0;
    const double nl = static_cast<double>(n_left), nn = static_cast<double>(n);
    return gap / static_cast<double>(times) * (nl * (nn - nl)) / (nn * nn);
  }

  const SurvivalData& data_;
  const std::vector<int>& time_rank_;
  std::size_t n_ranks_;
  const std::vector<double>& grid_;
  const ForestOptions& options_;
  std::mt19937_64 rng_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> features_;
  std::vector<double> rank_time_;
  SurvivalTree tree_;
};

}  // namespace detail

inline SurvivalForest fit_rsf(const SurvivalData& data, const ForestOptions& options = {}) {
  validate(data);
  require(options.n_trees >= 1, ErrorCode::kInvalidArgument, "RSF: n_trees must be >= 1");
  require(options.min_leaf >= 2, ErrorCode::kInvalidArgument, "RSF: min_leaf must be >= 2");
  require(!options.max_depth || *options.max_depth >= 0, ErrorCode::kInvalidArgument, "RSF: max_depth must be >= 0");
  require(options.max_candidates >= 0 && options.max_candidates != 1, ErrorCode::kInvalidArgument,
          "RSF: max_candidates must be 0 or >= 2");
  if (data.event_count() == 0) throw Error(ErrorCode::kTooFewEvents, "RSF needs at least one observed event");

  SurvivalForest forest;
  forest.dimension = data.dimension();
  forest.options = options;
  forest.grid = unique_event_times(data.durations, data.events);

  std::vector<double> all_times = data.durations;
  std::sort(all_times.begin(), all_times.end());
  all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());
  std::vector<int> time_rank(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    time_rank[i] = static_cast<int>(std::lower_bound(all_times.begin(), all_times.end(), data.durations[i]) - all_times.begin());
  }

  forest.trees.reserve(static_cast<std::size_t>(options.n_trees));
  for (int t = 0; t < options.n_trees; ++t) {
    detail::TreeGrower grower(data, time_rank, all_times.size(), forest.grid, options,
                              mix_seed(options.seed, static_cast<std::uint64_t>(t)));
    forest.trees.push_back(grower.grow());
  }
  return forest;
}

inline SurvivalCurve predict_survival(const SurvivalForest& forest, std::span<const double> x,
                                      std::span<const double> times) {
  check_times(times);
  const auto h = forest.cumulative_hazard(x);
  SurvivalCurve c;
  c.times.assign(times.begin(), times.end());
  for (double t : times) c.survival.push_back(std::exp(-step_value(forest.grid, h, t, 0.0)));
  return c;
}

}  // namespace bsurv::models
