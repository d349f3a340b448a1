#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models.hpp"
#include "oracles.hpp"

using namespace bsurv;
using namespace bsurv::models;

namespace {

SurvivalData make_data(std::vector<std::vector<double>> rows, std::vector<double> t, std::vector<int> e) {
  SurvivalData d;
  const auto cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  d.x.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) d.x(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  }
  d.durations = std::move(t);
  d.events = std::move(e);
  return d;
}

// Exponential proportional-hazards data with rate exp(beta . x), optional
// uniform censoring.
SurvivalData linear_data(std::size_t n, const std::vector<double>& beta, std::uint64_t seed, double censor_max = 0.0,
                         double noise_dims = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = beta.size() + static_cast<std::size_t>(noise_dims);
  SurvivalData out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = g(rng);
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      if (k < beta.size()) eta += beta[k] * v;
    }
    double w = 0.0;
    while (w <= 0.0) w = u(rng);
    const double t = -std::log(w) / std::exp(eta);
    if (censor_max > 0.0) {
      const double c = censor_max * u(rng) + 1e-9;
      out.durations.push_back(std::min(t, c));
      out.events.push_back(t <= c ? 1 : 0);
    } else {
      out.durations.push_back(t);
      out.events.push_back(1);
    }
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const SurvivalData& d) {
  std::vector<std::vector<double>> rows(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (Eigen::Index k = 0; k < d.x.cols(); ++k) rows[i].push_back(d.x(static_cast<Eigen::Index>(i), k));
  }
  return rows;
}

template <typename Model>
double test_ci(const Model& m, const SurvivalData& test) {
  std::vector<double> risk;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::VectorXd xi = test.x.row(static_cast<Eigen::Index>(i)).transpose();
    risk.push_back(m.risk_score(std::span<const double>(xi.data(), xi.size())));
  }
  return metrics::harrell_ci(test.durations, test.events, risk).value;
}

std::vector<double> row(const SurvivalData& d, std::size_t i) {
  const Eigen::VectorXd xi = d.x.row(static_cast<Eigen::Index>(i)).transpose();
  return {xi.data(), xi.data() + xi.size()};
}

}  // namespace

TEST(KaplanMeier, AllEvents) {
  const auto c = kaplan_meier(std::vector<double>{1, 2, 3}, std::vector<int>{1, 1, 1});
  ASSERT_EQ(c.times, (std::vector<double>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(c.survival[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.survival[1], 1.0 / 3.0);
  EXPECT_EQ(c.survival[2], 0.0);
}

TEST(KaplanMeier, OneCensored) {
  const auto c = kaplan_meier(std::vector<double>{5, 3, 2}, std::vector<int>{1, 0, 1});
  EXPECT_DOUBLE_EQ(c.at(2.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.at(3.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.at(4.9), 2.0 / 3.0);
  EXPECT_EQ(c.at(5.0), 0.0);
  EXPECT_EQ(c.at(1.0), 1.0);
}

TEST(KaplanMeier, AllCensoredAndTies) {
  const auto c = kaplan_meier(std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 0});
  for (double s : c.survival) EXPECT_EQ(s, 1.0);
  // Ties: two deaths at 1 among 4 at risk.
  const auto t = kaplan_meier(std::vector<double>{1, 1, 2, 4}, std::vector<int>{1, 1, 0, 1});
  EXPECT_EQ(t.at(1.0), 0.5);
  EXPECT_EQ(t.at(4.0), 0.0);
  EXPECT_THROW(kaplan_meier(std::vector<double>{}, std::vector<int>{}), Error);
}

TEST(CoxLikelihood, MatchesEnumerationOracle) {
  auto data = linear_data(60, {0.7, -0.4, 0.2}, 1, 2.0);
  // Round durations to force ties.
  for (double& t : data.durations) t = std::ceil(t * 4.0) / 4.0;
  const auto rows = rows_of(data);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd beta(3);
    for (Eigen::Index k = 0; k < 3; ++k) beta[k] = g(rng);
    const std::vector<double> b(beta.data(), beta.data() + 3);
    const auto lik = cox_partial_likelihood(data, beta);
    EXPECT_NEAR(lik.value, oracle::cox_loglik(rows, data.durations, data.events, b), 1e-9 * std::abs(lik.value));
    for (std::size_t k = 0; k < 3; ++k) {
      const double h = 1e-5;
      auto up = b, down = b;
      up[k] += h;
      down[k] -= h;
      const double fd = (oracle::cox_loglik(rows, data.durations, data.events, up) -
                         oracle::cox_loglik(rows, data.durations, data.events, down)) /
                        (2.0 * h);
      const double analytic = lik.gradient[static_cast<Eigen::Index>(k)];
      EXPECT_LT(std::abs(analytic - fd) / std::max(1.0, std::abs(fd)), 1e-5) << "trial " << trial << " k " << k;
      // Hessian column k against differences of the analytic gradient.
      Eigen::VectorXd bu = beta, bd = beta;
      bu[static_cast<Eigen::Index>(k)] += h;
      bd[static_cast<Eigen::Index>(k)] -= h;
      const Eigen::VectorXd col = (cox_partial_likelihood(data, bu).gradient - cox_partial_likelihood(data, bd).gradient) / (2.0 * h);
      EXPECT_LT((col - lik.hessian.col(static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, col.norm()));
    }
  }
}

TEST(CoxFit, OneCovariateGridOracle) {
  const auto data = make_data({{1}, {0}, {1}, {0}}, {1, 2, 3, 4}, {1, 1, 1, 1});
  const auto rows = rows_of(data);
  double best_beta = 0.0, best = -1e300;
  for (int i = -50000; i <= 50000; ++i) {
    const double b = 1e-4 * i;
    const double ll = oracle::cox_loglik(rows, data.durations, data.events, {b});
    if (ll > best) {
      best = ll;
      best_beta = b;
    }
  }
  const auto model = fit_coxph(data, {100, 1e-9});
  EXPECT_NEAR(model.beta[0], best_beta, 1e-3);
  EXPECT_NEAR(model.diagnostics.log_likelihood, best, 1e-6);
}

TEST(CoxFit, RecoversLinearSignal) {
  const auto data = linear_data(2000, {1.0, -0.5}, 2, 0.0, 1);
  const auto model = fit_coxph(data);
  EXPECT_NEAR(model.beta[0], 1.0, 0.1);
  EXPECT_NEAR(model.beta[1], -0.5, 0.1);
  EXPECT_NEAR(model.beta[2], 0.0, 0.1);
}

TEST(CoxFit, ZeroCovariateGivesNelsonAalen) {
  const auto data = make_data({{0}, {0}, {0}, {0}, {0}}, {1, 2, 2, 4, 5}, {1, 1, 0, 1, 0});
  const auto model = fit_coxph(data);
  EXPECT_EQ(model.beta[0], 0.0);
  // Nelson-Aalen: 1/5 at 1, + 1/4 at 2, + 1/2 at 4.
  EXPECT_NEAR(model.baseline.at(1.0), 0.2, 1e-12);
  EXPECT_NEAR(model.baseline.at(2.0), 0.45, 1e-12);
  EXPECT_NEAR(model.baseline.at(4.5), 0.95, 1e-12);
  const std::vector<double> times{1, 2, 4};
  const std::vector<double> x{3.0};
  const auto c = predict_survival(model, x, times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(c.survival[k], std::exp(-model.baseline.at(times[k])), 1e-15);
}

TEST(CoxFit, SeparationReported) {
  const auto data = make_data({{1}, {1}, {1}, {0}, {0}, {0}}, {1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1});
  try {
    fit_coxph(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMonotoneLikelihood);
  }
}

TEST(CoxFit, NoEventsAndBadInput) {
  EXPECT_THROW(fit_coxph(make_data({{1}, {0}}, {1, 2}, {0, 0})), Error);
  EXPECT_THROW(fit_coxph(make_data({{1}, {0}}, {1, -2}, {1, 1})), Error);
}

TEST(CoxPredict, HigherRiskIsLower) {
  const auto data = linear_data(300, {0.8}, 3);
  const auto model = fit_coxph(data);
  const std::vector<double> times{0.1, 0.5, 1.0, 2.0};
  const auto lo = predict_survival(model, std::vector<double>{-1.0}, times);
  const auto hi = predict_survival(model, std::vector<double>{1.0}, times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_LE(hi.survival[k], lo.survival[k]);
  EXPECT_THROW(predict_survival(model, std::vector<double>{1.0, 2.0}, times), Error);
}

TEST(WeibullAft, RecoversShapeAndScale) {
  double k_sum = 0.0, lambda_sum = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(100 + s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SurvivalData data;
    data.x.resize(2000, 0);
    for (int i = 0; i < 2000; ++i) {
      double w = 0.0;
      while (w <= 0.0) w = u(rng);
      data.durations.push_back(10.0 * std::sqrt(-std::log(w)));
      data.events.push_back(1);
    }
    const auto m = fit_weibull_aft(data);
    EXPECT_GE(m.shape, 1.85);
    EXPECT_LE(m.shape, 2.15);
    k_sum += m.shape;
    lambda_sum += std::exp(m.intercept);
  }
  EXPECT_NEAR(k_sum / seeds, 2.0, 0.15);
  EXPECT_NEAR(lambda_sum / seeds, 10.0, 0.5);
}

TEST(WeibullAft, FixedUnitShapeIsExponential) {
  auto data = linear_data(400, {}, 4, 3.0);
  data.x.resize(static_cast<Eigen::Index>(data.size()), 0);
  WeibullOptions opts;
  opts.fixed_shape = 1.0;
  const auto m = fit_weibull_aft(data, opts);
  double total = 0.0;
  for (double t : data.durations) total += t;
  const double mle = total / static_cast<double>(data.event_count());
  EXPECT_NEAR(std::exp(m.intercept), mle, 1e-6 * mle);
  const std::vector<double> times{0.3, 1.0, 2.5};
  const auto c = predict_survival(m, std::vector<double>{}, times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(c.survival[k], std::exp(-times[k] / mle), 1e-6);
}

TEST(WeibullAft, CovariateSignAndErrors) {
  const auto data = linear_data(1000, {0.9}, 5, 4.0);
  const auto m = fit_weibull_aft(data);
  // Higher hazard means a shorter scale: negative AFT coefficient.
  EXPECT_LT(m.coefficients[0], 0.0);
  EXPECT_NEAR(m.shape, 1.0, 0.1);
  EXPECT_NEAR(m.coefficients[0], -0.9, 0.1);
  auto censored = data;
  for (int& e : censored.events) e = 0;
  try {
    fit_weibull_aft(censored);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEvents);
  }
}

TEST(WeibullAft, PenalizerShrinks) {
  const auto data = linear_data(200, {0.9, 0.5}, 6, 4.0);
  WeibullOptions strong;
  strong.penalizer = 10.0;
  EXPECT_LT(fit_weibull_aft(data, strong).coefficients.norm(), fit_weibull_aft(data).coefficients.norm());
}

// Tied times within each group make the group boundary the log-rank optimum
// for every bootstrap resample.
TEST(Rsf, RootSplitSeparatesGroups) {
  std::vector<std::vector<double>> rows;
  std::vector<double> t;
  std::vector<int> e;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({static_cast<double>(i)});
    t.push_back(1.0);
    e.push_back(1);
    rows.push_back({50.0 + i});
    t.push_back(100.0);
    e.push_back(1);
  }
  const auto data = make_data(rows, t, e);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ForestOptions opts;
    opts.n_trees = 1;
    opts.max_depth = 1;
    opts.seed = seed;
    opts.max_candidates = 0;
    const auto forest = fit_rsf(data, opts);
    const auto& tree = forest.trees.front();
    ASSERT_EQ(tree.feature[0], 0);
    EXPECT_GE(tree.threshold[0], 19.0);
    EXPECT_LT(tree.threshold[0], 50.0);
    EXPECT_EQ(tree.feature.size(), 3u);
  }
}

TEST(Rsf, SameSeedSameForest) {
  const auto data = linear_data(150, {0.8, -0.3}, 7, 3.0, 2);
  ForestOptions opts;
  opts.n_trees = 10;
  opts.seed = 17;
  const auto a = fit_rsf(data, opts), b = fit_rsf(data, opts);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t k = 0; k < a.trees.size(); ++k) {
    EXPECT_EQ(a.trees[k].threshold, b.trees[k].threshold);
    EXPECT_EQ(a.trees[k].feature, b.trees[k].feature);
    EXPECT_EQ(a.trees[k].leaf_cumhaz, b.trees[k].leaf_cumhaz);
  }
  opts.seed = 18;
  const auto c = fit_rsf(data, opts);
  bool differs = false;
  for (std::size_t k = 0; k < a.trees.size(); ++k) differs |= a.trees[k].threshold != c.trees[k].threshold;
  EXPECT_TRUE(differs);
}

TEST(Rsf, EnsembleBeatsSingleTree) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto train = linear_data(200, {0.8, -0.6}, 1000 + seed, 3.0, 2);
    const auto test = linear_data(200, {0.8, -0.6}, 2000 + seed, 3.0, 2);
    ForestOptions one;
    one.n_trees = 1;
    one.seed = seed;
    ForestOptions many = one;
    many.n_trees = 100;
    if (test_ci(fit_rsf(train, many), test) >= test_ci(fit_rsf(train, one), test)) ++wins;
  }
  EXPECT_GE(wins, 8);
}

TEST(Rsf, SurvivalCurvesAreMonotone) {
  const auto data = linear_data(120, {1.0}, 8, 2.0);
  ForestOptions opts;
  opts.n_trees = 20;
  const auto forest = fit_rsf(data, opts);
  std::vector<double> times;
  for (int k = 0; k <= 40; ++k) times.push_back(0.05 * k);
  const auto c = predict_survival(forest, std::vector<double>{0.3}, times);
  EXPECT_EQ(c.survival.front(), 1.0);
  for (std::size_t k = 1; k < c.survival.size(); ++k) EXPECT_LE(c.survival[k], c.survival[k - 1]);
}

TEST(CoxBoost, LikelihoodNeverDecreases) {
  const auto data = linear_data(300, {0.9, -0.4}, 9, 3.0, 1);
  BoostOptions opts;
  opts.n_rounds = 60;
  opts.max_depth = 2;
  const auto m = fit_coxboost(data, opts);
  ASSERT_EQ(m.log_likelihood.size(), 60u);
  for (std::size_t k = 1; k < m.log_likelihood.size(); ++k) EXPECT_GE(m.log_likelihood[k], m.log_likelihood[k - 1] - 1e-9);
}

TEST(CoxBoost, ZeroRateIsNullModel) {
  const auto data = linear_data(100, {0.9}, 10, 3.0);
  BoostOptions opts;
  opts.n_rounds = 1;
  opts.learning_rate = 0.0;
  const auto m = fit_coxboost(data, opts);
  const std::vector<double> zero_eta(data.size(), 0.0);
  const auto na = breslow_baseline(data.durations, data.events, zero_eta);
  const std::vector<double> times{0.2, 0.7, 1.5};
  for (double x : {-2.0, 0.0, 3.0}) {
    const std::vector<double> xi{x};
    EXPECT_EQ(m.risk_score(xi), 0.0);
    const auto c = predict_survival(m, xi, times);
    for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(c.survival[k], std::exp(-na.at(times[k])), 1e-12);
  }
}

TEST(CoxBoost, StumpsTrackCox) {
  const auto train = linear_data(600, {1.0}, 11, 3.0);
  const auto test = linear_data(600, {1.0}, 12, 3.0);
  BoostOptions opts;
  opts.n_rounds = 200;
  opts.max_depth = 1;
  const double boost = test_ci(fit_coxboost(train, opts), test);
  const double cox = test_ci(fit_coxph(train), test);
  EXPECT_NEAR(boost, cox, 0.05);
}

TEST(Serialization, RoundTripIsBitExact) {
  const auto data = linear_data(150, {0.7, -0.5}, 13, 3.0, 1);
  ForestOptions fo;
  fo.n_trees = 5;
  BoostOptions bo;
  bo.n_rounds = 20;
  bo.max_depth = 2;
  const std::vector<AnyModel> fitted{fit_coxph(data), fit_weibull_aft(data), fit_rsf(data, fo), fit_coxboost(data, bo)};
  std::vector<double> times;
  for (int k = 1; k <= 30; ++k) times.push_back(0.1 * k);
  for (const auto& model : fitted) {
    const std::string text = to_json(model).dump();
    const auto back = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(model_kind(back), model_kind(model));
    for (std::size_t i = 0; i < 20; ++i) {
      const auto xi = row(data, i);
      EXPECT_EQ(risk_score(back, xi), risk_score(model, xi));
      EXPECT_EQ(predict_survival(back, xi, times).survival, predict_survival(model, xi, times).survival);
    }
  }
  EXPECT_THROW(model_from_json(nlohmann::json{{"format", "other"}}), Error);
}
