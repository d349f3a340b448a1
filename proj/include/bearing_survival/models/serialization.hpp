#pragma once

// Versioned JSON documents for fitted models. Doubles are written with
// round-trip precision, so predictions from a reloaded model are bit-equal.

#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bearing_survival/error.hpp"
#include "bearing_survival/models/cox.hpp"
#include "bearing_survival/models/coxboost.hpp"
#include "bearing_survival/models/forest.hpp"
#include "bearing_survival/models/weibull_aft.hpp"

namespace bsurv::models {

using AnyModel = std::variant<CoxModel, WeibullAftModel, SurvivalForest, BoostedCoxModel>;

inline constexpr const char* kModelFormat = "bearing-survival-model";
inline constexpr int kModelFormatVersion = 1;

inline std::string model_kind(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CoxModel>) return "coxph";
        else if constexpr (std::is_same_v<T, WeibullAftModel>) return "weibull_aft";
        else if constexpr (std::is_same_v<T, SurvivalForest>) return "rsf";
        else return "coxboost";
      },
      model);
}

inline double risk_score(const AnyModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.risk_score(x); }, model);
}

inline SurvivalCurve predict_survival(const AnyModel& model, std::span<const double> x, std::span<const double> times) {
  return std::visit([&](const auto& m) { return predict_survival(m, x, times); }, model);
}

namespace detail {

using nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json to_json(const BaselineHazard& b) { return {{"times", b.times}, {"cumhaz", b.cumhaz}}; }

inline BaselineHazard baseline_from(const json& j) {
  return {j.at("times").get<std::vector<double>>(), j.at("cumhaz").get<std::vector<double>>()};
}

}  // namespace detail

inline nlohmann::json to_json(const AnyModel& model) {
  using nlohmann::json;
  using detail::to_json;
  json doc = {{"format", kModelFormat}, {"version", kModelFormatVersion}, {"kind", model_kind(model)}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CoxModel>) {
          doc["beta"] = to_json(m.beta);
          doc["train_mean"] = to_json(m.train_mean);
          doc["baseline"] = to_json(m.baseline);
          doc["iterations"] = m.diagnostics.iterations;
        } else if constexpr (std::is_same_v<T, WeibullAftModel>) {
          doc["intercept"] = m.intercept;
          doc["coefficients"] = to_json(m.coefficients);
          doc["shape"] = m.shape;
          doc["train_mean"] = to_json(m.train_mean);
        } else if constexpr (std::is_same_v<T, SurvivalForest>) {
          doc["grid"] = m.grid;
          doc["dimension"] = m.dimension;
          doc["split_rule"] = to_string(m.options.split_rule);
          doc["seed"] = m.options.seed;
          json trees = json::array();
          for (const auto& t : m.trees) {
            trees.push_back({{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left}, {"right", t.right},
                             {"leaf", t.leaf}, {"leaf_cumhaz", t.leaf_cumhaz}, {"leaf_size", t.leaf_size}});
          }
          doc["trees"] = std::move(trees);
        } else {
          doc["learning_rate"] = m.learning_rate;
          doc["n_rounds"] = m.n_rounds;
          doc["dimension"] = m.dimension;
          doc["baseline"] = to_json(m.baseline);
          json trees = json::array();
          for (const auto& t : m.trees) {
            trees.push_back({{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left}, {"right", t.right},
                             {"value", t.value}});
          }
          doc["trees"] = std::move(trees);
        }
      },
      model);
  return doc;
}

inline AnyModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != kModelFormat) throw Error(ErrorCode::kBadModelDocument, "not a model document");
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kBadModelDocument, "unsupported version " + doc.at("version").dump());
    }
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "coxph") {
      CoxModel m;
      m.beta = detail::vector_from(doc.at("beta"));
      m.train_mean = detail::vector_from(doc.at("train_mean"));
      m.baseline = detail::baseline_from(doc.at("baseline"));
      m.diagnostics.iterations = doc.value("iterations", 0);
      return m;
    }
    if (kind == "weibull_aft") {
      WeibullAftModel m;
      m.intercept = doc.at("intercept").get<double>();
      m.coefficients = detail::vector_from(doc.at("coefficients"));
      m.shape = doc.at("shape").get<double>();
      m.train_mean = detail::vector_from(doc.at("train_mean"));
      return m;
    }
    if (kind == "rsf") {
      SurvivalForest m;
      m.grid = doc.at("grid").get<std::vector<double>>();
      m.dimension = doc.at("dimension").get<std::size_t>();
      m.options.split_rule = split_rule_from_string(doc.at("split_rule").get<std::string>());
      m.options.seed = doc.at("seed").get<std::uint64_t>();
      for (const auto& t : doc.at("trees")) {
        SurvivalTree tree;
        tree.feature = t.at("feature").get<std::vector<int>>();
        tree.threshold = t.at("threshold").get<std::vector<double>>();
        tree.left = t.at("left").get<std::vector<int>>();
        tree.right = t.at("right").get<std::vector<int>>();
        tree.leaf = t.at("leaf").get<std::vector<int>>();
        tree.leaf_cumhaz = t.at("leaf_cumhaz").get<std::vector<double>>();
        tree.leaf_size = t.at("leaf_size").get<std::vector<int>>();
        m.trees.push_back(std::move(tree));
      }
      m.options.n_trees = static_cast<int>(m.trees.size());
      return m;
    }
    if (kind == "coxboost") {
      BoostedCoxModel m;
      m.learning_rate = doc.at("learning_rate").get<double>();
      m.n_rounds = doc.at("n_rounds").get<int>();
      m.dimension = doc.at("dimension").get<std::size_t>();
      m.baseline = detail::baseline_from(doc.at("baseline"));
      for (const auto& t : doc.at("trees")) {
        RegressionTree tree;
        tree.feature = t.at("feature").get<std::vector<int>>();
        tree.threshold = t.at("threshold").get<std::vector<double>>();
        tree.left = t.at("left").get<std::vector<int>>();
        tree.right = t.at("right").get<std::vector<int>>();
        tree.value = t.at("value").get<std::vector<double>>();
        m.trees.push_back(std::move(tree));
      }
      return m;
    }
    throw Error(ErrorCode::kBadModelDocument, "unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadModelDocument, e.what());
  }
}

}  // namespace bsurv::models
