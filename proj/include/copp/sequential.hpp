#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "copp/conformal.hpp"
#include "copp/dataset.hpp"
#include "copp/extensions.hpp"
#include "copp/logistic.hpp"
#include "copp/policy.hpp"
#include "copp/prediction_set.hpp"
#include "copp/pseudo.hpp"
#include "copp/quantile_forest.hpp"
#include "copp/rng.hpp"
#include "copp/weighted_quantile.hpp"

namespace copp {

// Ridge strengths pinned ahead of time (one per stage plus one for the
// match-weight model), used by the multi-split wrapper to avoid rerunning
// cross-validation in every repetition.
struct StageRidge {
  std::vector<double> stage_lambda;
  double match_lambda = 0.0;
};

// Fitted state of the sequential pipelines. Prediction conditions on the
// initial state only.
class SequentialCoppModel {
 public:
  enum class Variant { copp, copp_is };

  Variant variant = Variant::copp;
  StagewisePolicy target;
  StagewisePolicy behavior_hat;
  std::function<double(const Vector&)> initial_weight;  // w(x1)
  QuantileForest forest;
  CoppConfig config;
  CalibrationQuantile calibration;
  std::vector<double> cal_weights;
  int horizon = 0;
  int n_train = 0, n_cal = 0;
  int n_train_matched = 0, n_cal_matched = 0;

  double effective_sample_size() const {
    double s = 0.0, s2 = 0.0;
    for (double w : cal_weights) {
      s += w;
      s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
  }

  PredictionSet predict(const Vector& x1) const {
    QuantileForest::Workspace ws;
    return predict(x1, ws);
  }

  PredictionSet predict(const Vector& x1, QuantileForest::Workspace& ws) const {
    auto [q_lo, q_hi] =
        forest.predict_quantiles(x1, config.level_lo(), config.level_hi(), ws);
    double q = calibration.quantile(1.0 - config.alpha, initial_weight(x1));
    if (std::isinf(q)) return PredictionSet::whole_line();
    double lo = q_lo - q, hi = q_hi + q;
    if (lo > hi) return PredictionSet::empty();
    return PredictionSet::interval(lo, hi);
  }

  double p_value(const Vector& x1, double y) const {
    QuantileForest::Workspace ws;
    auto [q_lo, q_hi] =
        forest.predict_quantiles(x1, config.level_lo(), config.level_hi(), ws);
    return calibration.p_value(cqr_score(y, q_lo, q_hi), initial_weight(x1));
  }
};

namespace detail {

inline Matrix stack_histories(const TrajectoryDataset& data, int stage,
                              const std::vector<int>& idx) {
  Matrix H(idx.size(), data.history_dim(stage));
  for (size_t i = 0; i < idx.size(); ++i)
    H.row(i) = data.history(idx[i], stage).transpose();
  return H;
}

inline StagewisePolicy fit_stage_policies(const TrajectoryDataset& data,
                                          const std::vector<int>& train_idx,
                                          const CoppConfig& config,
                                          const StageRidge* pinned,
                                          std::uint64_t seed) {
  StagewisePolicy out;
  for (int k = 0; k < data.horizon(); ++k) {
    Matrix H = stack_histories(data, k, train_idx);
    std::vector<int> y(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i)
      y[i] = data.stage_actions[k][train_idx[i]];
    LogisticModel model;
    if (pinned) {
      model = fit_logistic(H, y, pinned->stage_lambda[k], data.num_actions);
    } else if (config.penalized_cv) {
      model = fit_logistic_cv(H, y, data.num_actions,
                              derive_seed(seed, StreamTag::misc, k));
    } else {
      model = fit_logistic(H, y, config.ridge_lambda, data.num_actions);
    }
    out.stages.push_back(model.as_policy());
  }
  return out;
}

inline std::vector<double> pseudo_stage_probs(const StagewisePolicy& target,
                                              const StagewisePolicy& behavior,
                                              int stage, const Vector& h) {
  std::vector<double> pe = target.stages[stage].probs(h);
  std::vector<double> pb = behavior.stages[stage].probs(h);
  std::vector<double> pa(pe.size());
  double s = 0.0;
  for (size_t t = 0; t < pe.size(); ++t) {
    pa[t] = pe[t] / clip_probability(pb[t]);
    s += pa[t];
  }
  for (double& v : pa) v /= s;
  return pa;
}

struct SequentialParts {
  IndexSplit split;
  StagewisePolicy behavior_hat;
  std::vector<char> full_match;
  std::vector<int> matched_train, matched_cal;
  QuantileForest forest;
  std::function<double(const Vector&)> initial_weight;
};

inline SequentialParts run_sequential_pipeline(
    const TrajectoryDataset& data, const StagewisePolicy& target,
    const std::optional<StagewisePolicy>& behavior, const CoppConfig& config,
    const StageRidge* pinned, std::uint64_t seed) {
  data.validate();
  const int n = data.n();
  const int K = data.horizon();
  if (static_cast<int>(target.stages.size()) != K)
    throw std::invalid_argument("target horizon mismatch");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0,1)");

  SequentialParts parts;
  parts.split = split_indices(n, {config.train_fraction, seed});
  parts.behavior_hat =
      behavior.has_value()
          ? *behavior
          : fit_stage_policies(data, parts.split.train, config, pinned, seed);

  // Stage-wise pseudo actions at the observed histories; a trajectory is
  // retained only when every stage matches.
  Rng pseudo_rng(derive_seed(seed, StreamTag::pseudo_actions));
  parts.full_match.assign(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      Vector h = data.history(i, k);
      std::vector<double> pa =
          pseudo_stage_probs(target, parts.behavior_hat, k, h);
      int a = pseudo_rng.discrete(pa.data(), data.num_actions);
      if (a != data.stage_actions[k][i]) parts.full_match[i] = 0;
    }
  }
  std::vector<char> in_train(n, 0);
  for (int i : parts.split.train) in_train[i] = 1;
  for (int i = 0; i < n; ++i)
    if (parts.full_match[i])
      (in_train[i] ? parts.matched_train : parts.matched_cal).push_back(i);
  if (parts.matched_train.empty())
    throw EmptyCalibrationError("no fully matched training trajectories");

  if (K == 1) {
    // Horizon one is exactly the single-stage problem: the match probability
    // has the closed form sum_t target/behavior, so no classifier is fitted.
    StagewisePolicy tgt = target, beh = parts.behavior_hat;
    parts.initial_weight = [tgt, beh](const Vector& x1) {
      std::vector<double> pe = tgt.stages[0].probs(x1);
      std::vector<double> pb = beh.stages[0].probs(x1);
      double w = 0.0;
      for (size_t t = 0; t < pe.size(); ++t)
        w += pe[t] / clip_probability(pb[t]);
      return w;
    };
  } else {
    // Classifier for the overall match probability given the initial state;
    // the weight is its inverse, clipped to [1, 1/eps].
    Matrix X1(parts.split.train.size(), data.stage_states[0].cols());
    std::vector<int> lbl(parts.split.train.size());
    bool any0 = false, any1 = false;
    for (size_t i = 0; i < parts.split.train.size(); ++i) {
      int idx = parts.split.train[i];
      X1.row(i) = data.stage_states[0].row(idx);
      lbl[i] = parts.full_match[idx];
      (lbl[i] ? any1 : any0) = true;
    }
    if (!any0) {
      parts.initial_weight = [](const Vector&) { return 1.0; };
    } else {
      LogisticModel match_model;
      if (pinned) {
        match_model = fit_logistic(X1, lbl, pinned->match_lambda, 2);
      } else if (config.penalized_cv) {
        match_model = fit_logistic_cv(X1, lbl, 2,
                                      derive_seed(seed, StreamTag::misc, 1000));
      } else {
        match_model = fit_logistic(X1, lbl, config.ridge_lambda, 2);
      }
      parts.initial_weight = [match_model](const Vector& x1) {
        double e = match_model.predict_probs(x1)[1];
        double w = 1.0 / std::max(e, kPositivityFloor);
        return std::min(std::max(w, 1.0), 1.0 / kPositivityFloor);
      };
    }
  }

  Matrix Xtr(parts.matched_train.size(), data.stage_states[0].cols());
  Vector ytr(parts.matched_train.size());
  for (size_t i = 0; i < parts.matched_train.size(); ++i) {
    Xtr.row(i) = data.stage_states[0].row(parts.matched_train[i]);
    ytr[i] = data.outcomes[parts.matched_train[i]];
  }
  ForestConfig fc = config.forest;
  fc.min_leaf_size = std::min<int>(fc.min_leaf_size, std::max<int>(1, Xtr.rows()));
  parts.forest.fit(Xtr, ytr, fc, derive_seed(seed, StreamTag::forest));
  return parts;
}

}  // namespace detail

inline SequentialCoppModel sequential_copp_fit(
    const TrajectoryDataset& data, const StagewisePolicy& target,
    const std::optional<StagewisePolicy>& behavior, const CoppConfig& config,
    std::uint64_t seed, const StageRidge* pinned = nullptr) {
  detail::SequentialParts parts =
      detail::run_sequential_pipeline(data, target, behavior, config, pinned, seed);
  if (parts.matched_cal.empty())
    throw EmptyCalibrationError("matched calibration set is empty");

  SequentialCoppModel model;
  model.variant = SequentialCoppModel::Variant::copp;
  model.target = target;
  model.behavior_hat = parts.behavior_hat;
  model.config = config;
  model.horizon = data.horizon();
  model.n_train = static_cast<int>(parts.split.train.size());
  model.n_cal = static_cast<int>(parts.split.calibration.size());
  model.n_train_matched = static_cast<int>(parts.matched_train.size());
  model.n_cal_matched = static_cast<int>(parts.matched_cal.size());
  model.initial_weight = parts.initial_weight;

  QuantileForest::Workspace ws;
  std::vector<double> scores(parts.matched_cal.size()), weights(parts.matched_cal.size());
  for (size_t i = 0; i < parts.matched_cal.size(); ++i) {
    int idx = parts.matched_cal[i];
    Vector x1 = data.stage_states[0].row(idx).transpose();
    auto [q_lo, q_hi] = parts.forest.predict_quantiles(x1, config.level_lo(),
                                                       config.level_hi(), ws);
    scores[i] = cqr_score(data.outcomes[idx], q_lo, q_hi);
    weights[i] = parts.initial_weight(x1);
  }
  model.forest = std::move(parts.forest);
  model.cal_weights = weights;
  model.calibration = CalibrationQuantile(scores, weights);
  return model;
}

// Importance-sampling variant: every calibration trajectory enters with
// weight prod_k pseudo_k(T_k|H_k) times the initial-state weight.
inline SequentialCoppModel sequential_copp_is_fit(
    const TrajectoryDataset& data, const StagewisePolicy& target,
    const std::optional<StagewisePolicy>& behavior, const CoppConfig& config,
    std::uint64_t seed, const StageRidge* pinned = nullptr) {
  detail::SequentialParts parts =
      detail::run_sequential_pipeline(data, target, behavior, config, pinned, seed);

  SequentialCoppModel model;
  model.variant = SequentialCoppModel::Variant::copp_is;
  model.target = target;
  model.behavior_hat = parts.behavior_hat;
  model.config = config;
  model.horizon = data.horizon();
  model.n_train = static_cast<int>(parts.split.train.size());
  model.n_cal = static_cast<int>(parts.split.calibration.size());
  model.n_train_matched = static_cast<int>(parts.matched_train.size());
  model.n_cal_matched = static_cast<int>(parts.matched_cal.size());
  model.initial_weight = parts.initial_weight;

  QuantileForest::Workspace ws;
  std::vector<double> scores(parts.split.calibration.size());
  std::vector<double> weights(parts.split.calibration.size());
  for (size_t i = 0; i < parts.split.calibration.size(); ++i) {
    int idx = parts.split.calibration[i];
    Vector x1 = data.stage_states[0].row(idx).transpose();
    auto [q_lo, q_hi] = parts.forest.predict_quantiles(x1, config.level_lo(),
                                                       config.level_hi(), ws);
    scores[i] = cqr_score(data.outcomes[idx], q_lo, q_hi);
    double w = parts.initial_weight(x1);
    for (int k = 0; k < data.horizon(); ++k) {
      Vector h = data.history(idx, k);
      std::vector<double> pa =
          detail::pseudo_stage_probs(target, parts.behavior_hat, k, h);
      w *= pa[data.stage_actions[k][idx]];
    }
    weights[i] = w;
  }
  model.forest = std::move(parts.forest);
  model.cal_weights = weights;
  model.calibration = CalibrationQuantile(scores, weights);
  return model;
}

using SequentialMsModel = MultiSplitModel<SequentialCoppModel>;

namespace detail {

inline std::optional<StageRidge> pin_sequential_lambda(
    const TrajectoryDataset& data, const std::optional<StagewisePolicy>& behavior,
    const CoppConfig& config, std::uint64_t seed) {
  if (!config.penalized_cv) return std::nullopt;
  StageRidge ridge;
  if (behavior.has_value()) {
    ridge.stage_lambda.assign(data.horizon(), config.ridge_lambda);
  } else {
    std::vector<int> all(data.n());
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < data.horizon(); ++k) {
      Matrix H = stack_histories(data, k, all);
      std::vector<int> y = data.stage_actions[k];
      ridge.stage_lambda.push_back(
          fit_logistic_cv(H, y, data.num_actions,
                          derive_seed(seed, StreamTag::misc, k))
              .ridge_lambda);
    }
  }
  // Match-weight lambda pinned from a pilot run of the pipeline on the full
  // seed: reuse the stage-1 ridge, which shares the feature space.
  ridge.match_lambda = ridge.stage_lambda.front();
  return ridge;
}

}  // namespace detail

inline SequentialMsModel sequential_copp_ms_fit(
    const TrajectoryDataset& data, const StagewisePolicy& target,
    const std::optional<StagewisePolicy>& behavior, const CoppConfig& config,
    const MultiSplitConfig& ms, std::uint64_t seed) {
  ms.majority_threshold();
  std::optional<StageRidge> pinned =
      detail::pin_sequential_lambda(data, behavior, config, seed);
  CoppConfig per = config;
  if (pinned) per.penalized_cv = false;
  SequentialMsModel model;
  model.config = ms;
  model.models.reserve(ms.repetitions);
  for (int b = 0; b < ms.repetitions; ++b)
    model.models.push_back(sequential_copp_fit(
        data, target, behavior, per, derive_seed(seed, StreamTag::multi_split, b),
        pinned ? &*pinned : nullptr));
  return model;
}

inline SequentialMsModel sequential_copp_is_ms_fit(
    const TrajectoryDataset& data, const StagewisePolicy& target,
    const std::optional<StagewisePolicy>& behavior, const CoppConfig& config,
    const MultiSplitConfig& ms, std::uint64_t seed) {
  ms.majority_threshold();
  std::optional<StageRidge> pinned =
      detail::pin_sequential_lambda(data, behavior, config, seed);
  CoppConfig per = config;
  if (pinned) per.penalized_cv = false;
  SequentialMsModel model;
  model.config = ms;
  model.models.reserve(ms.repetitions);
  for (int b = 0; b < ms.repetitions; ++b)
    model.models.push_back(sequential_copp_is_fit(
        data, target, behavior, per, derive_seed(seed, StreamTag::multi_split, b),
        pinned ? &*pinned : nullptr));
  return model;
}

}  // namespace copp
