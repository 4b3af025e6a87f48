#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "copp/dataset.hpp"
#include "copp/logistic.hpp"
#include "copp/policy.hpp"
#include "copp/prediction_set.hpp"
#include "copp/pseudo.hpp"
#include "copp/quantile_forest.hpp"
#include "copp/rng.hpp"
#include "copp/synthetic.hpp"
#include "copp/weighted_quantile.hpp"

namespace copp {

struct EmptyCalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoppConfig {
  double alpha = 0.1;
  double train_fraction = 0.75;
  ForestConfig forest;
  bool penalized_cv = false;   // ridge lambda by cross-validation (high-dim)
  double ridge_lambda = 0.0;   // used when penalized_cv is false

  double level_lo() const { return alpha / 2.0; }
  double level_hi() const { return 1.0 - alpha / 2.0; }
};

// Fitted state of the single-stage conformal pipelines. Immutable after
// construction; prediction is pure.
class CoppModel {
 public:
  enum class Variant { copp, copp_is, subsampling };

  Variant variant = Variant::copp;
  Policy target;
  Policy behavior_hat;          // fitted or known behavior policy
  bool behavior_known = false;
  QuantileForest forest;
  CoppConfig config;
  CalibrationQuantile calibration;
  std::vector<double> cal_scores;
  std::vector<double> cal_weights;
  int n_train = 0, n_cal = 0;
  int n_train_matched = 0, n_cal_matched = 0;

  // Weight of Algorithm 1 Step 7: sum_t target(t|x)/behavior_hat(t|x).
  double context_weight(const Vector& x) const {
    std::vector<double> pe = target.probs(x);
    std::vector<double> pb = behavior_hat.probs(x);
    double w = 0.0;
    for (size_t t = 0; t < pe.size(); ++t)
      w += pe[t] / clip_probability(pb[t]);
    return w;
  }

  double test_weight(const Vector& x) const { return context_weight(x); }

  std::pair<double, double> quantile_band(const Vector& x,
                                          QuantileForest::Workspace& ws) const {
    return forest.predict_quantiles(x, config.level_lo(), config.level_hi(), ws);
  }

  PredictionSet predict(const Vector& x) const {
    QuantileForest::Workspace ws;
    return predict(x, ws);
  }

  PredictionSet predict(const Vector& x, QuantileForest::Workspace& ws) const {
    auto [q_lo, q_hi] = quantile_band(x, ws);
    double q = calibration.quantile(1.0 - config.alpha, test_weight(x));
    if (std::isinf(q)) return PredictionSet::whole_line();
    double lo = q_lo - q, hi = q_hi + q;
    if (lo > hi) return PredictionSet::empty();
    return PredictionSet::interval(lo, hi);
  }

  // Conformal p-value of the hypothesis Y^{pi_e} = y given X = x.
  double p_value(const Vector& x, double y) const {
    QuantileForest::Workspace ws;
    return p_value(x, y, ws);
  }

  double p_value(const Vector& x, double y, QuantileForest::Workspace& ws) const {
    auto [q_lo, q_hi] = quantile_band(x, ws);
    return calibration.p_value(cqr_score(y, q_lo, q_hi), test_weight(x));
  }

  // Effective sample size of the calibration weights, 1/sum p_i^2.
  double effective_sample_size() const {
    double s = 0.0, s2 = 0.0;
    for (double w : cal_weights) {
      s += w;
      s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
  }
};

namespace detail {

inline Policy fit_behavior_policy(const BanditDataset& data,
                                  const std::vector<int>& train_idx,
                                  const CoppConfig& config, std::uint64_t seed) {
  Matrix X(train_idx.size(), data.dim());
  std::vector<int> y(train_idx.size());
  for (size_t i = 0; i < train_idx.size(); ++i) {
    X.row(i) = data.contexts.row(train_idx[i]);
    y[i] = data.actions[train_idx[i]];
  }
  LogisticModel model =
      config.penalized_cv
          ? fit_logistic_cv(X, y, data.num_actions, seed)
          : fit_logistic(X, y, config.ridge_lambda, data.num_actions);
  return model.as_policy();
}

struct PipelineParts {
  IndexSplit split;
  Policy behavior_hat;
  std::vector<int> sampled_actions;  // pseudo (A) or target draws (E)
  std::vector<int> matched_train, matched_cal;
  QuantileForest forest;
  std::vector<double> scores_matched_cal;  // aligned with matched_cal
};

// Steps 1-6 of the single-stage pipeline, shared by COPP, COPP-IS and the
// subsampling comparator. `sampler` decides which policy generates the
// auxiliary actions.
inline PipelineParts run_pipeline(const BanditDataset& data, const Policy& target,
                                  const std::optional<Policy>& behavior,
                                  const CoppConfig& config, std::uint64_t seed,
                                  bool sample_from_target) {
  data.validate();
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0,1)");
  PipelineParts parts;
  parts.split = split_indices(data.n(), {config.train_fraction, seed});

  parts.behavior_hat =
      behavior.has_value()
          ? *behavior
          : fit_behavior_policy(data, parts.split.train, config, seed);

  Rng pseudo_rng(derive_seed(seed, StreamTag::pseudo_actions));
  if (sample_from_target) {
    parts.sampled_actions.resize(data.n());
    for (int i = 0; i < data.n(); ++i) {
      std::vector<double> p = target.probs(data.contexts.row(i).transpose());
      parts.sampled_actions[i] = pseudo_rng.discrete(p.data(), data.num_actions);
    }
  } else {
    PseudoPolicy pa(target, parts.behavior_hat);
    parts.sampled_actions = sample_pseudo_actions(pa, data.contexts, pseudo_rng);
  }

  std::vector<int> matched = select_matched(data.actions, parts.sampled_actions);
  std::vector<char> in_train(data.n(), 0);
  for (int i : parts.split.train) in_train[i] = 1;
  for (int i : matched)
    (in_train[i] ? parts.matched_train : parts.matched_cal).push_back(i);

  if (parts.matched_train.empty())
    throw EmptyCalibrationError("no matched training subsamples");
  Matrix Xtr(parts.matched_train.size(), data.dim());
  Vector ytr(parts.matched_train.size());
  for (size_t i = 0; i < parts.matched_train.size(); ++i) {
    Xtr.row(i) = data.contexts.row(parts.matched_train[i]);
    ytr[i] = data.outcomes[parts.matched_train[i]];
  }
  ForestConfig fc = config.forest;
  fc.min_leaf_size = std::min<int>(fc.min_leaf_size, std::max<int>(1, Xtr.rows()));
  parts.forest.fit(Xtr, ytr, fc, derive_seed(seed, StreamTag::forest));

  QuantileForest::Workspace ws;
  parts.scores_matched_cal.resize(parts.matched_cal.size());
  for (size_t i = 0; i < parts.matched_cal.size(); ++i) {
    int idx = parts.matched_cal[i];
    auto [q_lo, q_hi] = parts.forest.predict_quantiles(
        data.contexts.row(idx).transpose(), config.level_lo(), config.level_hi(), ws);
    parts.scores_matched_cal[i] = cqr_score(data.outcomes[idx], q_lo, q_hi);
  }
  return parts;
}

}  // namespace detail

// Algorithm 1: split, fit/accept the behavior policy, draw pseudo actions,
// select matched subsamples, fit quantile regression, score the matched
// calibration points and prepare the weighted quantile engine.
inline CoppModel copp_fit(const BanditDataset& data, const Policy& target,
                          const std::optional<Policy>& behavior,
                          const CoppConfig& config, std::uint64_t seed) {
  detail::PipelineParts parts =
      detail::run_pipeline(data, target, behavior, config, seed, false);
  if (parts.matched_cal.empty())
    throw EmptyCalibrationError("matched calibration set is empty");

  CoppModel model;
  model.variant = CoppModel::Variant::copp;
  model.target = target;
  model.behavior_hat = parts.behavior_hat;
  model.behavior_known = behavior.has_value();
  model.config = config;
  model.n_train = static_cast<int>(parts.split.train.size());
  model.n_cal = static_cast<int>(parts.split.calibration.size());
  model.n_train_matched = static_cast<int>(parts.matched_train.size());
  model.n_cal_matched = static_cast<int>(parts.matched_cal.size());
  model.cal_scores = parts.scores_matched_cal;
  model.cal_weights.resize(parts.matched_cal.size());
  for (size_t i = 0; i < parts.matched_cal.size(); ++i)
    model.cal_weights[i] =
        model.context_weight(data.contexts.row(parts.matched_cal[i]).transpose());
  model.forest = std::move(parts.forest);
  model.calibration = CalibrationQuantile(model.cal_scores, model.cal_weights);
  return model;
}

inline PredictionSet copp_predict(const CoppModel& model, const Vector& x) {
  return model.predict(x);
}

// Importance-sampling extension: the forest still trains on matched
// subsamples, but every calibration point enters the weighted quantile with
// weight pseudo(T_i|X_i) * w(X_i).
inline CoppModel copp_is_fit(const BanditDataset& data, const Policy& target,
                             const std::optional<Policy>& behavior,
                             const CoppConfig& config, std::uint64_t seed) {
  detail::PipelineParts parts =
      detail::run_pipeline(data, target, behavior, config, seed, false);

  CoppModel model;
  model.variant = CoppModel::Variant::copp_is;
  model.target = target;
  model.behavior_hat = parts.behavior_hat;
  model.behavior_known = behavior.has_value();
  model.config = config;
  model.n_train = static_cast<int>(parts.split.train.size());
  model.n_cal = static_cast<int>(parts.split.calibration.size());
  model.n_train_matched = static_cast<int>(parts.matched_train.size());
  model.n_cal_matched = static_cast<int>(parts.matched_cal.size());

  PseudoPolicy pa(target, parts.behavior_hat);
  QuantileForest::Workspace ws;
  model.cal_scores.resize(parts.split.calibration.size());
  model.cal_weights.resize(parts.split.calibration.size());
  for (size_t i = 0; i < parts.split.calibration.size(); ++i) {
    int idx = parts.split.calibration[i];
    Vector x = data.contexts.row(idx).transpose();
    auto [q_lo, q_hi] = parts.forest.predict_quantiles(x, config.level_lo(),
                                                       config.level_hi(), ws);
    model.cal_scores[i] = cqr_score(data.outcomes[idx], q_lo, q_hi);
    model.cal_weights[i] =
        pa.prob(data.actions[idx], x) * model.context_weight(x);
  }
  model.forest = std::move(parts.forest);
  model.calibration = CalibrationQuantile(model.cal_scores, model.cal_weights);
  return model;
}

// Subsampling comparator: the same pipeline as copp_fit except that the
// auxiliary draws follow the target policy itself instead of the pseudo
// policy. The matched subsample then has the wrong conditional law whenever
// the target is stochastic and the behavior non-uniform, so the comparator
// is miscalibrated outside those two special cases; when the target is
// deterministic the pseudo and target draws coincide and the comparator
// matches copp_fit.
inline CoppModel subsampling_fit(const BanditDataset& data, const Policy& target,
                                 const std::optional<Policy>& behavior,
                                 const CoppConfig& config, std::uint64_t seed) {
  detail::PipelineParts parts =
      detail::run_pipeline(data, target, behavior, config, seed, true);
  if (parts.matched_cal.empty())
    throw EmptyCalibrationError("matched calibration set is empty");

  CoppModel model;
  model.variant = CoppModel::Variant::subsampling;
  model.target = target;
  model.behavior_hat = parts.behavior_hat;
  model.behavior_known = behavior.has_value();
  model.config = config;
  model.n_train = static_cast<int>(parts.split.train.size());
  model.n_cal = static_cast<int>(parts.split.calibration.size());
  model.n_train_matched = static_cast<int>(parts.matched_train.size());
  model.n_cal_matched = static_cast<int>(parts.matched_cal.size());
  model.cal_scores = parts.scores_matched_cal;
  model.cal_weights.resize(parts.matched_cal.size());
  for (size_t i = 0; i < parts.matched_cal.size(); ++i)
    model.cal_weights[i] =
        model.context_weight(data.contexts.row(parts.matched_cal[i]).transpose());
  model.forest = std::move(parts.forest);
  model.calibration = CalibrationQuantile(model.cal_scores, model.cal_weights);
  return model;
}

// ---------------------------------------------------------------------------
// Direct method: weighted CP with outcome-density likelihood-ratio weights.

struct DensityModel {
  // pdf(x, t, y): conditional density of Y^t given X = x.
  std::function<double(const Vector&, int, double)> pdf;
};

inline DensityModel example1_oracle_density() {
  return {[](const Vector& x, int t, double y) {
    double mu = Example1Truth::arm_mean(x, t);
    double sd = Example1Truth::arm_sd(x, t);
    double z = (y - mu) / sd;
    return std::exp(-0.5 * z * z) / (sd * 2.5066282746310005);
  }};
}

// Per-arm Gaussian working model: forest conditional mean plus a residual
// variance forest.
inline DensityModel make_fitted_gaussian_density(const BanditDataset& data,
                                                 const std::vector<int>& train_idx,
                                                 const ForestConfig& fc,
                                                 std::uint64_t seed) {
  auto mean_forests = std::make_shared<std::vector<QuantileForest>>(data.num_actions);
  auto var_forests = std::make_shared<std::vector<QuantileForest>>(data.num_actions);
  for (int t = 0; t < data.num_actions; ++t) {
    std::vector<int> arm;
    for (int i : train_idx)
      if (data.actions[i] == t) arm.push_back(i);
    if (arm.size() < 2) throw std::invalid_argument("arm with < 2 training samples");
    Matrix X(arm.size(), data.dim());
    Vector y(arm.size());
    for (size_t i = 0; i < arm.size(); ++i) {
      X.row(i) = data.contexts.row(arm[i]);
      y[i] = data.outcomes[arm[i]];
    }
    ForestConfig cfg = fc;
    cfg.min_leaf_size = std::min<int>(cfg.min_leaf_size, static_cast<int>(arm.size()));
    (*mean_forests)[t].fit(X, y, cfg, derive_seed(seed, StreamTag::forest, 2 * t));
    Vector sq(arm.size());
    QuantileForest::Workspace ws;
    for (size_t i = 0; i < arm.size(); ++i) {
      double r = y[i] - (*mean_forests)[t].predict_mean(X.row(i).transpose(), ws);
      sq[i] = r * r;
    }
    (*var_forests)[t].fit(X, sq, cfg, derive_seed(seed, StreamTag::forest, 2 * t + 1));
  }
  return {[mean_forests, var_forests](const Vector& x, int t, double y) {
    QuantileForest::Workspace ws;
    double mu = (*mean_forests)[t].predict_mean(x, ws);
    double v = std::max((*var_forests)[t].predict_mean(x, ws), 1e-12);
    double sd = std::sqrt(v);
    double z = (y - mu) / sd;
    return std::exp(-0.5 * z * z) / (sd * 2.5066282746310005);
  }};
}

class DirectMethodModel {
 public:
  Policy target;
  Policy behavior_hat;
  DensityModel density;
  QuantileForest forest;
  CoppConfig config;
  CalibrationQuantile calibration;
  double y_min = 0.0, y_max = 0.0;  // training outcome range for the scan grid
  int grid_size = 512;

  // Likelihood-ratio weight at a candidate (x, y); densities clipped before
  // entering the ratio.
  double weight(const Vector& x, double y) const {
    std::vector<double> pe = target.probs(x);
    std::vector<double> pb = behavior_hat.probs(x);
    double num = 0.0, den = 0.0;
    for (size_t t = 0; t < pe.size(); ++t) {
      double f = std::max(density.pdf(x, static_cast<int>(t), y), 1e-300);
      num += pe[t] * f;
      den += clip_probability(pb[t]) * f;
    }
    return num / den;
  }

  bool contains(const Vector& x, double y, QuantileForest::Workspace& ws) const {
    auto [q_lo, q_hi] = forest.predict_quantiles(x, config.level_lo(),
                                                 config.level_hi(), ws);
    double s = cqr_score(y, q_lo, q_hi);
    double q = calibration.quantile(1.0 - config.alpha, weight(x, y));
    return s <= q;
  }

  // Membership resolved on a uniform candidate grid padded by one outcome
  // range on each side; returns the union of covered cells.
  PredictionSet predict(const Vector& x) const {
    QuantileForest::Workspace ws;
    auto [q_lo, q_hi] = forest.predict_quantiles(x, config.level_lo(),
                                                 config.level_hi(), ws);
    double range = std::max(y_max - y_min, 1e-12);
    double lo = y_min - range, hi = y_max + range;
    double step = (hi - lo) / (grid_size - 1);
    std::vector<PredictionSet::Interval> pieces;
    bool open = false;
    double start = 0.0, last = 0.0;
    for (int g = 0; g < grid_size; ++g) {
      double y = lo + g * step;
      double s = cqr_score(y, q_lo, q_hi);
      double q = calibration.quantile(1.0 - config.alpha, weight(x, y));
      bool member = s <= q;
      if (member && !open) {
        open = true;
        start = y;
      }
      if (member) last = y;
      if (!member && open) {
        pieces.push_back({start, last});
        open = false;
      }
    }
    if (open) pieces.push_back({start, last});
    return PredictionSet::from_pieces(std::move(pieces));
  }
};

inline DirectMethodModel direct_method_fit(const BanditDataset& data,
                                           const Policy& target,
                                           const DensityModel& density,
                                           const std::optional<Policy>& behavior,
                                           const CoppConfig& config,
                                           std::uint64_t seed) {
  data.validate();
  DirectMethodModel model;
  model.target = target;
  model.density = density;
  model.config = config;

  IndexSplit split = split_indices(data.n(), {config.train_fraction, seed});
  model.behavior_hat = behavior.has_value()
                           ? *behavior
                           : detail::fit_behavior_policy(data, split.train, config, seed);

  Matrix Xtr(split.train.size(), data.dim());
  Vector ytr(split.train.size());
  for (size_t i = 0; i < split.train.size(); ++i) {
    Xtr.row(i) = data.contexts.row(split.train[i]);
    ytr[i] = data.outcomes[split.train[i]];
  }
  model.forest.fit(Xtr, ytr, config.forest, derive_seed(seed, StreamTag::forest));
  model.y_min = ytr.minCoeff();
  model.y_max = ytr.maxCoeff();

  QuantileForest::Workspace ws;
  std::vector<double> scores(split.calibration.size()), weights(split.calibration.size());
  for (size_t i = 0; i < split.calibration.size(); ++i) {
    int idx = split.calibration[i];
    Vector x = data.contexts.row(idx).transpose();
    auto [q_lo, q_hi] = model.forest.predict_quantiles(x, config.level_lo(),
                                                       config.level_hi(), ws);
    scores[i] = cqr_score(data.outcomes[idx], q_lo, q_hi);
    weights[i] = model.weight(x, data.outcomes[idx]);
  }
  model.calibration = CalibrationQuantile(scores, weights);
  return model;
}

}  // namespace copp
