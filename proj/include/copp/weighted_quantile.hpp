#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace copp {

// CQR nonconformity score: negative strictly inside (q_lo, q_hi), zero on
// the boundary, positive outside.
inline double cqr_score(double y, double q_lo, double q_hi) {
  if (q_lo > q_hi) throw std::invalid_argument("cqr_score requires q_lo <= q_hi");
  return std::max(q_lo - y, y - q_hi);
}

// Nonconformity scores with nonnegative weights plus an explicit point mass
// at +infinity for the test point.
struct WeightedScoreSet {
  std::vector<double> scores;
  std::vector<double> weights;
  double test_weight = 0.0;

  void validate() const {
    if (scores.size() != weights.size())
      throw std::invalid_argument("scores/weights length mismatch");
    double s = test_weight;
    if (!(test_weight >= 0.0) || !std::isfinite(test_weight))
      throw std::invalid_argument("bad test_weight");
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("bad weight");
      s += w;
    }
    if (!(s > 0.0)) throw std::invalid_argument("all mass zero");
  }
};

// Level-th quantile of sum_i p_i delta_{S_i} + p_inf delta_inf with the
// left-continuous inverse-CDF convention: inf{s in scores : P(S <= s) >= level},
// or +inf when no finite score reaches the level.
inline double weighted_quantile(const WeightedScoreSet& set, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("quantile level must be in (0,1)");
  set.validate();
  const size_t n = set.scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return set.scores[a] < set.scores[b]; });
  double total = set.test_weight;
  for (double w : set.weights) total += w;
  double cum = 0.0;
  for (size_t k = 0; k < n; ++k) {
    cum += set.weights[order[k]];
    // Absorb ties: advance while the next score is equal.
    while (k + 1 < n && set.scores[order[k + 1]] == set.scores[order[k]]) {
      ++k;
      cum += set.weights[order[k]];
    }
    if (cum >= level * total) return set.scores[order[k]];
  }
  return std::numeric_limits<double>::infinity();
}

// Precomputed sorted-score engine for repeated quantile queries against the
// same calibration scores but varying test weights. Matches
// weighted_quantile exactly.
class CalibrationQuantile {
 public:
  CalibrationQuantile() = default;

  CalibrationQuantile(std::vector<double> scores, std::vector<double> weights) {
    if (scores.size() != weights.size())
      throw std::invalid_argument("scores/weights length mismatch");
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    sorted_scores_.resize(n);
    prefix_.resize(n);
    double cum = 0.0;
    for (size_t k = 0; k < n; ++k) {
      sorted_scores_[k] = scores[order[k]];
      cum += weights[order[k]];
      prefix_[k] = cum;
    }
    total_weight_ = cum;
  }

  double total_weight() const { return total_weight_; }
  size_t size() const { return sorted_scores_.size(); }

  // Quantile with the given test-point mass at infinity.
  double quantile(double level, double test_weight) const {
    const double target = level * (total_weight_ + test_weight);
    // First k whose cumulative mass (ties absorbed by construction of the
    // running prefix) reaches the target.
    auto it = std::lower_bound(prefix_.begin(), prefix_.end(), target);
    while (it != prefix_.end()) {
      size_t k = static_cast<size_t>(it - prefix_.begin());
      // Move to the last tied score so the full tie mass is counted.
      size_t last = k;
      while (last + 1 < sorted_scores_.size() &&
             sorted_scores_[last + 1] == sorted_scores_[k])
        ++last;
      if (prefix_[last] >= target) return sorted_scores_[last];
      it = prefix_.begin() + last + 1;
      it = std::lower_bound(it, prefix_.end(), target);
    }
    return std::numeric_limits<double>::infinity();
  }

  // Mass of calibration scores >= s plus the test mass, normalized: the
  // conformal p-value of a candidate score.
  double p_value(double s, double test_weight) const {
    auto it = std::lower_bound(sorted_scores_.begin(), sorted_scores_.end(), s);
    size_t k = static_cast<size_t>(it - sorted_scores_.begin());
    double below = (k == 0) ? 0.0 : prefix_[k - 1];
    return (total_weight_ - below + test_weight) / (total_weight_ + test_weight);
  }

 private:
  std::vector<double> sorted_scores_;
  std::vector<double> prefix_;
  double total_weight_ = 0.0;
};

}  // namespace copp
