#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "copp/dataset.hpp"
#include "copp/policy.hpp"
#include "copp/quantile_forest.hpp"
#include "copp/synthetic.hpp"

namespace copp {

struct DegenerateNeighborhoodError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelConfig {
  double bandwidth = 1.0;

  void validate() const {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  }
};

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) >= p) hi = mid;
    else lo = mid;
    if (hi - lo < 1e-12) break;
  }
  return 0.5 * (lo + hi);
}

// Scale for the bandwidth grid: standard deviation of the feature vector,
// sqrt of the summed per-feature variances.
inline double feature_scale(const Matrix& contexts) {
  const int n = static_cast<int>(contexts.rows());
  if (n < 2) throw std::invalid_argument("need >= 2 rows for a feature scale");
  double total = 0.0;
  for (int j = 0; j < contexts.cols(); ++j) {
    double mean = contexts.col(j).mean();
    total += (contexts.col(j).array() - mean).square().sum() / (n - 1);
  }
  return std::sqrt(total);
}

inline std::vector<double> bandwidth_grid(const Matrix& contexts) {
  double s = feature_scale(contexts);
  return {0.05 * s, 0.1 * s, 0.2 * s, 0.4 * s, 0.8 * s};
}

struct KernelCi {
  double estimate = 0.0;
  double se = 0.0;
  double lo = 0.0, hi = 0.0;
};

// Kernel-smoothed pointwise confidence intervals for E[Y^{pi_e} | X = x]:
// importance-sampling terms rho_i Y_i, or doubly robust terms
// rho_i (Y_i - mu(X_i)) + mu(X_i), averaged under normalized Gaussian kernel
// weights centred at the query point. With mu identically zero the doubly
// robust estimator coincides with the importance-sampling one.
class KernelBaseline {
 public:
  KernelBaseline() = default;

  // mean_forest == nullptr gives the importance-sampling variant.
  KernelBaseline(const BanditDataset& data, const Policy& target,
                 const Policy& behavior_hat, const QuantileForest* mean_forest,
                 const KernelConfig& config, double alpha) {
    data.validate();
    config.validate();
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("alpha must be in (0,1)");
    contexts_ = data.contexts;
    bandwidth_ = config.bandwidth;
    z_ = normal_quantile(1.0 - alpha / 2.0);
    terms_.resize(data.n());
    QuantileForest::Workspace ws;
    for (int i = 0; i < data.n(); ++i) {
      Vector x = data.contexts.row(i).transpose();
      double pe = target.probs(x)[data.actions[i]];
      double pb = clip_probability(behavior_hat.probs(x)[data.actions[i]]);
      double rho = pe / pb;
      if (mean_forest) {
        double mu = mean_forest->predict_mean(x, ws);
        terms_[i] = rho * (data.outcomes[i] - mu) + mu;
      } else {
        terms_[i] = rho * data.outcomes[i];
      }
    }
  }

  KernelCi ci(const Vector& x) const {
    const int n = static_cast<int>(contexts_.rows());
    std::vector<double> k(n);
    double total = 0.0;
    const double inv2h2 = 0.5 / (bandwidth_ * bandwidth_);
    for (int i = 0; i < n; ++i) {
      double d2 = (contexts_.row(i).transpose() - x).squaredNorm();
      k[i] = std::exp(-d2 * inv2h2);
      total += k[i];
    }
    if (!(total > 0.0))
      throw DegenerateNeighborhoodError("all kernel weights underflowed");
    KernelCi out;
    for (int i = 0; i < n; ++i) {
      k[i] /= total;
      out.estimate += k[i] * terms_[i];
    }
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = terms_[i] - out.estimate;
      var += k[i] * k[i] * d * d;
    }
    out.se = std::sqrt(var);
    out.lo = out.estimate - z_ * out.se;
    out.hi = out.estimate + z_ * out.se;
    return out;
  }

 private:
  Matrix contexts_;
  std::vector<double> terms_;
  double bandwidth_ = 1.0;
  double z_ = 0.0;
};

inline KernelCi is_kernel_ci(const BanditDataset& data, const Policy& target,
                             const Policy& behavior_hat, const KernelConfig& config,
                             double alpha, const Vector& x_new) {
  return KernelBaseline(data, target, behavior_hat, nullptr, config, alpha).ci(x_new);
}

inline KernelCi dr_kernel_ci(const BanditDataset& data, const Policy& target,
                             const Policy& behavior_hat,
                             const QuantileForest& mean_forest,
                             const KernelConfig& config, double alpha,
                             const Vector& x_new) {
  return KernelBaseline(data, target, behavior_hat, &mean_forest, config, alpha)
      .ci(x_new);
}

}  // namespace copp
