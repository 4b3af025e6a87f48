#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "copp/dataset.hpp"

namespace copp {

// Numerically stable logistic function; saturates in the tails instead of
// overflowing.
inline double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  double e = std::exp(t);
  return e / (1.0 + e);
}

// Default positivity floor; fitted propensities are clipped to
// [kPositivityFloor, 1 - kPositivityFloor] before entering any ratio.
inline constexpr double kPositivityFloor = 1e-6;

inline double clip_probability(double p, double floor = kPositivityFloor) {
  if (p < floor) return floor;
  if (p > 1.0 - floor) return 1.0 - floor;
  return p;
}

enum class PolicyKind { analytic, fitted_logistic, pseudo, deterministic };

// A stochastic decision rule over m discrete actions given a context (or a
// flattened history). Immutable after construction.
class Policy {
 public:
  using MassFn = std::function<std::vector<double>(const Vector&)>;

  Policy() = default;
  Policy(int num_actions, MassFn fn, PolicyKind kind = PolicyKind::analytic)
      : num_actions_(num_actions), fn_(std::move(fn)), kind_(kind) {}

  int num_actions() const { return num_actions_; }
  PolicyKind kind() const { return kind_; }

  std::vector<double> probs(const Vector& x) const {
    std::vector<double> p = fn_(x);
    if (static_cast<int>(p.size()) != num_actions_)
      throw std::logic_error("policy mass length != num_actions");
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw std::logic_error("negative policy mass");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::logic_error("policy masses do not sum to 1");
    return p;
  }

  double prob(int t, const Vector& x) const { return probs(x)[t]; }

  // Binary helper: P(T=1|x) from a scalar score function.
  static Policy bernoulli(std::function<double(const Vector&)> p1,
                          PolicyKind kind = PolicyKind::analytic) {
    return Policy(2,
                  [p1 = std::move(p1)](const Vector& x) {
                    double p = p1(x);
                    return std::vector<double>{1.0 - p, p};
                  },
                  kind);
  }

  static Policy deterministic(int num_actions, std::function<int(const Vector&)> act) {
    return Policy(num_actions,
                  [act = std::move(act), num_actions](const Vector& x) {
                    std::vector<double> p(num_actions, 0.0);
                    p[act(x)] = 1.0;
                    return p;
                  },
                  PolicyKind::deterministic);
  }

  static Policy uniform(int num_actions) {
    return Policy(num_actions,
                  [num_actions](const Vector&) {
                    return std::vector<double>(num_actions, 1.0 / num_actions);
                  },
                  PolicyKind::analytic);
  }

 private:
  int num_actions_ = 2;
  MassFn fn_;
  PolicyKind kind_ = PolicyKind::analytic;
};

// History-dependent policy for K-stage trajectories: one decision rule per
// stage, each taking the flattened history H_k.
struct StagewisePolicy {
  std::vector<Policy> stages;

  int horizon() const { return static_cast<int>(stages.size()); }
  const Policy& stage(int k) const { return stages[k]; }
};

}  // namespace copp
