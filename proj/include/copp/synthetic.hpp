#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "copp/dataset.hpp"
#include "copp/policy.hpp"
#include "copp/rng.hpp"

namespace copp {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// ---------------------------------------------------------------------------
// Example 1: single-stage decision making with a two-component Gaussian
// mixture outcome per context.

struct Example1Truth {
  static double behavior_p1(const Vector& x) {
    return sigmoid(-0.5 - 0.5 * (x[0] + x[1] + x[2] + x[3]));
  }
  static double target_p1(const Vector& x) {
    return sigmoid(-0.5 + x[0] + x[1] - x[2] - x[3]);
  }
  static double arm_mean(const Vector& x, int t) {
    double base = 1.0 + x[0] - x[1] + x[2] * x[2] * x[2] + std::exp(x[3]);
    if (t == 1) base += 3.0 - 5.0 * x[0] + 2.0 * x[1] - 3.0 * x[2] + x[3];
    return base;
  }
  static double arm_sd(const Vector& x, int t) {
    return (1.0 + t) * (1.0 + x[0] + x[1] + x[2] + x[3]);
  }

  static Policy behavior_policy() { return Policy::bernoulli(&behavior_p1); }
  static Policy target_policy() { return Policy::bernoulli(&target_p1); }
  // Deterministic comparator target from the single-stage numerical study.
  static Policy deterministic_target_policy() {
    return Policy::deterministic(2, [](const Vector& x) {
      return (x[2] + x[3] > x[0] + x[1]) ? 1 : 0;
    });
  }
};

inline Vector example1_context(bool high_dim, Rng& rng) {
  const int d = high_dim ? 100 : 4;
  Vector x(d);
  for (int j = 0; j < d; ++j) x[j] = rng.uniform();
  return x;
}

inline BanditDataset generate_example1(int n, bool high_dim, Rng& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const int d = high_dim ? 100 : 4;
  BanditDataset data;
  data.contexts.resize(n, d);
  data.actions.resize(n);
  data.outcomes.resize(n);
  data.num_actions = 2;
  for (int i = 0; i < n; ++i) {
    Vector x = example1_context(high_dim, rng);
    data.contexts.row(i) = x.transpose();
    int t = rng.bernoulli(Example1Truth::behavior_p1(x)) ? 1 : 0;
    data.actions[i] = t;
    double eps = rng.normal();
    data.outcomes[i] = Example1Truth::arm_mean(x, t) + Example1Truth::arm_sd(x, t) * eps;
  }
  return data;
}

// Draws a test context and a realized potential outcome under the target.
inline std::pair<Vector, double> example1_test_point(const Policy& target,
                                                     bool high_dim, Rng& rng) {
  Vector x = example1_context(high_dim, rng);
  int t = rng.discrete(target.probs(x).data(), 2);
  double y = Example1Truth::arm_mean(x, t) + Example1Truth::arm_sd(x, t) * rng.normal();
  return {x, y};
}

// Quantiles of the two-component Gaussian mixture of Y^{pi_e} given X=x,
// found by bisection on the mixture CDF.
inline std::pair<double, double> oracle_quantiles_example1(const Vector& x,
                                                           const Policy& target,
                                                           double level_lo,
                                                           double level_hi) {
  std::vector<double> pe = target.probs(x);
  auto cdf = [&](double y) {
    double F = 0.0;
    for (int t = 0; t < 2; ++t)
      F += pe[t] * normal_cdf((y - Example1Truth::arm_mean(x, t)) /
                              Example1Truth::arm_sd(x, t));
    return F;
  };
  auto invert = [&](double level) {
    double lo = -1e3, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (cdf(mid) >= level) hi = mid;
      else lo = mid;
      if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
  };
  return {invert(level_lo), invert(level_hi)};
}

// ---------------------------------------------------------------------------
// Example 2: two-stage decision making. The high-dimensional variant pads
// the stage-1 state with null features to total dimension 100.

struct Example2Truth {
  // Stage policies act on flattened histories; the scalar states sit at
  // fixed offsets (stage-1 scalar first, X2 right after the one-hot T1).
  static StagewisePolicy behavior_policy(int stage1_dim) {
    StagewisePolicy p;
    p.stages.push_back(Policy::bernoulli(
        [](const Vector& h) { return sigmoid(-0.5 + h[0]); }));
    int x2_pos = stage1_dim + 1;  // one-hot of T1 is a single slot for m=2
    p.stages.push_back(Policy::bernoulli(
        [x2_pos](const Vector& h) { return sigmoid(-0.5 - h[x2_pos]); }));
    return p;
  }
  static StagewisePolicy target_policy(int stage1_dim) {
    StagewisePolicy p;
    p.stages.push_back(Policy::bernoulli(
        [](const Vector& h) { return sigmoid(0.5 * h[0] - 0.5); }));
    int x2_pos = stage1_dim + 1;
    p.stages.push_back(Policy::bernoulli(
        [x2_pos](const Vector& h) { return sigmoid(0.5 * h[x2_pos] - 1.0); }));
    return p;
  }
  static double outcome(double x1, int t1, double x2, int t2, double eps) {
    double mean = 1.0 + x1 + t1 * (1.0 - 3.0 * (x1 - 0.2) * (x1 - 0.2)) + x2 +
                  t2 * (1.0 - 5.0 * (x2 - 0.4) * (x2 - 0.4));
    double mult = 1.0 + 0.5 * t1 - t1 * x1 + 0.5 * t2 - t2 * x2;
    return mean + mult * eps;
  }
};

inline TrajectoryDataset generate_example2(int n, bool high_dim, Rng& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const int d1 = high_dim ? 100 : 1;
  TrajectoryDataset data;
  data.num_actions = 2;
  data.stage_states.assign(2, Matrix());
  data.stage_states[0].resize(n, d1);
  data.stage_states[1].resize(n, 1);
  data.stage_actions.assign(2, std::vector<int>(n));
  data.outcomes.resize(n);
  for (int i = 0; i < n; ++i) {
    double x1 = rng.uniform();
    data.stage_states[0](i, 0) = x1;
    for (int j = 1; j < d1; ++j) data.stage_states[0](i, j) = rng.uniform();
    int t1 = rng.bernoulli(sigmoid(-0.5 + x1)) ? 1 : 0;
    double x2 = rng.uniform(x1, x1 + 1.0);
    int t2 = rng.bernoulli(sigmoid(-0.5 - x2)) ? 1 : 0;
    double eps = rng.normal();
    data.stage_actions[0][i] = t1;
    data.stage_actions[1][i] = t2;
    data.stage_states[1](i, 0) = x2;
    data.outcomes[i] = Example2Truth::outcome(x1, t1, x2, t2, eps);
  }
  return data;
}

// Test draw: initial state plus a realized outcome from rolling the target
// policy through the true dynamics.
inline std::pair<Vector, double> example2_test_point(bool high_dim, Rng& rng) {
  const int d1 = high_dim ? 100 : 1;
  Vector x1(d1);
  x1[0] = rng.uniform();
  for (int j = 1; j < d1; ++j) x1[j] = rng.uniform();
  int e1 = rng.bernoulli(sigmoid(0.5 * x1[0] - 0.5)) ? 1 : 0;
  double x2 = rng.uniform(x1[0], x1[0] + 1.0);
  int e2 = rng.bernoulli(sigmoid(0.5 * x2 - 1.0)) ? 1 : 0;
  double y = Example2Truth::outcome(x1[0], e1, x2, e2, rng.normal());
  return {x1, y};
}

// ---------------------------------------------------------------------------
// Example 3: multi-stage decision making with Markov scalar state.

struct Example3Truth {
  static double behavior_p1(double xk) { return sigmoid(-0.5 + xk); }
  static double target_p1(double xk) { return sigmoid(-0.5 + 0.5 * xk); }
  static double initial_state(double eps) { return 0.5 * eps; }
  static double next_state(double x, int t, double eps) {
    return 0.5 * x + 0.1 * t + 0.5 * eps;
  }

  // Stage policies condition on the current state only. With scalar states
  // and m=2 the flattened history is (X_1, T_1, ..., X_{k+1}), so the current
  // state is its last element.
  static StagewisePolicy behavior_policy(int horizon) {
    StagewisePolicy p;
    for (int k = 0; k < horizon; ++k)
      p.stages.push_back(Policy::bernoulli(
          [](const Vector& h) { return behavior_p1(h[h.size() - 1]); }));
    return p;
  }
  static StagewisePolicy target_policy(int horizon) {
    StagewisePolicy p;
    for (int k = 0; k < horizon; ++k)
      p.stages.push_back(Policy::bernoulli(
          [](const Vector& h) { return target_p1(h[h.size() - 1]); }));
    return p;
  }
};

inline TrajectoryDataset generate_example3(int n, int horizon, Rng& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  TrajectoryDataset data;
  data.num_actions = 2;
  data.stage_states.assign(horizon, Matrix());
  for (int k = 0; k < horizon; ++k) data.stage_states[k].resize(n, 1);
  data.stage_actions.assign(horizon, std::vector<int>(n));
  data.outcomes.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = Example3Truth::initial_state(rng.normal());
    for (int k = 0; k < horizon; ++k) {
      data.stage_states[k](i, 0) = x;
      int t = rng.bernoulli(Example3Truth::behavior_p1(x)) ? 1 : 0;
      data.stage_actions[k][i] = t;
      if (k + 1 < horizon) x = Example3Truth::next_state(x, t, rng.normal());
    }
    data.outcomes[i] = data.stage_states[horizon - 1](i, 0);
  }
  return data;
}

inline std::pair<Vector, double> example3_test_point(int horizon, Rng& rng) {
  double x = Example3Truth::initial_state(rng.normal());
  Vector x1(1);
  x1[0] = x;
  for (int k = 0; k < horizon; ++k) {
    int t = rng.bernoulli(Example3Truth::target_p1(x)) ? 1 : 0;
    if (k + 1 < horizon) x = Example3Truth::next_state(x, t, rng.normal());
  }
  return {x1, x};
}

// ---------------------------------------------------------------------------
// Scenario wrapper used by the benchmark harness.

struct ScenarioSpec {
  int example = 1;          // 1, 2 or 3
  int n = 2000;
  bool high_dim = false;
  int horizon = 3;          // example 3 only: 3, 4 or 5
  bool deterministic_target = false;  // example 1 only

  void validate() const {
    if (example < 1 || example > 3) throw std::invalid_argument("example must be 1..3");
    if (example == 3 && (horizon < 3 || horizon > 5))
      throw std::invalid_argument("example-3 horizon must be 3..5");
    if (n < 2) throw std::invalid_argument("n must be >= 2");
  }

  bool single_stage() const { return example == 1; }
};

}  // namespace copp
