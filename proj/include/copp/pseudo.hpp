#pragma once

#include <stdexcept>
#include <vector>

#include "copp/dataset.hpp"
#include "copp/policy.hpp"
#include "copp/rng.hpp"

namespace copp {

// Pseudo policy: mass proportional to target/behavior per context. Matching
// logged actions against draws from this policy makes the selected outcomes
// distributed as the target policy's potential outcome.
class PseudoPolicy {
 public:
  PseudoPolicy() = default;
  PseudoPolicy(Policy target, Policy behavior)
      : target_(std::move(target)), behavior_(std::move(behavior)) {
    if (target_.num_actions() != behavior_.num_actions())
      throw std::invalid_argument("target/behavior action counts differ");
  }

  int num_actions() const { return target_.num_actions(); }

  std::vector<double> probs(const Vector& x) const {
    std::vector<double> pe = target_.probs(x);
    std::vector<double> pb = behavior_.probs(x);
    const int m = num_actions();
    std::vector<double> pa(m);
    double s = 0.0;
    for (int t = 0; t < m; ++t) {
      pa[t] = pe[t] / clip_probability(pb[t]);
      s += pa[t];
    }
    if (!(s > 0.0)) throw std::logic_error("degenerate pseudo policy mass");
    for (int t = 0; t < m; ++t) pa[t] /= s;
    return pa;
  }

  double prob(int t, const Vector& x) const { return probs(x)[t]; }

  Policy as_policy() const {
    PseudoPolicy self = *this;
    return Policy(num_actions(),
                  [self](const Vector& x) { return self.probs(x); },
                  PolicyKind::pseudo);
  }

  const Policy& target() const { return target_; }
  const Policy& behavior() const { return behavior_; }

 private:
  Policy target_;
  Policy behavior_;
};

inline PseudoPolicy make_pseudo_policy(Policy target, Policy behavior) {
  return PseudoPolicy(std::move(target), std::move(behavior));
}

inline std::vector<int> sample_pseudo_actions(const PseudoPolicy& policy,
                                              const Matrix& contexts, Rng& rng) {
  const int n = static_cast<int>(contexts.rows());
  std::vector<int> actions(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> pa = policy.probs(contexts.row(i).transpose());
    actions[i] = rng.discrete(pa.data(), policy.num_actions());
  }
  return actions;
}

// Indices with matching pseudo and logged actions: {i : A_i = T_i}.
inline std::vector<int> select_matched(const std::vector<int>& logged_actions,
                                       const std::vector<int>& pseudo_actions) {
  if (logged_actions.size() != pseudo_actions.size())
    throw std::invalid_argument("action arrays not aligned");
  std::vector<int> out;
  for (size_t i = 0; i < logged_actions.size(); ++i)
    if (logged_actions[i] == pseudo_actions[i]) out.push_back(static_cast<int>(i));
  return out;
}

// Empirical arm frequencies among matched samples. With the ratio pseudo
// policy these converge to the target policy's masses at the stratum.
inline std::vector<double> matched_arm_frequencies(
    const std::vector<int>& logged_actions, const std::vector<int>& pseudo_actions,
    int num_actions) {
  std::vector<int> matched = select_matched(logged_actions, pseudo_actions);
  std::vector<double> freq(num_actions, 0.0);
  if (matched.empty()) return freq;
  for (int i : matched) freq[logged_actions[i]] += 1.0;
  for (double& f : freq) f /= static_cast<double>(matched.size());
  return freq;
}

}  // namespace copp
