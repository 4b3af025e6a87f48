#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "copp/conformal.hpp"
#include "copp/prediction_set.hpp"
#include "copp/rng.hpp"

namespace copp {

struct MultiSplitConfig {
  int repetitions = 100;
  double gamma = 0.5;  // exclusion rate: keep y covered by >= ceil((1-gamma)B) sets

  int majority_threshold() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("gamma must be in (0,1)");
    return static_cast<int>(std::ceil((1.0 - gamma) * repetitions));
  }
};

// Points contained in at least `threshold` of the given sets, computed by an
// exact sweep over the interval endpoints (no discretization).
inline PredictionSet aggregate_majority(const std::vector<PredictionSet>& sets,
                                        int threshold) {
  if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (threshold > static_cast<int>(sets.size())) return PredictionSet::empty();

  struct Event {
    double pos;
    bool is_end;  // starts sort before ends at equal positions (closed intervals)
  };
  std::vector<Event> events;
  int base = 0;  // sets covering the whole line
  for (const PredictionSet& s : sets) {
    if (s.pieces().size() == 1 && std::isinf(s.pieces()[0].lo) &&
        std::isinf(s.pieces()[0].hi)) {
      ++base;
      continue;
    }
    for (const auto& piece : s.pieces()) {
      events.push_back({piece.lo, false});
      events.push_back({piece.hi, true});
    }
  }
  if (base >= threshold) return PredictionSet::whole_line();
  if (events.empty()) return PredictionSet::empty();

  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.pos != b.pos ? a.pos < b.pos : a.is_end < b.is_end;
  });

  std::vector<PredictionSet::Interval> pieces;
  int count = base;
  bool open = false;
  double open_at = 0.0;
  size_t i = 0;
  while (i < events.size()) {
    double pos = events[i].pos;
    size_t j = i;
    while (j < events.size() && events[j].pos == pos && !events[j].is_end) {
      ++count;
      ++j;
    }
    if (!open && count >= threshold) {
      open = true;
      open_at = pos;
    }
    while (j < events.size() && events[j].pos == pos) {
      --count;
      ++j;
    }
    if (open && count < threshold) {
      pieces.push_back({open_at, pos});
      open = false;
    }
    i = j;
  }
  return PredictionSet::from_pieces(std::move(pieces));
}

// Multi-split wrapper: B independent runs of the underlying pipeline, each
// re-randomizing the data split and the pseudo-action draws, aggregated by
// majority vote over interval membership.
template <class Model>
class MultiSplitModel {
 public:
  std::vector<Model> models;
  MultiSplitConfig config;

  PredictionSet predict(const Vector& x) const {
    std::vector<PredictionSet> sets;
    sets.reserve(models.size());
    QuantileForest::Workspace ws;
    for (const Model& m : models) sets.push_back(m.predict(x, ws));
    return aggregate_majority(sets, config.majority_threshold());
  }
};

using CoppMsModel = MultiSplitModel<CoppModel>;

namespace detail {

// With cross-validated ridge, select lambda once on the full data and pin it
// for every repetition; refitting the CV grid B times is redundant.
inline CoppConfig pin_cv_lambda(const BanditDataset& data,
                                const std::optional<Policy>& behavior,
                                const CoppConfig& config, std::uint64_t seed) {
  CoppConfig pinned = config;
  if (!config.penalized_cv || behavior.has_value()) return pinned;
  std::vector<int> y(data.actions.begin(), data.actions.end());
  LogisticModel cv = fit_logistic_cv(data.contexts, y, data.num_actions, seed);
  pinned.penalized_cv = false;
  pinned.ridge_lambda = cv.ridge_lambda;
  return pinned;
}

}  // namespace detail

inline CoppMsModel copp_ms_fit(const BanditDataset& data, const Policy& target,
                               const std::optional<Policy>& behavior,
                               const CoppConfig& config,
                               const MultiSplitConfig& ms, std::uint64_t seed) {
  ms.majority_threshold();  // validate
  CoppConfig pinned = detail::pin_cv_lambda(data, behavior, config, seed);
  CoppMsModel model;
  model.config = ms;
  model.models.reserve(ms.repetitions);
  for (int b = 0; b < ms.repetitions; ++b)
    model.models.push_back(copp_fit(data, target, behavior, pinned,
                                    derive_seed(seed, StreamTag::multi_split, b)));
  return model;
}

inline CoppMsModel copp_is_ms_fit(const BanditDataset& data, const Policy& target,
                                  const std::optional<Policy>& behavior,
                                  const CoppConfig& config,
                                  const MultiSplitConfig& ms, std::uint64_t seed) {
  ms.majority_threshold();
  CoppConfig pinned = detail::pin_cv_lambda(data, behavior, config, seed);
  CoppMsModel model;
  model.config = ms;
  model.models.reserve(ms.repetitions);
  for (int b = 0; b < ms.repetitions; ++b)
    model.models.push_back(copp_is_fit(data, target, behavior, pinned,
                                       derive_seed(seed, StreamTag::multi_split, b)));
  return model;
}

}  // namespace copp
