#include <cmath>

#include "doctest.h"

#include "copp/conformal.hpp"
#include "copp/extensions.hpp"
#include "copp/rng.hpp"
#include "copp/synthetic.hpp"

using namespace copp;

namespace {

BanditDataset example1_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  return generate_example1(n, false, rng);
}

PredictionSet grid_majority(const std::vector<PredictionSet>& sets, int threshold,
                            double lo, double hi, int grid) {
  std::vector<PredictionSet::Interval> pieces;
  bool open = false;
  double start = 0.0, last = 0.0;
  for (int g = 0; g < grid; ++g) {
    double y = lo + (hi - lo) * g / (grid - 1);
    int count = 0;
    for (const auto& s : sets) count += s.contains(y) ? 1 : 0;
    bool member = count >= threshold;
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

}  // namespace

TEST_CASE("majority aggregation basics") {
  PredictionSet a = PredictionSet::interval(0, 2);
  PredictionSet b = PredictionSet::interval(1, 3);
  PredictionSet c = PredictionSet::interval(10, 11);

  PredictionSet one = aggregate_majority({a}, 1);
  REQUIRE(one.pieces().size() == 1);
  CHECK(one.pieces()[0].lo == 0.0);
  CHECK(one.pieces()[0].hi == 2.0);

  PredictionSet same = aggregate_majority({a, a, a}, 2);
  REQUIRE(same.pieces().size() == 1);
  CHECK(same.pieces()[0].lo == 0.0);
  CHECK(same.pieces()[0].hi == 2.0);

  MultiSplitConfig ms{3, 0.5};
  CHECK(ms.majority_threshold() == 2);
  PredictionSet agg = aggregate_majority({a, b, c}, ms.majority_threshold());
  REQUIRE(agg.pieces().size() == 1);
  CHECK(agg.pieces()[0].lo == 1.0);
  CHECK(agg.pieces()[0].hi == 2.0);
}

TEST_CASE("endpoint sweep agrees with fine-grid counting") {
  Rng rng(71);
  for (int rep = 0; rep < 100; ++rep) {
    int b = 2 + static_cast<int>(rng.below(8));
    std::vector<PredictionSet> sets;
    for (int i = 0; i < b; ++i) {
      double lo = rng.uniform(-5.0, 4.0);
      double hi = lo + rng.uniform(0.0, 4.0);
      sets.push_back(PredictionSet::interval(lo, hi));
    }
    int threshold = 1 + static_cast<int>(rng.below(b));
    PredictionSet exact = aggregate_majority(sets, threshold);
    PredictionSet grid = grid_majority(sets, threshold, -6.0, 10.0, 10000);
    // Compare membership on the same grid; exact endpoints refine the grid.
    for (int g = 0; g < 10000; g += 7) {
      double y = -6.0 + 16.0 * g / 9999.0;
      bool eg = exact.contains(y);
      bool gg = grid.contains(y);
      bool near = false;
      for (const auto& p : exact.pieces())
        if (std::abs(y - p.lo) < 0.002 || std::abs(y - p.hi) < 0.002) near = true;
      if (!near) CHECK(eg == gg);
    }
  }
}

TEST_CASE("aggregate grows with gamma") {
  Rng rng(72);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<PredictionSet> sets;
    for (int i = 0; i < 9; ++i) {
      double lo = rng.uniform(-3.0, 2.0);
      sets.push_back(PredictionSet::interval(lo, lo + rng.uniform(0.0, 3.0)));
    }
    MultiSplitConfig tight{9, 0.3}, loose{9, 0.7};
    PredictionSet small = aggregate_majority(sets, tight.majority_threshold());
    PredictionSet large = aggregate_majority(sets, loose.majority_threshold());
    for (double y = -3.5; y < 5.5; y += 0.05)
      if (small.contains(y)) CHECK(large.contains(y));
  }
}

TEST_CASE("whole-line and empty pieces aggregate correctly") {
  std::vector<PredictionSet> sets = {PredictionSet::whole_line(),
                                     PredictionSet::whole_line(),
                                     PredictionSet::empty()};
  PredictionSet agg = aggregate_majority(sets, 2);
  CHECK(agg.unbounded());
  CHECK(agg.contains(1e9));
  CHECK(aggregate_majority(sets, 3).pieces().empty());
}

TEST_CASE("copp-is with indicator weights reproduces copp exactly") {
  BanditDataset data = example1_data(1200, 73);
  Policy target = Example1Truth::target_policy();
  Policy behavior = Example1Truth::behavior_policy();
  CoppConfig cfg;
  const std::uint64_t seed = 19;
  CoppModel copp = copp_fit(data, target, behavior, cfg, seed);
  CoppModel is = copp_is_fit(data, target, behavior, cfg, seed);

  // Replay the shared pseudo-action stream to recover the indicators.
  Rng pseudo_rng(derive_seed(seed, StreamTag::pseudo_actions));
  PseudoPolicy pa(target, behavior);
  std::vector<int> drawn = sample_pseudo_actions(pa, data.contexts, pseudo_rng);
  IndexSplit split = split_indices(data.n(), {cfg.train_fraction, seed});

  std::vector<double> ind_weights(split.calibration.size());
  for (size_t i = 0; i < split.calibration.size(); ++i) {
    int idx = split.calibration[i];
    double match = drawn[idx] == data.actions[idx] ? 1.0 : 0.0;
    ind_weights[i] =
        match * is.context_weight(data.contexts.row(idx).transpose());
  }
  CalibrationQuantile indicator_engine(is.cal_scores, ind_weights);

  Rng rng(74);
  for (int rep = 0; rep < 25; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    double w = copp.test_weight(x);
    CHECK(indicator_engine.quantile(1.0 - cfg.alpha, w) ==
          copp.calibration.quantile(1.0 - cfg.alpha, w));
  }
}

TEST_CASE("p-value level set equals the predicted interval") {
  BanditDataset data = example1_data(900, 75);
  CoppConfig cfg;
  CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 20);
  Rng rng(76);
  QuantileForest::Workspace ws;
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    PredictionSet set = m.predict(x, ws);
    REQUIRE(set.pieces().size() == 1);
    for (int g = 0; g < 20; ++g) {
      double y = rng.uniform(-15.0, 25.0);
      bool inside = set.contains(y);
      double p = m.p_value(x, y, ws);
      double edge = std::min(std::abs(y - set.pieces()[0].lo),
                             std::abs(y - set.pieces()[0].hi));
      if (edge > 1e-9) CHECK((p >= cfg.alpha) == inside);
    }
  }
}

TEST_CASE("p-value saturates at the test mass for extreme outcomes") {
  BanditDataset data = example1_data(600, 77);
  CoppConfig cfg;
  CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 21);
  Vector x(4);
  x << 0.5, 0.5, 0.5, 0.5;
  double w = m.test_weight(x);
  double p_inf = w / (m.calibration.total_weight() + w);
  CHECK(m.p_value(x, 1e9) == doctest::Approx(p_inf).epsilon(1e-12));
  CHECK(m.p_value(x, -1e9) == doctest::Approx(p_inf).epsilon(1e-12));
}

TEST_CASE("multi-split with one repetition equals the single run") {
  BanditDataset data = example1_data(900, 78);
  CoppConfig cfg;
  MultiSplitConfig ms{1, 0.5};
  CoppMsModel agg = copp_ms_fit(data, Example1Truth::target_policy(),
                                Example1Truth::behavior_policy(), cfg, ms, 22);
  CoppModel single =
      copp_fit(data, Example1Truth::target_policy(),
               Example1Truth::behavior_policy(), cfg,
               derive_seed(22, StreamTag::multi_split, 0));
  Rng rng(79);
  for (int rep = 0; rep < 15; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    PredictionSet a = agg.predict(x);
    PredictionSet b = single.predict(x);
    REQUIRE(a.pieces().size() == b.pieces().size());
    for (size_t i = 0; i < a.pieces().size(); ++i) {
      CHECK(a.pieces()[i].lo == b.pieces()[i].lo);
      CHECK(a.pieces()[i].hi == b.pieces()[i].hi);
    }
  }
}

TEST_CASE("multi-split repetitions differ from each other") {
  BanditDataset data = example1_data(800, 80);
  CoppConfig cfg;
  MultiSplitConfig ms{5, 0.5};
  CoppMsModel agg = copp_ms_fit(data, Example1Truth::target_policy(),
                                Example1Truth::behavior_policy(), cfg, ms, 23);
  Vector x(4);
  x << 0.3, 0.6, 0.2, 0.8;
  bool differs = false;
  PredictionSet first = agg.models[0].predict(x);
  for (size_t b = 1; b < agg.models.size() && !differs; ++b) {
    PredictionSet s = agg.models[b].predict(x);
    differs = s.pieces().size() != first.pieces().size() ||
              s.pieces()[0].lo != first.pieces()[0].lo;
  }
  CHECK(differs);
}
