#include <cmath>

#include "doctest.h"

#include "copp/conformal.hpp"
#include "copp/rng.hpp"
#include "copp/synthetic.hpp"

using namespace copp;

namespace {

BanditDataset example1_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  return generate_example1(n, false, rng);
}

}  // namespace

TEST_CASE("copp fit is deterministic") {
  BanditDataset data = example1_data(600, 51);
  CoppConfig cfg;
  CoppModel a = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 9);
  CoppModel b = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 9);
  Rng rng(52);
  for (int rep = 0; rep < 20; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    PredictionSet sa = a.predict(x), sb = b.predict(x);
    REQUIRE(sa.pieces().size() == sb.pieces().size());
    for (size_t i = 0; i < sa.pieces().size(); ++i) {
      CHECK(sa.pieces()[i].lo == sb.pieces()[i].lo);
      CHECK(sa.pieces()[i].hi == sb.pieces()[i].hi);
    }
  }
}

TEST_CASE("no-shift deterministic policy reduces to split CQR") {
  // Behavior and target both always act 0; every draw matches, weights are
  // constant, so the interval is the unweighted split-CQR interval computed
  // here by hand from the same forest and calibration scores.
  Rng rng(53);
  const int n = 400;
  BanditDataset data;
  data.contexts.resize(n, 2);
  data.actions.assign(n, 0);
  data.outcomes.resize(n);
  data.num_actions = 2;
  for (int i = 0; i < n; ++i) {
    data.contexts(i, 0) = rng.uniform();
    data.contexts(i, 1) = rng.uniform();
    data.outcomes[i] = data.contexts(i, 0) + 0.2 * rng.normal();
  }
  Policy act0 = Policy::deterministic(2, [](const Vector&) { return 0; });
  CoppConfig cfg;
  CoppModel m = copp_fit(data, act0, act0, cfg, 10);
  CHECK(m.n_train_matched == m.n_train);
  CHECK(m.n_cal_matched == m.n_cal);

  // Hand-computed split CQR using the model's own forest and score set.
  WeightedScoreSet set{m.cal_scores, std::vector<double>(m.cal_scores.size(), 1.0), 1.0};
  double q = weighted_quantile(set, 1.0 - cfg.alpha);
  Vector x(2);
  x << 0.4, 0.6;
  auto [qlo, qhi] = m.forest.predict_quantiles(x, cfg.level_lo(), cfg.level_hi());
  PredictionSet set_hat = m.predict(x);
  REQUIRE(set_hat.pieces().size() == 1);
  CHECK(set_hat.pieces()[0].lo == doctest::Approx(qlo - q).epsilon(1e-12));
  CHECK(set_hat.pieces()[0].hi == doctest::Approx(qhi + q).epsilon(1e-12));
}

TEST_CASE("matched calibration count matches its analytic expectation") {
  BanditDataset data = example1_data(2000, 54);
  CoppConfig cfg;
  CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 11);
  // E[matched | cal] via the analytic pseudo policy at the cal contexts.
  IndexSplit split = split_indices(data.n(), {cfg.train_fraction, 11});
  PseudoPolicy pa(Example1Truth::target_policy(), Example1Truth::behavior_policy());
  double expected = 0.0, var = 0.0;
  for (int i : split.calibration) {
    Vector x = data.contexts.row(i).transpose();
    double p = pa.probs(x)[data.actions[i]];
    expected += p;
    var += p * (1 - p);
  }
  CHECK(std::abs(m.n_cal_matched - expected) < 3 * std::sqrt(var) + 1.0);
}

TEST_CASE("interval endpoints equal quantile band expanded by Q") {
  BanditDataset data = example1_data(800, 55);
  CoppConfig cfg;
  CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 12);
  Rng rng(56);
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    double q = m.calibration.quantile(1.0 - cfg.alpha, m.test_weight(x));
    auto [qlo, qhi] = m.forest.predict_quantiles(x, cfg.level_lo(), cfg.level_hi());
    PredictionSet s = m.predict(x);
    REQUIRE(s.pieces().size() == 1);
    CHECK(s.pieces()[0].lo == qlo - q);
    CHECK(s.pieces()[0].hi == qhi + q);
  }
}

TEST_CASE("single replicate coverage is near nominal") {
  BanditDataset data = example1_data(2000, 57);
  CoppConfig cfg;
  CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                         Example1Truth::behavior_policy(), cfg, 13);
  Rng rng(58);
  int covered = 0;
  const int n_test = 2000;
  QuantileForest::Workspace ws;
  for (int i = 0; i < n_test; ++i) {
    auto [x, y] = example1_test_point(Example1Truth::target_policy(), false, rng);
    if (m.predict(x, ws).contains(y)) ++covered;
  }
  double cov = covered / double(n_test);
  CHECK(cov > 0.85);
  CHECK(cov < 0.96);
}

TEST_CASE("interval length grows with confidence") {
  BanditDataset data = example1_data(900, 59);
  Vector x(4);
  x << 0.5, 0.5, 0.5, 0.5;
  double prev = -1.0;
  for (double alpha : {0.3, 0.2, 0.1, 0.05}) {
    CoppConfig cfg;
    cfg.alpha = alpha;
    CoppModel m = copp_fit(data, Example1Truth::target_policy(),
                           Example1Truth::behavior_policy(), cfg, 14);
    double len = m.predict(x).lebesgue_length();
    CHECK(len >= prev);
    prev = len;
  }
}

TEST_CASE("subsampling comparator keeps coverage for deterministic targets") {
  BanditDataset data = example1_data(2000, 60);
  CoppConfig cfg;
  CoppModel m = subsampling_fit(data, Example1Truth::deterministic_target_policy(),
                                Example1Truth::behavior_policy(), cfg, 15);
  Rng rng(61);
  int covered = 0;
  const int n_test = 1500;
  QuantileForest::Workspace ws;
  for (int i = 0; i < n_test; ++i) {
    auto [x, y] = example1_test_point(Example1Truth::deterministic_target_policy(),
                                      false, rng);
    if (m.predict(x, ws).contains(y)) ++covered;
  }
  CHECK(covered / double(n_test) > 0.85);
}

TEST_CASE("direct method weights reduce to one without shift") {
  BanditDataset data = example1_data(500, 62);
  CoppConfig cfg;
  DirectMethodModel m =
      direct_method_fit(data, Example1Truth::behavior_policy(),
                        example1_oracle_density(),
                        Example1Truth::behavior_policy(), cfg, 16);
  Rng rng(63);
  for (int rep = 0; rep < 50; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    CHECK(m.weight(x, rng.normal() * 5.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("direct method membership test agrees with the scanned set") {
  BanditDataset data = example1_data(700, 64);
  CoppConfig cfg;
  DirectMethodModel m =
      direct_method_fit(data, Example1Truth::target_policy(),
                        example1_oracle_density(),
                        Example1Truth::behavior_policy(), cfg, 17);
  Rng rng(65);
  QuantileForest::Workspace ws;
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    PredictionSet set = m.predict(x);
    for (int g = 0; g < 40; ++g) {
      double y = rng.uniform(m.y_min - 2.0, m.y_max + 2.0);
      bool direct = m.contains(x, y, ws);
      bool in_set = set.contains(y);
      // Grid endpoints may disagree within one cell width of a boundary.
      double cell = (m.y_max - m.y_min) * 3.0 / (m.grid_size - 1);
      bool near_boundary = false;
      for (const auto& piece : set.pieces())
        if (std::abs(y - piece.lo) < cell || std::abs(y - piece.hi) < cell)
          near_boundary = true;
      if (set.pieces().empty() || !near_boundary) CHECK(direct == in_set);
    }
  }
}

TEST_CASE("empty matched calibration raises") {
  // Behavior always acts 0, target always acts 1: no draw can match.
  Rng rng(66);
  const int n = 40;
  BanditDataset data;
  data.contexts = Matrix::Zero(n, 1);
  data.actions.assign(n, 0);
  data.outcomes = Vector::Zero(n);
  data.num_actions = 2;
  for (int i = 0; i < n; ++i) data.contexts(i, 0) = rng.uniform();
  Policy act1 = Policy::deterministic(2, [](const Vector&) { return 1; });
  Policy act0 = Policy::deterministic(2, [](const Vector&) { return 0; });
  CoppConfig cfg;
  CHECK_THROWS_AS(copp_fit(data, act1, act0, cfg, 18), EmptyCalibrationError);
}
