#include <cmath>

#include "doctest.h"

#include "copp/rng.hpp"
#include "copp/synthetic.hpp"

using namespace copp;

TEST_CASE("single-stage truth at hand-computed points") {
  Vector zero = Vector::Zero(4);
  // mean(0, arm 0) = 1 + 0 - 0 + 0 + exp(0) = 2
  CHECK(Example1Truth::arm_mean(zero, 0) == doctest::Approx(2.0).epsilon(1e-12));
  // arm 1 adds 3 - 0 + 0 - 0 + 0
  CHECK(Example1Truth::arm_mean(zero, 1) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(Example1Truth::arm_sd(zero, 0) == doctest::Approx(1.0));
  CHECK(Example1Truth::arm_sd(zero, 1) == doctest::Approx(2.0));
  CHECK(Example1Truth::behavior_p1(zero) ==
        doctest::Approx(0.3775406688).epsilon(1e-9));
  Vector half = Vector::Constant(4, 0.5);
  // behavior: sigmoid(-0.5 - 0.5 * 2) = sigmoid(-1.5)
  CHECK(Example1Truth::behavior_p1(half) ==
        doctest::Approx(1.0 / (1.0 + std::exp(1.5))).epsilon(1e-12));
  // target at x = (.5,.5,.5,.5): sigmoid(-0.5 + .5 + .5 - .5 - .5)
  CHECK(Example1Truth::target_p1(half) ==
        doctest::Approx(0.3775406688).epsilon(1e-9));
  // deterministic target: larger second pair picks arm 1
  Vector v(4);
  v << 0.1, 0.2, 0.8, 0.9;
  CHECK(Example1Truth::deterministic_target_policy().prob(1, v) == 1.0);
  v << 0.8, 0.9, 0.1, 0.2;
  CHECK(Example1Truth::deterministic_target_policy().prob(0, v) == 1.0);
}

TEST_CASE("two-stage truth at hand-computed points") {
  // All-zero inputs, both arms 0: mean = 1, multiplier = 1.
  CHECK(Example2Truth::outcome(0, 0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(Example2Truth::outcome(0, 0, 0, 0, 1) == doctest::Approx(2.0));
  // x1=0.5, t1=1, x2=0.5, t2=0: 1 + 0.5 + (1 - 3*0.09) + 0.5 = 2.73.
  CHECK(Example2Truth::outcome(0.5, 1, 0.5, 0, 0) ==
        doctest::Approx(2.73).epsilon(1e-12));
  // Noise multiplier at (0.9, 1, 1.9, 1): 1 + 0.5 - 0.9 + 0.5 - 1.9 = -0.8.
  double mult = Example2Truth::outcome(0.9, 1, 1.9, 1, 1.0) -
                Example2Truth::outcome(0.9, 1, 1.9, 1, 0.0);
  CHECK(mult == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(mult < 0.0);
}

TEST_CASE("markov scenario state recursion") {
  CHECK(Example3Truth::initial_state(0.2) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(Example3Truth::next_state(0.1, 1, 0.0) ==
        doctest::Approx(0.15).epsilon(1e-12));
  CHECK(Example3Truth::next_state(0.1, 0, 0.1) ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(Example3Truth::behavior_p1(0.5) == doctest::Approx(sigmoid(0.0)));
  CHECK(Example3Truth::target_p1(1.0) == doctest::Approx(sigmoid(0.0)));
}

TEST_CASE("generator dimensions and ranges") {
  Rng rng(111);
  BanditDataset low = generate_example1(100, false, rng);
  CHECK(low.dim() == 4);
  CHECK(low.n() == 100);
  BanditDataset high = generate_example1(100, true, rng);
  CHECK(high.dim() == 100);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      CHECK(high.contexts(i, j) >= 0.0);
      CHECK(high.contexts(i, j) <= 1.0);
    }
  TrajectoryDataset t2 = generate_example2(50, true, rng);
  CHECK(t2.horizon() == 2);
  CHECK(t2.stage_states[0].cols() == 100);
  CHECK(t2.stage_states[1].cols() == 1);
  // Stage-2 state lies in (x1, x1 + 1).
  for (int i = 0; i < 50; ++i) {
    double x1 = t2.stage_states[0](i, 0);
    double x2 = t2.stage_states[1](i, 0);
    CHECK(x2 >= x1);
    CHECK(x2 <= x1 + 1.0);
  }
  TrajectoryDataset t3 = generate_example3(50, 5, rng);
  CHECK(t3.horizon() == 5);
  CHECK(t3.n() == 50);
  for (int i = 0; i < 50; ++i)
    CHECK(t3.outcomes[i] == t3.stage_states[4](i, 0));
}

TEST_CASE("logged action frequency matches the behavior policy") {
  Rng rng(112);
  const int n = 50000;
  BanditDataset data = generate_example1(n, false, rng);
  double expected = 0.0, var = 0.0, observed = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = Example1Truth::behavior_p1(data.contexts.row(i).transpose());
    expected += p;
    var += p * (1 - p);
    observed += data.actions[i];
  }
  CHECK(std::abs(observed - expected) < 4 * std::sqrt(var));
}

TEST_CASE("padded features are independent of the logged action") {
  Rng rng(113);
  const int n = 20000;
  BanditDataset data = generate_example1(n, true, rng);
  for (int j : {10, 50, 99}) {
    double ca = 0.0, cx = 0.0, cax = 0.0, sxx = 0.0, saa = 0.0;
    for (int i = 0; i < n; ++i) {
      ca += data.actions[i];
      cx += data.contexts(i, j);
    }
    ca /= n;
    cx /= n;
    for (int i = 0; i < n; ++i) {
      double da = data.actions[i] - ca, dx = data.contexts(i, j) - cx;
      cax += da * dx;
      saa += da * da;
      sxx += dx * dx;
    }
    double corr = cax / std::sqrt(saa * sxx);
    CHECK(std::abs(corr) < 4.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("oracle quantiles invert the mixture distribution function") {
  Rng rng(114);
  Policy target = Example1Truth::target_policy();
  for (int rep = 0; rep < 50; ++rep) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
    auto [qlo, qhi] = oracle_quantiles_example1(x, target, 0.05, 0.95);
    std::vector<double> pe = target.probs(x);
    auto cdf = [&](double y) {
      double F = 0.0;
      for (int t = 0; t < 2; ++t)
        F += pe[t] * normal_cdf((y - Example1Truth::arm_mean(x, t)) /
                                Example1Truth::arm_sd(x, t));
      return F;
    };
    CHECK(cdf(qlo) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(cdf(qhi) == doctest::Approx(0.95).epsilon(1e-6));
    CHECK(qlo < qhi);
  }
}

TEST_CASE("oracle quantiles reduce to the gaussian for a point-mass policy") {
  Policy always1 = Policy::deterministic(2, [](const Vector&) { return 1; });
  Vector x = Vector::Constant(4, 0.25);
  auto [qlo, qhi] = oracle_quantiles_example1(x, always1, 0.05, 0.95);
  double mean = Example1Truth::arm_mean(x, 1);
  double sd = Example1Truth::arm_sd(x, 1);
  CHECK(qlo == doctest::Approx(mean - 1.6448536270 * sd).epsilon(1e-6));
  CHECK(qhi == doctest::Approx(mean + 1.6448536270 * sd).epsilon(1e-6));
}

TEST_CASE("oracle quantiles match independently computed constants") {
  // Frozen reference values for the mixture quantiles at x = (.5,.5,.5,.5)
  // under the stochastic target, computed by an external numeric inversion.
  Vector x = Vector::Constant(4, 0.5);
  auto [qlo, qhi] =
      oracle_quantiles_example1(x, Example1Truth::target_policy(), 0.05, 0.95);
  CHECK(std::abs(qlo - (-4.0002)) < 0.01);
  CHECK(std::abs(qhi - 10.2616) < 0.01);
}

TEST_CASE("scenario validation") {
  ScenarioSpec ok;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.single_stage());
  ScenarioSpec bad = ok;
  bad.example = 4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.example = 3;
  bad.horizon = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.horizon = 5;
  CHECK_NOTHROW(bad.validate());
  CHECK(!bad.single_stage());
  bad.n = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
