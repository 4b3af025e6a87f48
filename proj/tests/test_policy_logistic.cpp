#include <cmath>

#include "doctest.h"

#include "copp/logistic.hpp"
#include "copp/rng.hpp"
#include "copp/synthetic.hpp"

using namespace copp;

TEST_CASE("intercept-only balanced fit predicts one half") {
  Matrix X(50, 0);
  std::vector<int> y(50);
  for (int i = 0; i < 50; ++i) y[i] = i % 2;
  LogisticModel m = fit_logistic(X, y, 0.0, 2);
  Vector probe(0);
  CHECK(m.predict_probs(probe)[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("logistic recovers example-1 behavior coefficients") {
  // A single n=10000 draw leaves slope standard errors near 0.08, so the
  // +-0.1 recovery bound is checked on coefficients averaged over ten
  // independent fits (standard error ~0.025, making the bound ~4 sigma).
  Rng rng(11);
  const int n = 10000;
  const int fits = 10;
  Vector avg = Vector::Zero(5);
  for (int f = 0; f < fits; ++f) {
    Matrix X(n, 4);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      Vector x(4);
      for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
      X.row(i) = x.transpose();
      y[i] = rng.bernoulli(Example1Truth::behavior_p1(x)) ? 1 : 0;
    }
    LogisticModel m = fit_logistic(X, y, 0.0, 2);
    CHECK(m.converged);
    for (int j = 0; j <= 4; ++j) avg[j] += m.coefficients(0, j);
  }
  avg /= double(fits);
  for (int j = 0; j <= 4; ++j) CHECK(std::abs(avg[j] - (-0.5)) < 0.1);
}

TEST_CASE("huge ridge shrinks slopes to zero") {
  Rng rng(12);
  Matrix X(200, 3);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.uniform();
    y[i] = rng.bernoulli(sigmoid(2.0 * X(i, 0) - 1.0)) ? 1 : 0;
  }
  LogisticModel m = fit_logistic(X, y, 1e8, 2);
  for (int j = 1; j <= 3; ++j) CHECK(std::abs(m.coefficients(0, j)) < 1e-4);
}

TEST_CASE("single-class labels raise") {
  Matrix X(10, 1);
  X.setZero();
  std::vector<int> y(10, 1);
  CHECK_THROWS_AS(fit_logistic(X, y, 0.0, 2), DegenerateLabelsError);
}

TEST_CASE("multinomial masses sum to one and order classes sensibly") {
  Rng rng(13);
  const int n = 3000;
  Matrix X(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    X(i, 0) = a;
    X(i, 1) = b;
    double mass[3] = {0.2 + 0.6 * a, 0.2, 0.6 - 0.6 * a + 0.2};
    double s = mass[0] + mass[1] + mass[2];
    double norm[3] = {mass[0] / s, mass[1] / s, mass[2] / s};
    y[i] = rng.discrete(norm, 3);
  }
  LogisticModel m = fit_logistic(X, y, 0.0, 3);
  Vector lo(2), hi(2);
  lo << 0.05, 0.5;
  hi << 0.95, 0.5;
  std::vector<double> pl = m.predict_probs(lo), ph = m.predict_probs(hi);
  CHECK(pl[0] + pl[1] + pl[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ph[0] > pl[0]);  // class 0 mass grows with the first feature
  CHECK(ph[2] < pl[2]);
}

TEST_CASE("cross-validated ridge picks a grid value and stays deterministic") {
  Rng rng(14);
  const int n = 300, d = 20;
  Matrix X(n, d);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
    y[i] = rng.bernoulli(sigmoid(X(i, 0) - 0.5)) ? 1 : 0;
  }
  LogisticModel a = fit_logistic_cv(X, y, 2, 5);
  LogisticModel b = fit_logistic_cv(X, y, 2, 5);
  CHECK(a.ridge_lambda == b.ridge_lambda);
  bool in_grid = false;
  for (double l : default_lambda_grid())
    if (l == a.ridge_lambda) in_grid = true;
  CHECK(in_grid);
  CHECK(a.coefficients == b.coefficients);
}

TEST_CASE("logistic model json round trip") {
  Rng rng(15);
  Matrix X(100, 2);
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    y[i] = rng.bernoulli(0.3 + 0.4 * X(i, 0)) ? 1 : 0;
  }
  LogisticModel m = fit_logistic(X, y, 0.5, 2);
  LogisticModel back = logistic_from_json(to_json(m));
  CHECK(back.ridge_lambda == m.ridge_lambda);
  CHECK(back.num_classes == m.num_classes);
  CHECK(back.coefficients == m.coefficients);
}

TEST_CASE("fitted policy clips probabilities") {
  Rng rng(16);
  Matrix X(60, 1);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = i < 30 ? 0.0 : 1.0;
    y[i] = i < 30 ? 0 : 1;  // perfectly separated
  }
  LogisticModel m = fit_logistic(X, y, 1e-4, 2);
  Policy p = m.as_policy();
  Vector far(1);
  far << 50.0;
  std::vector<double> probs = p.probs(far);
  CHECK(probs[0] >= kPositivityFloor);
  CHECK(probs[1] <= 1.0 - kPositivityFloor);
}
