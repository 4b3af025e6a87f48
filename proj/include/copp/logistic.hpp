#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copp/dataset.hpp"
#include "copp/policy.hpp"
#include "copp/rng.hpp"

namespace copp {

struct DegenerateLabelsError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Multinomial logistic regression in one-vs-reference parameterization
// (class 0 is the reference), fitted by ridge-penalized Newton/IRLS steps.
struct LogisticModel {
  Matrix coefficients;   // (m-1) x (d+1), intercept first
  double ridge_lambda = 0.0;
  int num_classes = 2;
  bool converged = false;
  int iterations = 0;

  int dim() const { return static_cast<int>(coefficients.cols()) - 1; }

  // Class probabilities for a context; sums to 1.
  std::vector<double> predict_probs(const Vector& x) const {
    const int m = num_classes;
    std::vector<double> eta(m, 0.0);
    double max_eta = 0.0;
    for (int c = 1; c < m; ++c) {
      double e = coefficients(c - 1, 0);
      for (int j = 0; j < dim(); ++j) e += coefficients(c - 1, j + 1) * x[j];
      eta[c] = e;
      max_eta = std::max(max_eta, e);
    }
    double denom = 0.0;
    std::vector<double> p(m);
    for (int c = 0; c < m; ++c) {
      p[c] = std::exp(eta[c] - max_eta);
      denom += p[c];
    }
    for (int c = 0; c < m; ++c) p[c] /= denom;
    return p;
  }

  // Policy view with positivity clipping applied.
  Policy as_policy(double floor = kPositivityFloor) const {
    LogisticModel self = *this;
    int m = num_classes;
    return Policy(m,
                  [self, floor, m](const Vector& x) {
                    std::vector<double> p = self.predict_probs(x);
                    double s = 0.0;
                    for (double& v : p) {
                      v = clip_probability(v, floor);
                      s += v;
                    }
                    for (double& v : p) v /= s;
                    return p;
                  },
                  PolicyKind::fitted_logistic);
  }
};

namespace detail {

inline void check_logistic_inputs(const Matrix& X, const std::vector<int>& y,
                                  int num_classes) {
  const int n = static_cast<int>(X.rows());
  if (n == 0 || static_cast<int>(y.size()) != n)
    throw std::invalid_argument("features/labels misaligned");
  if (!X.allFinite()) throw std::invalid_argument("non-finite features");
  std::vector<int> counts(num_classes, 0);
  for (int v : y) {
    if (v < 0 || v >= num_classes) throw std::invalid_argument("label out of range");
    ++counts[v];
  }
  int present = 0;
  for (int c : counts) present += (c > 0);
  if (present < 2) throw DegenerateLabelsError("labels contain a single class");
}

}  // namespace detail

inline LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y,
                                  double ridge_lambda = 0.0, int num_classes = 2,
                                  int max_iter = 100, double tol = 1e-8) {
  detail::check_logistic_inputs(X, y, num_classes);
  if (ridge_lambda < 0.0) throw std::invalid_argument("ridge_lambda must be >= 0");
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const int m = num_classes;
  const int p = d + 1;            // per-class parameter count
  const int dim = (m - 1) * p;    // total parameters

  Matrix Z(n, p);
  Z.col(0).setOnes();
  if (d > 0) Z.rightCols(d) = X;

  Vector beta = Vector::Zero(dim);
  Matrix P(n, m);  // class probabilities per sample

  LogisticModel model;
  model.ridge_lambda = ridge_lambda;
  model.num_classes = m;

  for (int iter = 1; iter <= max_iter; ++iter) {
    // Probabilities under current beta.
    for (int i = 0; i < n; ++i) {
      double max_eta = 0.0;
      Eigen::VectorXd eta(m);
      eta[0] = 0.0;
      for (int c = 1; c < m; ++c) {
        eta[c] = Z.row(i).dot(beta.segment((c - 1) * p, p));
        max_eta = std::max(max_eta, eta[c]);
      }
      double denom = 0.0;
      for (int c = 0; c < m; ++c) {
        P(i, c) = std::exp(eta[c] - max_eta);
        denom += P(i, c);
      }
      P.row(i) /= denom;
    }

    // Gradient of the penalized negative log-likelihood; intercepts are not
    // penalized.
    Vector grad = Vector::Zero(dim);
    for (int c = 1; c < m; ++c) {
      Vector r(n);
      for (int i = 0; i < n; ++i) r[i] = P(i, c) - (y[i] == c ? 1.0 : 0.0);
      grad.segment((c - 1) * p, p) = Z.transpose() * r;
    }
    for (int c = 1; c < m; ++c)
      grad.segment((c - 1) * p + 1, d) += ridge_lambda * beta.segment((c - 1) * p + 1, d);

    // Hessian in (m-1)x(m-1) blocks of Z' diag(w) Z.
    Matrix H = Matrix::Zero(dim, dim);
    for (int a = 1; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        Vector w(n);
        for (int i = 0; i < n; ++i)
          w[i] = P(i, a) * ((a == b ? 1.0 : 0.0) - P(i, b));
        Matrix block = Z.transpose() * w.asDiagonal() * Z;
        H.block((a - 1) * p, (b - 1) * p, p, p) = block;
        if (a != b) H.block((b - 1) * p, (a - 1) * p, p, p) = block;
      }
    }
    for (int c = 1; c < m; ++c)
      for (int j = 1; j < p; ++j) H((c - 1) * p + j, (c - 1) * p + j) += ridge_lambda;
    H.diagonal().array() += 1e-10;  // guards separation-degenerate Hessians

    Vector step = H.ldlt().solve(grad);
    beta -= step;
    model.iterations = iter;
    if (step.cwiseAbs().maxCoeff() < tol) {
      model.converged = true;
      break;
    }
  }

  model.coefficients.resize(m - 1, p);
  for (int c = 1; c < m; ++c)
    model.coefficients.row(c - 1) = beta.segment((c - 1) * p, p).transpose();
  return model;
}

// Held-out mean log-likelihood used by cross-validation.
inline double logistic_loglik(const LogisticModel& model, const Matrix& X,
                              const std::vector<int>& y) {
  double ll = 0.0;
  for (int i = 0; i < static_cast<int>(X.rows()); ++i) {
    Vector xi = X.row(i).transpose();
    std::vector<double> pr = model.predict_probs(xi);
    ll += std::log(std::max(pr[y[i]], 1e-300));
  }
  return ll / static_cast<double>(X.rows());
}

// Ridge lambda selected by 5-fold cross-validated log-likelihood over a
// fixed log-spaced grid.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i < 10; ++i) g.push_back(std::pow(10.0, -4.0 + 4.0 * i / 9.0));
  return g;
}

inline LogisticModel fit_logistic_cv(const Matrix& X, const std::vector<int>& y,
                                     int num_classes = 2, std::uint64_t seed = 0,
                                     const std::vector<double>& grid = default_lambda_grid(),
                                     int folds = 5) {
  detail::check_logistic_inputs(X, y, num_classes);
  const int n = static_cast<int>(X.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, StreamTag::misc, 0xCFULL));
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);

  double best_ll = -std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  for (double lam : grid) {
    double ll = 0.0;
    bool usable = true;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> tr, te;
      for (int i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(perm[i]);
      Matrix Xtr(tr.size(), X.cols()), Xte(te.size(), X.cols());
      std::vector<int> ytr(tr.size()), yte(te.size());
      for (size_t i = 0; i < tr.size(); ++i) { Xtr.row(i) = X.row(tr[i]); ytr[i] = y[tr[i]]; }
      for (size_t i = 0; i < te.size(); ++i) { Xte.row(i) = X.row(te[i]); yte[i] = y[te[i]]; }
      try {
        LogisticModel m = fit_logistic(Xtr, ytr, lam, num_classes, 25, 1e-6);
        ll += logistic_loglik(m, Xte, yte);
      } catch (const DegenerateLabelsError&) {
        usable = false;
        break;
      }
    }
    if (usable && ll > best_ll) {
      best_ll = ll;
      best_lambda = lam;
    }
  }
  return fit_logistic(X, y, best_lambda, num_classes);
}

inline nlohmann::json to_json(const LogisticModel& m) {
  nlohmann::json j;
  j["num_classes"] = m.num_classes;
  j["ridge_lambda"] = m.ridge_lambda;
  j["converged"] = m.converged;
  std::vector<std::vector<double>> coef;
  for (int r = 0; r < m.coefficients.rows(); ++r) {
    std::vector<double> row(m.coefficients.cols());
    for (int c = 0; c < m.coefficients.cols(); ++c) row[c] = m.coefficients(r, c);
    coef.push_back(std::move(row));
  }
  j["coefficients"] = coef;
  return j;
}

inline LogisticModel logistic_from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.num_classes = j.at("num_classes").get<int>();
  m.ridge_lambda = j.at("ridge_lambda").get<double>();
  m.converged = j.value("converged", true);
  auto coef = j.at("coefficients").get<std::vector<std::vector<double>>>();
  m.coefficients.resize(coef.size(), coef.empty() ? 0 : coef[0].size());
  for (size_t r = 0; r < coef.size(); ++r)
    for (size_t c = 0; c < coef[r].size(); ++c) m.coefficients(r, c) = coef[r][c];
  return m;
}

}  // namespace copp
