#include <cmath>

#include "milq/svm.hpp"

namespace milq {

namespace {

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double loss_sum(const Eigen::VectorXd& margin, std::span<const int> y) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) f += log1pexp(-y[static_cast<std::size_t>(i)] * margin[i]);
  return f;
}

}  // namespace

double l1_objective(const Eigen::MatrixXd& S, std::span<const int> y, const Eigen::VectorXd& w, double b, double C) {
  const Eigen::VectorXd m = (S * w).array() + b;
  return loss_sum(m, y) + w.lpNorm<1>() / C;
}

L1LinearModel l1_linear_train(const Eigen::MatrixXd& S, std::span<const int> y, double C, const L1Options& opts) {
  if (S.rows() != static_cast<Eigen::Index>(y.size())) throw InvalidArgument("l1_linear_train: row/label count mismatch");
  if (!(C > 0.0)) throw InvalidArgument("l1_linear_train: C must be > 0");
  check_binary_labels(y, "l1_linear_train");
  const Eigen::Index n = S.rows(), p = S.cols();
  const double lambda = 1.0 / C;
  constexpr double kArmijo = 0.01;
  constexpr double kMinStep = 1e-12;

  L1LinearModel model;
  model.C = C;
  model.weights = Eigen::VectorXd::Zero(p);
  double b = 0.0;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd trial(n);

  // Returns the applied change; `col` is null for the bias coordinate.
  auto update = [&](const double* col, double& wj, double penalty) {
    double g = 0.0, h = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = col ? col[i] : 1.0;
      const double pi = sigmoid(m[i]);
      const double ti = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;
      g += s * (pi - ti);
      h += s * s * pi * (1.0 - pi);
    }
    double d;
    if (g + penalty <= h * wj) {
      d = -(g + penalty) / h;
    } else if (g - penalty >= h * wj) {
      d = -(g - penalty) / h;
    } else {
      d = -wj;
    }
    if (d == 0.0) return 0.0;
    const double base = loss_sum(m, y) + penalty * std::abs(wj);
    const double pred = g * d + penalty * (std::abs(wj + d) - std::abs(wj));
    for (double step = 1.0; step >= kMinStep; step *= 0.5) {
      const double ds = step * d;
      for (Eigen::Index i = 0; i < n; ++i) trial[i] = m[i] + ds * (col ? col[i] : 1.0);
      const double f = loss_sum(trial, y) + penalty * std::abs(wj + ds);
      if (f - base <= kArmijo * step * pred) {
        m.swap(trial);
        wj += ds;
        return ds;
      }
    }
    return 0.0;
  };

  long sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_delta = std::abs(update(nullptr, b, 0.0));
    for (Eigen::Index j = 0; j < p; ++j) {
      max_delta = std::max(max_delta, std::abs(update(S.col(j).data(), model.weights[j], lambda)));
    }
    if (max_delta < opts.tol) break;
  }
  if (sweep == opts.max_sweeps) {
    throw NonConvergence("l1 logistic regression did not converge", 0.0);
  }
  model.bias = b;
  return model;
}

std::vector<int> L1LinearModel::support() const {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights[j] != 0.0) idx.push_back(static_cast<int>(j));
  }
  return idx;
}

double L1LinearModel::margin(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != weights.size()) throw InvalidArgument("l1 model: dimension mismatch");
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[static_cast<Eigen::Index>(j)] * x[j];
  return z;
}

double L1LinearModel::probability(std::span<const double> x) const { return sigmoid(margin(x)); }

}  // namespace milq
