#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "milq/error.hpp"

namespace milq {

/// Polynomial (a.b + 1)^p or Gaussian exp(-|a-b|^2 / (2 sigma^2)).
struct Kernel {
  enum class Kind { Polynomial, Rbf };

  Kind kind = Kind::Rbf;
  int degree = 1;
  double sigma = 1.0;

  static Kernel polynomial(int degree);
  static Kernel rbf(double sigma);

  /// Kernel value from the inner product and squared distance of the two points.
  double from_parts(double dot, double sq_dist) const;
  std::string label() const;
  void validate() const;
  bool operator==(const Kernel&) const = default;
};

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b);

/// Kernel matrix between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Same as kernel_matrix but from a precomputed inner-product matrix and row norms.
Eigen::MatrixXd kernel_from_dots(const Kernel& k, const Eigen::MatrixXd& dots, const Eigen::VectorXd& sq_norms_a,
                                 const Eigen::VectorXd& sq_norms_b);

// ---------------------------------------------------------------------------
// SMO

struct SmoOptions {
  double tol = 1e-3;
  long max_iter = 10'000'000;
};

/// Solution of min 1/2 a'Qa - e'a s.t. 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;  // decision g(x) = sum_i alpha_i y_i K(x_i, x) + bias
  long iterations = 0;
  double kkt_residual = 0.0;  // max violating pair gap at exit
};

/// Maximal-violating-pair SMO on a precomputed kernel matrix (ties go to the lowest index).
/// Throws NonConvergence carrying the KKT residual when max_iter is reached.
DualSolution smo_solve(const Eigen::MatrixXd& gram, std::span<const int> labels, double C, const SmoOptions& opts = {});

/// Dual objective in maximisation form: sum a - 1/2 a'Qa.
double dual_objective(const Eigen::MatrixXd& gram, std::span<const int> labels, std::span<const double> alpha);

/// Primal objective 1/2 |w|^2 + C sum hinge, for the given dual solution.
double primal_objective(const Eigen::MatrixXd& gram, std::span<const int> labels, const DualSolution& sol, double C);

// ---------------------------------------------------------------------------
// Platt calibration

/// posterior(g) = 1 / (1 + exp(A g + B)).
struct PlattParams {
  double A = -1.0;
  double B = 0.0;

  double operator()(double decision) const;
  bool operator==(const PlattParams&) const = default;
};

/// Regularised maximum-likelihood sigmoid fit with targets smoothed to
/// (N+ + 1)/(N+ + 2) and 1/(N- + 2). Throws DataError for single-class input.
PlattParams platt_fit(std::span<const double> decisions, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Kernel SVM

struct SvmModel {
  Kernel kernel;
  double C = 1.0;
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd coef;             // alpha_i y_i
  double bias = 0.0;
  PlattParams platt;

  double decision(std::span<const double> x) const;
  double posterior(std::span<const double> x) const { return platt(decision(x)); }
  /// Decision values of every row of `x`.
  Eigen::VectorXd decisions(const Eigen::MatrixXd& x) const;
};

/// Trains on the rows of X with labels +1/-1 and fits Platt calibration on the training decisions.
SvmModel smo_train(const Eigen::MatrixXd& X, std::span<const int> labels, const Kernel& kernel, double C,
                   double tol = 1e-3);

/// Builds an SvmModel from a dual solution over the rows of X (support vectors are rows with alpha > 0).
SvmModel make_svm_model(const Eigen::MatrixXd& X, std::span<const int> labels, const DualSolution& sol,
                        const Kernel& kernel, double C);

// ---------------------------------------------------------------------------
// L1-regularised logistic regression

struct L1Options {
  double tol = 1e-6;  // stop when the largest coordinate update of a sweep is below tol
  long max_sweeps = 200'000;
};

struct L1LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double C = 1.0;

  std::vector<int> support() const;
  double margin(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

/// Minimises sum_i log(1 + exp(-y_i (w.s_i + b))) + (1/C) |w|_1 by cyclic coordinate
/// descent with soft-thresholded Newton steps; the bias is unpenalised.
L1LinearModel l1_linear_train(const Eigen::MatrixXd& S, std::span<const int> labels, double C,
                              const L1Options& opts = {});

double l1_objective(const Eigen::MatrixXd& S, std::span<const int> labels, const Eigen::VectorXd& w, double b,
                    double C);

double sigmoid(double z);

void check_binary_labels(std::span<const int> labels, const char* who);

}  // namespace milq
