#include <cmath>
#include <limits>

#include "milq/svm.hpp"

namespace milq {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

DualSolution smo_solve(const Eigen::MatrixXd& K, std::span<const int> y, double C, const SmoOptions& opts) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (K.rows() != n || K.cols() != n) throw InvalidArgument("smo: kernel matrix size does not match labels");
  if (!(C > 0.0)) throw InvalidArgument("smo: C must be > 0");
  check_binary_labels(y, "smo");

  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> grad(static_cast<std::size_t>(n), -1.0);  // G = Q alpha - e
  auto yi = [&](Eigen::Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };
  auto in_up = [&](Eigen::Index t) {
    const double a = alpha[static_cast<std::size_t>(t)];
    return (y[static_cast<std::size_t>(t)] == 1 && a < C) || (y[static_cast<std::size_t>(t)] == -1 && a > 0.0);
  };
  auto in_low = [&](Eigen::Index t) {
    const double a = alpha[static_cast<std::size_t>(t)];
    return (y[static_cast<std::size_t>(t)] == -1 && a < C) || (y[static_cast<std::size_t>(t)] == 1 && a > 0.0);
  };

  DualSolution sol;
  double gap = std::numeric_limits<double>::infinity();
  long iter = 0;
  for (;; ++iter) {
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -yi(t) * grad[static_cast<std::size_t>(t)];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
    if (gap <= opts.tol) break;
    if (iter >= opts.max_iter) throw NonConvergence("smo did not converge in " + std::to_string(iter) + " iterations", gap);

    const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    const double old_ai = alpha[ui], old_aj = alpha[uj];
    if (y[ui] != y[uj]) {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[ui] - grad[uj]) / quad;
      const double diff = alpha[ui] - alpha[uj];
      alpha[ui] += delta;
      alpha[uj] += delta;
      if (diff > 0) {
        if (alpha[uj] < 0) {
          alpha[uj] = 0;
          alpha[ui] = diff;
        }
      } else if (alpha[ui] < 0) {
        alpha[ui] = 0;
        alpha[uj] = -diff;
      }
      if (diff > 0) {
        if (alpha[ui] > C) {
          alpha[ui] = C;
          alpha[uj] = C - diff;
        }
      } else if (alpha[uj] > C) {
        alpha[uj] = C;
        alpha[ui] = C + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[ui] - grad[uj]) / quad;
      const double sum = alpha[ui] + alpha[uj];
      alpha[ui] -= delta;
      alpha[uj] += delta;
      if (sum > C) {
        if (alpha[ui] > C) {
          alpha[ui] = C;
          alpha[uj] = sum - C;
        }
        if (alpha[uj] > C) {
          alpha[uj] = C;
          alpha[ui] = sum - C;
        }
      } else {
        if (alpha[uj] < 0) {
          alpha[uj] = 0;
          alpha[ui] = sum;
        }
        if (alpha[ui] < 0) {
          alpha[ui] = 0;
          alpha[uj] = sum;
        }
      }
    }
    const double dai = (alpha[ui] - old_ai) * yi(i);
    const double daj = (alpha[uj] - old_aj) * yi(j);
    const double* ki = K.col(i).data();
    const double* kj = K.col(j).data();
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[static_cast<std::size_t>(t)] += yi(t) * (ki[t] * dai + kj[t] * daj);
    }
  }

  // Bias from free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  int nr_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    const double yg = yi(t) * grad[ut];
    if (alpha[ut] >= C) {
      if (y[ut] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[ut] <= 0.0) {
      if (y[ut] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++nr_free;
      sum_free += yg;
    }
  }
  const double rho = nr_free > 0 ? sum_free / nr_free : (ub + lb) / 2.0;
  sol.alpha = std::move(alpha);
  sol.bias = -rho;
  sol.iterations = iter;
  sol.kkt_residual = gap;
  return sol;
}

double dual_objective(const Eigen::MatrixXd& K, std::span<const int> y, std::span<const double> alpha) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd ay(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ay[i] = alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    sum += alpha[static_cast<std::size_t>(i)];
  }
  return sum - 0.5 * ay.dot(K * ay);
}

double primal_objective(const Eigen::MatrixXd& K, std::span<const int> y, const DualSolution& sol, double C) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd ay(n);
  for (Eigen::Index i = 0; i < n; ++i) ay[i] = sol.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  const Eigen::VectorXd g = K * ay;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    hinge += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * (g[i] + sol.bias));
  }
  return 0.5 * ay.dot(g) + C * hinge;
}

SvmModel make_svm_model(const Eigen::MatrixXd& X, std::span<const int> y, const DualSolution& sol,
                        const Kernel& kernel, double C) {
  std::vector<Eigen::Index> sv;
  for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
    if (sol.alpha[i] > 0.0) sv.push_back(static_cast<Eigen::Index>(i));
  }
  SvmModel m;
  m.kernel = kernel;
  m.C = C;
  m.bias = sol.bias;
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    m.coef[static_cast<Eigen::Index>(k)] = sol.alpha[static_cast<std::size_t>(sv[k])] * y[static_cast<std::size_t>(sv[k])];
  }
  return m;
}

SvmModel smo_train(const Eigen::MatrixXd& X, std::span<const int> y, const Kernel& kernel, double C, double tol) {
  if (X.rows() != static_cast<Eigen::Index>(y.size())) throw InvalidArgument("smo_train: row/label count mismatch");
  kernel.validate();
  const Eigen::MatrixXd K = kernel_matrix(kernel, X, X);
  SmoOptions opts;
  opts.tol = tol;
  const DualSolution sol = smo_solve(K, y, C, opts);
  SvmModel m = make_svm_model(X, y, sol, kernel, C);
  Eigen::VectorXd ay(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) ay[i] = sol.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  const Eigen::VectorXd g = (K * ay).array() + sol.bias;
  m.platt = platt_fit(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), y);
  return m;
}

double SvmModel::decision(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != support_vectors.cols() && support_vectors.rows() > 0) {
    throw InvalidArgument("svm decision: dimension mismatch");
  }
  double g = bias;
  std::vector<double> sv(static_cast<std::size_t>(support_vectors.cols()));
  for (Eigen::Index k = 0; k < support_vectors.rows(); ++k) {
    for (Eigen::Index c = 0; c < support_vectors.cols(); ++c) sv[static_cast<std::size_t>(c)] = support_vectors(k, c);
    g += coef[k] * kernel_eval(kernel, sv, x);
  }
  return g;
}

Eigen::VectorXd SvmModel::decisions(const Eigen::MatrixXd& x) const {
  if (support_vectors.rows() == 0) return Eigen::VectorXd::Constant(x.rows(), bias);
  if (x.cols() != support_vectors.cols()) throw InvalidArgument("svm decision: dimension mismatch");
  return (kernel_matrix(kernel, x, support_vectors) * coef).array() + bias;
}

}  // namespace milq
