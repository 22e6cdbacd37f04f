#include <cmath>
#include <cstdio>

#include "milq/svm.hpp"

namespace milq {

Kernel Kernel::polynomial(int degree) {
  Kernel k;
  k.kind = Kind::Polynomial;
  k.degree = degree;
  k.validate();
  return k;
}

Kernel Kernel::rbf(double sigma) {
  Kernel k;
  k.kind = Kind::Rbf;
  k.sigma = sigma;
  k.validate();
  return k;
}

void Kernel::validate() const {
  if (kind == Kind::Polynomial && degree != 1 && degree != 2) throw InvalidArgument("polynomial degree must be 1 or 2");
  if (kind == Kind::Rbf && !(sigma > 0.0)) throw InvalidArgument("rbf sigma must be > 0");
}

double Kernel::from_parts(double dot, double sq_dist) const {
  if (kind == Kind::Polynomial) {
    const double base = dot + 1.0;
    return degree == 1 ? base : base * base;
  }
  return std::exp(-sq_dist / (2.0 * sigma * sigma));
}

std::string Kernel::label() const {
  if (kind == Kind::Polynomial) return "poly" + std::to_string(degree);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rbf%g", sigma);
  return buf;
}

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("kernel dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return k.from_parts(dot, sq);
}

Eigen::MatrixXd kernel_from_dots(const Kernel& k, const Eigen::MatrixXd& dots, const Eigen::VectorXd& na,
                                 const Eigen::VectorXd& nb) {
  Eigen::MatrixXd out(dots.rows(), dots.cols());
  for (Eigen::Index j = 0; j < dots.cols(); ++j) {
    for (Eigen::Index i = 0; i < dots.rows(); ++i) {
      const double sq = std::max(0.0, na[i] + nb[j] - 2.0 * dots(i, j));
      out(i, j) = k.from_parts(dots(i, j), sq);
    }
  }
  return out;
}

Eigen::MatrixXd kernel_matrix(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("kernel matrix dimension mismatch");
  const Eigen::MatrixXd dots = a * b.transpose();
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  return kernel_from_dots(k, dots, na, nb);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_binary_labels(std::span<const int> labels, const char* who) {
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw InvalidArgument(std::string(who) + ": labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw DataError(std::string(who) + ": need at least one example of each class");
}

}  // namespace milq
