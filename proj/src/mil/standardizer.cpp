#include <cmath>

#include "milq/mil.hpp"

namespace milq {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X, std::vector<std::string> fit_subjects) {
  if (X.rows() == 0) throw DataError("cannot fit a standardizer on zero instances");
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.mean[c]).square().mean();
    const double sd = std::sqrt(var);
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  s.fit_subjects = std::move(fit_subjects);
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) {
    throw InvalidArgument("standardizer expects " + std::to_string(mean.size()) + " features, got " +
                          std::to_string(X.cols()));
  }
  return ((X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

}  // namespace milq
