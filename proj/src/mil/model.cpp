#include "milq/mil.hpp"

namespace milq {

Eigen::Index MilDataset::num_instances() const {
  Eigen::Index n = 0;
  for (const auto& b : bags) n += b.size();
  return n;
}

std::vector<std::string> MilDataset::ids() const {
  std::vector<std::string> out;
  out.reserve(bags.size());
  for (const auto& b : bags) out.push_back(b.id);
  return out;
}

void MilDataset::validate_training() const {
  bool pos = false, neg = false;
  for (const auto& b : bags) {
    if (b.size() == 0) throw DataError("bag '" + b.id + "' has no instances");
    if (b.instances.cols() != dim()) throw DataError("bag '" + b.id + "' has a different feature dimension");
    if (b.label == 1) {
      pos = true;
    } else if (b.label == -1) {
      neg = true;
    } else {
      throw InvalidArgument("bag '" + b.id + "' label must be +1 or -1");
    }
  }
  if (!pos || !neg) throw DataError("training needs at least one positive and one negative bag");
}

std::string to_string(Variant v) { return v == Variant::MisvmQ ? "misvm_q" : "miles_q"; }

Variant parse_variant(const std::string& s) {
  if (s == "misvm_q" || s == "misvm-q") return Variant::MisvmQ;
  if (s == "miles_q" || s == "miles-q") return Variant::MilesQ;
  throw InvalidArgument("unknown classifier variant '" + s + "' (expected misvm_q|miles_q)");
}

Eigen::VectorXd MilModel::predict_instances(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Z = standardizer.apply(X);
  Eigen::VectorXd out(Z.rows());
  if (variant == Variant::MisvmQ) {
    const Eigen::VectorXd g = svm.decisions(Z);
    for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = svm.platt(g[i]);
    return out;
  }
  if (prototypes.rows() == 0) return Eigen::VectorXd::Constant(Z.rows(), sigmoid(bias));
  const Eigen::VectorXd z = (kernel_matrix(kernel, Z, prototypes) * weights).array() + bias;
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]);
  return out;
}

double MilModel::predict_instance(std::span<const double> x) const {
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  return predict_instances(Eigen::MatrixXd(row))[0];
}

double MilModel::predict_bag(const Bag& bag) const {
  if (bag.size() == 0) throw InvalidArgument("cannot score an empty bag");
  if (variant == Variant::MisvmQ) {
    const Eigen::VectorXd p = predict_instances(bag.instances);
    return quantile(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), q);
  }
  if (prototypes.rows() == 0) return sigmoid(bias);
  const Eigen::MatrixXd sim = kernel_matrix(kernel, standardizer.apply(bag.instances), prototypes);
  return sigmoid(weights.dot(quantile_embedding(sim, q)) + bias);
}

}  // namespace milq
