#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "milq/svm.hpp"

namespace milq {

/// One subject: a labelled set of instance feature vectors (one row per instance).
struct Bag {
  std::string id;
  int label = -1;  // +1 or -1
  Eigen::MatrixXd instances;
  std::vector<int> instance_labels;  // known ground truth (phantoms), may be empty

  Eigen::Index size() const { return instances.rows(); }
};

struct MilDataset {
  std::vector<Bag> bags;
  std::string schema_id;

  Eigen::Index dim() const { return bags.empty() ? 0 : bags.front().instances.cols(); }
  Eigen::Index num_instances() const;
  std::vector<std::string> ids() const;
  /// Throws DataError unless there is a positive and a negative bag, every bag is
  /// non-empty and all instances share one dimension.
  void validate_training() const;
};

enum class Variant { MisvmQ, MilesQ };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Index of the q-quantile in an ascending sort of n values: ceil(q n) - 1.
std::size_t quantile_index(std::size_t n, double q);

/// The q-quantile of `values` (q = 1 gives the maximum).
double quantile(std::span<const double> values, double q);

/// Least number of positive instances a positive bag of size n needs under the q-quantile rule.
std::size_t required_positives(std::size_t n, double q);

/// Per-feature z-scoring fitted on training instances (zero spread maps to unit scale).
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<std::string> fit_subjects;

  static Standardizer fit(const Eigen::MatrixXd& X, std::vector<std::string> fit_subjects = {});
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct TrainOptions {
  int max_iters = 20;  // miSVM-Q relabelling rounds
  SmoOptions smo;
  L1Options l1;
};

struct MilModel {
  Variant variant = Variant::MisvmQ;
  double q = 1.0;
  Kernel kernel;
  double C = 1.0;
  Standardizer standardizer;

  SvmModel svm;  // miSVM-Q

  // MILES-Q: selected prototypes (standardised rows) with their weights.
  Eigen::MatrixXd prototypes;
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::vector<int> prototype_index;  // rows of the stacked training instances

  bool converged = true;
  int iterations = 0;
  std::vector<int> training_labels;  // final miSVM-Q instance labels, stacked bag by bag

  double predict_instance(std::span<const double> x) const;
  /// Instance posteriors of every row of raw (unstandardised) features.
  Eigen::VectorXd predict_instances(const Eigen::MatrixXd& X) const;
  double predict_bag(const Bag& bag) const;
};

/// Caches the standardised training instances and kernel matrices so that many
/// (kernel, C, q) settings can be trained on the same bags cheaply.
class MilTrainer {
 public:
  explicit MilTrainer(const MilDataset& train);

  /// Training is safe to call from several threads once every kernel it uses has been precomputed.
  MilModel train(Variant variant, const Kernel& kernel, double C, double q, const TrainOptions& opts = {});
  void precompute(const std::vector<Kernel>& kernels);
  const Standardizer& standardizer() const { return standardizer_; }
  const Eigen::MatrixXd& instances() const { return X_; }

 private:
  const Eigen::MatrixXd& gram(const Kernel& k);
  MilModel train_misvm(const Kernel& k, double C, double q, const TrainOptions& opts);
  MilModel train_miles(const Kernel& k, double C, double q, const TrainOptions& opts);

  const MilDataset& data_;
  Standardizer standardizer_;
  Eigen::MatrixXd X_;
  std::vector<Eigen::Index> offsets_;  // first row of each bag in X_, plus the total
  Eigen::MatrixXd dots_;
  Eigen::VectorXd norms_;
  std::map<std::string, Eigen::MatrixXd> grams_;
};

MilModel misvmq_train(const MilDataset& data, const Kernel& k, double C, double q, const TrainOptions& opts = {});
MilModel milesq_train(const MilDataset& data, const Kernel& k, double C, double q, const TrainOptions& opts = {});

/// Column-wise q-quantile of a bag-by-prototype similarity block.
Eigen::VectorXd quantile_embedding(const Eigen::MatrixXd& similarities, double q);

/// Mean instance posterior of positive bags minus that of negative bags.
double separability(const std::vector<std::vector<double>>& positive_bags,
                    const std::vector<std::vector<double>>& negative_bags);
double separability(const MilModel& m, const MilDataset& data);

}  // namespace milq
