#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "milq/mil.hpp"
#include "milq/texture.hpp"
#include "milq/volume.hpp"

namespace milq {

// ---------------------------------------------------------------------------
// Metrics and statistics

/// Tie-aware (midrank) Mann-Whitney AUC; labels are +1/-1.
double bag_auc(std::span<const double> scores, std::span<const int> labels);

/// Average ranks starting at 1.
std::vector<double> midranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  double rho = 0.0;
  double p = 1.0;
  bool exact = false;  // p from a full permutation enumeration
};

/// Spearman rank correlation. The two-sided p-value uses the t approximation,
/// or an exact permutation distribution when n < permutation_below.
Correlation spearman(std::span<const double> x, std::span<const double> y, std::size_t permutation_below = 10);

struct FisherTest {
  double z = 0.0;
  double p = 1.0;
};

/// Compares two independent correlations through atanh.
FisherTest fisher_rz(double r1, std::size_t n1, double r2, std::size_t n2);

/// 2|a & b| / (|a| + |b|); 1 when both are empty.
double dice(const Mask& a, const Mask& b);

/// Percentage of mask voxels with intensity strictly below the threshold.
double laa_percentage(const Volume& v, double threshold_hu = -950.0);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for one value
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvPlan {
  int folds = 4;
  std::uint64_t seed = 0;
  std::vector<std::string> subjects;
  std::vector<std::string> strata;
  std::vector<int> fold;  // fold of each subject

  std::vector<std::size_t> train_indices(int f) const;
  std::vector<std::size_t> test_indices(int f) const;
};

/// Stratified assignment: subjects are grouped by stratum key (in sorted key
/// order), shuffled within each stratum and dealt round-robin over the folds.
/// The deal continues across strata, so tiny strata merge gracefully.
CvPlan make_cv_plan(std::vector<std::string> subjects, std::vector<std::string> strata, int folds,
                    std::uint64_t seed);

/// Sub-plan over the given members of `plan` with its own fold count and seed.
CvPlan sub_plan(const CvPlan& plan, const std::vector<std::size_t>& members, int folds, std::uint64_t seed);

struct GridPoint {
  Kernel kernel;
  double C = 1.0;
  double q = 1.0;
};

struct ParamGrid {
  std::vector<int> degrees{1, 2};
  std::vector<double> sigmas{8, 10, 12, 14, 16, 20};
  std::vector<double> Cs{0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1};
  std::vector<double> qs{0.25, 0.5, 0.75, 0.9, 1};

  /// Polynomial kernels in degree order, then rbf kernels in sigma order.
  std::vector<Kernel> kernels() const;
  /// Kernel-major, then C, then q.
  std::vector<GridPoint> points() const;
  std::size_t size() const { return kernels().size() * Cs.size() * qs.size(); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Training-data hygiene

/// Records every check that a fitted artifact did not see evaluation subjects.
struct HygieneLog {
  std::size_t checks = 0;
  std::vector<std::string> violations;

  void check(const std::string& what, const std::vector<std::string>& fit_subjects,
             const std::vector<std::string>& eval_subjects);
};

// ---------------------------------------------------------------------------
// Bag sources

struct FoldData {
  MilDataset train;
  MilDataset eval;
  std::shared_ptr<const BinningScheme> bins;  // null when features need no fit
};

/// Produces training and evaluation bags for a split, fitting any feature
/// transforms on the training subjects only.
class BagSource {
 public:
  virtual ~BagSource() = default;
  virtual std::vector<std::string> subjects() const = 0;
  virtual std::vector<int> labels() const = 0;
  virtual FoldData prepare(const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval) const = 0;
};

/// Bags whose features are already final.
class FixedBagSource : public BagSource {
 public:
  explicit FixedBagSource(MilDataset data) : data_(std::move(data)) {}
  std::vector<std::string> subjects() const override { return data_.ids(); }
  std::vector<int> labels() const override;
  FoldData prepare(const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval) const override;

 private:
  MilDataset data_;
};

/// One subject's raw filter responses, histogrammed with fold-specific bins.
/// Rows of `fixed` (features needing no fit, e.g. co-occurrence) come first in
/// each instance; either part may be empty.
struct SubjectResponses {
  std::string id;
  int label = -1;
  Eigen::MatrixXd fixed;
  std::vector<PatchResponses> patches;
  std::vector<int> instance_labels;  // may be empty

  std::size_t num_instances() const { return patches.empty() ? static_cast<std::size_t>(fixed.rows()) : patches.size(); }
};

class ResponseBagSource : public BagSource {
 public:
  /// `max_bin_samples` caps the pooled values per channel used to fit bins.
  ResponseBagSource(std::shared_ptr<const std::vector<SubjectResponses>> subjects, std::size_t max_bin_samples = 200'000);
  std::vector<std::string> subjects() const override;
  std::vector<int> labels() const override;
  FoldData prepare(const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval) const override;

  /// Bins fitted on the pooled responses of the listed subjects.
  BinningScheme fit_bins(const std::vector<std::size_t>& members, const std::string& provenance) const;
  /// `bins` may be null when the source has no filter responses.
  Bag make_bag(std::size_t subject, const BinningScheme* bins) const;
  bool has_responses() const;

 private:
  std::shared_ptr<const std::vector<SubjectResponses>> data_;
  std::size_t max_bin_samples_;
};

// ---------------------------------------------------------------------------
// Nested cross-validation

struct NestedCvOptions {
  std::vector<Variant> variants{Variant::MisvmQ};
  ParamGrid grid;
  int inner_folds = 3;
  TrainOptions train;
  double tie_tolerance = 1e-6;
  int workers = 1;
};

struct CellScore {
  GridPoint params;
  double auc = 0.0;
  double separability = 0.0;
  bool failed = false;
  std::string error;
};

struct FoldResult {
  int fold = 0;
  GridPoint chosen;
  double auc = 0.0;
  double separability = 0.0;
  std::optional<double> instance_auc;
  bool converged = true;
  std::size_t failed_cells = 0;
  std::vector<std::string> test_subjects;
  std::vector<double> bag_posteriors;
  std::vector<int> bag_labels;
  std::vector<CellScore> cells;
};

struct CvResult {
  Variant variant = Variant::MisvmQ;
  std::vector<FoldResult> folds;
  Summary auc;
  Summary separability;
  std::optional<Summary> instance_auc;
};

/// Final per-fold models, keyed by variant, for downstream use (dense maps).
struct FoldModel {
  Variant variant = Variant::MisvmQ;
  int fold = 0;
  MilModel model;
  std::shared_ptr<const BinningScheme> bins;
  std::vector<std::string> test_subjects;
};

struct NestedCvOutput {
  std::vector<CvResult> results;  // one per requested variant, in request order
  std::vector<FoldModel> models;
  HygieneLog hygiene;
};

/// Lexicographic selection: mean AUC (ties within tolerance), larger S, smaller C, smaller q.
std::size_t select_cell(const std::vector<CellScore>& cells, double tie_tolerance);

NestedCvOutput nested_cv(const BagSource& source, const CvPlan& plan, const NestedCvOptions& opts);

}  // namespace milq
