#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "milq/densemap.hpp"
#include "milq/eval.hpp"
#include "milq/report.hpp"

namespace milq {

// ---------------------------------------------------------------------------
// Configuration

struct CohortConfig {
  int subjects = 24;
  std::uint64_t seed = 2024;
  Dims dims{96, 96, 96};
  Spacing spacing{};
  std::array<int, 2> healthy_lesions{0, 1};  // lesion count range of odd-numbered subjects
  std::array<int, 2> diseased_lesions{4, 10};
  double lesion_radius_min_mm = 5.0;
  double lesion_radius_max_mm = 10.0;
  double background_mean = -850.0;
  double background_sd = 60.0;
  double lesion_mean = -990.0;
  double lesion_sd = 20.0;
  double smoothing_mm = 1.0;
  std::optional<double> label_threshold;  // on lesion_fraction; empty = cohort median
};

struct FeatureConfig {
  Schema schema = Schema::Gauss;
  int patches = 50;
  int patch_size = 41;
  int stride = 3;  // response sub-lattice used for histograms
  std::size_t bin_samples = 200'000;
  double instance_lesion_fraction = 0.0;  // a patch is a lesion instance above this lesion fraction
  TextureConfig texture;
};

struct DenseMapConfig {
  DenseMapParams params;
  double laa_threshold = -950.0;
  ObserverSpec observer_a{1, 0.9, 11};
  ObserverSpec observer_b{-1, 0.8, 12};
};

struct PipelineConfig {
  std::string data_dir = "cohort";
  std::string output_dir = "out";
  CohortConfig cohort;
  FeatureConfig features;
  std::vector<Variant> variants{Variant::MisvmQ, Variant::MilesQ};
  TrainOptions train;
  ParamGrid grid;
  int outer_folds = 4;
  int inner_folds = 3;
  std::uint64_t cv_seed = 7;
  DenseMapConfig densemap;
  int workers = 1;

  void validate() const;
};

/// Strict parse: unknown keys and wrong types raise InvalidArgument.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Cohort

struct CohortSubject {
  std::string id;
  std::uint64_t seed = 0;
  double lesion_fraction = 0.0;
  int label = -1;
  std::string stratum;  // class, then lesion-fraction quartile
};

struct Cohort {
  std::vector<CohortSubject> subjects;
  double threshold = 0.0;
};

PhantomSpec phantom_spec(const CohortConfig& c, std::size_t index);

/// Weak labels: +1 when lesion_fraction exceeds the threshold.
double label_threshold(const std::vector<double>& fractions, const std::optional<double>& configured);
std::vector<std::string> severity_strata(const std::vector<double>& fractions, const std::vector<int>& labels);

/// Generates every phantom; returns the manifest and, if requested, the phantoms.
Cohort generate_cohort(const CohortConfig& c, std::vector<Phantom>* phantoms = nullptr);

void write_manifest(std::ostream& os, const Cohort& cohort);
Cohort read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature preparation

/// Training patch centres of one subject.
std::vector<Index3> subject_centers(const Volume& v, const FeatureConfig& f, std::uint64_t cohort_seed,
                                    std::size_t index);

/// Fraction of lesion voxels inside a patch.
double patch_lesion_fraction(const Mask& lesions, const Index3& center, int size);

/// Responses (and co-occurrence features, when the schema asks for them) of one subject.
SubjectResponses prepare_subject(const Phantom& ph, const CohortSubject& s, const FeatureConfig& f,
                                 std::uint64_t cohort_seed, std::size_t index);

CvPlan cohort_plan(const Cohort& cohort, int folds, std::uint64_t seed);

NestedCvOptions cv_options(const PipelineConfig& c);

EvaluationReport make_report(const PipelineConfig& c, const NestedCvOutput& out);

// ---------------------------------------------------------------------------
// Dense-map statistics

struct CorrelationRow {
  std::string method;
  std::string reference;
  std::optional<Correlation> value;  // empty when undefined
  std::string status;                // "ok" or the reason it is undefined
};

struct ComparisonRow {
  std::string first;
  std::string second;
  std::string reference;
  std::optional<FisherTest> value;
  std::string status;
};

struct SubjectDenseResult {
  std::string id;
  double lesion_fraction = 0.0;
  double classifier_percentage = 0.0;
  double laa_percentage = 0.0;
  double observer_a_percentage = 0.0;
  double observer_b_percentage = 0.0;
  double observer_dice = 0.0;
  double expected_dice = 0.0;
  std::size_t points = 0;
  std::size_t skipped = 0;
  bool fallback = false;
};

struct DenseMapStats {
  std::string variant;
  std::vector<SubjectDenseResult> subjects;
  std::vector<CorrelationRow> correlations;
  std::vector<ComparisonRow> comparisons;
};

/// Correlation table (classifier / LAA / observers vs references) and Fisher comparisons.
void compute_statistics(DenseMapStats& stats);

/// A fitted model together with the bins its features were built with.
struct ScoringModel {
  const MilModel* model = nullptr;
  const BinningScheme* bins = nullptr;
};

/// Dense maps of one subject under each model (filter responses are computed once),
/// plus the LAA baseline and the synthetic observers.
std::vector<SubjectDenseResult> densemap_subject(const Phantom& ph, const CohortSubject& s, std::size_t index,
                                                 const PipelineConfig& c, const std::vector<ScoringModel>& models,
                                                 std::vector<LesionMap>* maps = nullptr);

nlohmann::json to_json(const DenseMapStats& s);
void write_correlation_csv(std::ostream& os, const DenseMapStats& s);

// ---------------------------------------------------------------------------
// Model files: JSON header plus a little-endian binary blob of the matrices.

void save_model(const std::filesystem::path& json_path, const MilModel& m, const BinningScheme* bins,
                const std::vector<std::string>& test_subjects, int fold);

struct LoadedModel {
  MilModel model;
  std::optional<BinningScheme> bins;
  std::vector<std::string> test_subjects;
  int fold = 0;
};

LoadedModel load_model(const std::filesystem::path& json_path);

// ---------------------------------------------------------------------------
// SVG plots

std::string roc_svg(const std::vector<double>& scores, const std::vector<int>& labels, const std::string& title);

/// Scatter of y against x on a log10 x axis (non-positive x values are clamped to the smallest positive one).
std::string scatter_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                        const std::string& x_label, const std::string& y_label);

// ---------------------------------------------------------------------------
// Commands

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<Schema> schema;
  std::optional<Variant> variant;
  std::filesystem::path model_dir;  // densemap: defaults to <output_dir>/models
};

/// Loads the config and applies command-line overrides.
PipelineConfig resolve_config(const CommandOptions& o);

void cmd_phantom_cohort(const PipelineConfig& c, std::ostream& log);
void cmd_extract(const PipelineConfig& c, std::ostream& log);
void cmd_evaluate(const PipelineConfig& c, std::ostream& log);
void cmd_densemap(const PipelineConfig& c, const std::filesystem::path& model_dir, std::ostream& log);
void cmd_report(const PipelineConfig& c, std::ostream& out);

/// Maps library exceptions to process exit codes (1 usage, 2 data, 3 numerical).
int exit_code_for(const std::exception& e);

}  // namespace milq
