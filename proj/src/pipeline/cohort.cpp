#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "milq/pipeline.hpp"
#include "milq/rng.hpp"

namespace milq {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

PhantomSpec phantom_spec(const CohortConfig& c, std::size_t index) {
  PhantomSpec s;
  s.dims = c.dims;
  s.spacing = c.spacing;
  s.background_mean = c.background_mean;
  s.background_sd = c.background_sd;
  const auto& range = index % 2 == 0 ? c.healthy_lesions : c.diseased_lesions;
  s.lesion_count_min = range[0];
  s.lesion_count_max = range[1];
  s.lesion_radius_min_mm = c.lesion_radius_min_mm;
  s.lesion_radius_max_mm = c.lesion_radius_max_mm;
  s.lesion_mean = c.lesion_mean;
  s.lesion_sd = c.lesion_sd;
  s.smoothing_mm = c.smoothing_mm;
  s.seed = derive_seed(c.seed, index);
  return s;
}

double label_threshold(const std::vector<double>& fractions, const std::optional<double>& configured) {
  if (configured) return *configured;
  if (fractions.empty()) throw DataError("median of an empty cohort");
  std::vector<double> v = fractions;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::vector<std::string> severity_strata(const std::vector<double>& fractions, const std::vector<int>& labels) {
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fractions[a] < fractions[b]; });
  std::vector<std::string> out(fractions.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t quartile = 4 * r / order.size();
    out[order[r]] = std::string(labels[order[r]] > 0 ? "pos" : "neg") + "|q" + std::to_string(quartile);
  }
  return out;
}

Cohort generate_cohort(const CohortConfig& c, std::vector<Phantom>* phantoms) {
  Cohort cohort;
  std::vector<double> fractions;
  for (std::size_t i = 0; i < static_cast<std::size_t>(c.subjects); ++i) {
    const PhantomSpec spec = phantom_spec(c, i);
    Phantom ph = generate_phantom(spec);
    char id[16];
    std::snprintf(id, sizeof(id), "P%03zu", i + 1);
    cohort.subjects.push_back({id, spec.seed, ph.lesion_fraction, -1, {}});
    fractions.push_back(ph.lesion_fraction);
    if (phantoms) phantoms->push_back(std::move(ph));
  }
  cohort.threshold = label_threshold(fractions, c.label_threshold);
  std::vector<int> labels;
  for (auto& s : cohort.subjects) {
    s.label = s.lesion_fraction > cohort.threshold ? 1 : -1;
    labels.push_back(s.label);
  }
  const auto strata = severity_strata(fractions, labels);
  for (std::size_t i = 0; i < strata.size(); ++i) cohort.subjects[i].stratum = strata[i];
  return cohort;
}

void write_manifest(std::ostream& os, const Cohort& cohort) {
  os << "subject_id,seed,lesion_fraction,label,stratum\n";
  for (const auto& s : cohort.subjects) {
    os << s.id << ',' << s.seed << ',' << format_double(s.lesion_fraction) << ',' << s.label << ',' << s.stratum << '\n';
  }
}

Cohort read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "subject_id,seed,lesion_fraction,label,stratum") throw DataError("unexpected manifest header in " + path.string());
  Cohort cohort;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
    if (cols.size() != 5) throw DataError("malformed manifest row: " + line);
    CohortSubject s;
    s.id = cols[0];
    try {
      s.seed = std::stoull(cols[1]);
      s.lesion_fraction = std::stod(cols[2]);
      s.label = std::stoi(cols[3]);
    } catch (const std::exception&) {
      throw DataError("malformed manifest row: " + line);
    }
    s.stratum = cols[4];
    cohort.subjects.push_back(std::move(s));
  }
  if (cohort.subjects.empty()) throw DataError("manifest " + path.string() + " lists no subjects");
  return cohort;
}

std::vector<Index3> subject_centers(const Volume& v, const FeatureConfig& f, std::uint64_t cohort_seed,
                                    std::size_t index) {
  return sample_patch_centers(v, f.patches, f.patch_size, derive_seed(derive_seed(cohort_seed, index), 1));
}

double patch_lesion_fraction(const Mask& lesions, const Index3& c, int size) {
  const int h = size / 2;
  std::size_t n = 0;
  for (int z = c[2] - h; z < c[2] - h + size; ++z) {
    for (int y = c[1] - h; y < c[1] - h + size; ++y) {
      for (int x = c[0] - h; x < c[0] - h + size; ++x) n += lesions.at(x, y, z) != 0;
    }
  }
  return static_cast<double>(n) / (static_cast<double>(size) * size * size);
}

SubjectResponses prepare_subject(const Phantom& ph, const CohortSubject& s, const FeatureConfig& f,
                                 std::uint64_t cohort_seed, std::size_t index) {
  SubjectResponses out;
  out.id = s.id;
  out.label = s.label;
  const auto centers = subject_centers(ph.volume, f, cohort_seed, index);
  for (const auto& c : centers) {
    out.instance_labels.push_back(patch_lesion_fraction(ph.lesion_mask, c, f.patch_size) > f.instance_lesion_fraction ? 1 : -1);
  }
  if (f.schema != Schema::Gauss) {
    const auto nf = static_cast<Eigen::Index>(feature_dim(Schema::Cooc, f.texture.cooc.distances.size()));
    out.fixed.resize(static_cast<Eigen::Index>(centers.size()), nf);
    const int h = f.patch_size / 2;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Patch p = extract_patch(ph.volume, {centers[i][0] - h, centers[i][1] - h, centers[i][2] - h}, f.patch_size, s.id);
      const FeatureVector fv = cooc_features(p, f.texture.cooc);
      for (Eigen::Index j = 0; j < nf; ++j) out.fixed(static_cast<Eigen::Index>(i), j) = fv.values[static_cast<std::size_t>(j)];
    }
  }
  if (f.schema != Schema::Cooc) {
    out.patches = collect_patch_responses(ph.volume, centers, f.patch_size, f.texture.gauss, f.stride);
  }
  return out;
}

CvPlan cohort_plan(const Cohort& cohort, int folds, std::uint64_t seed) {
  std::vector<std::string> ids, strata;
  for (const auto& s : cohort.subjects) {
    ids.push_back(s.id);
    strata.push_back(s.stratum);
  }
  return make_cv_plan(ids, strata, folds, seed);
}

NestedCvOptions cv_options(const PipelineConfig& c) {
  NestedCvOptions o;
  o.variants = c.variants;
  o.grid = c.grid;
  o.inner_folds = c.inner_folds;
  o.train = c.train;
  o.workers = c.workers;
  return o;
}

EvaluationReport make_report(const PipelineConfig& c, const NestedCvOutput& out) {
  EvaluationReport r;
  r.schema = to_string(c.features.schema);
  r.cohort_seed = c.cohort.seed;
  r.cv_seed = c.cv_seed;
  r.subjects = static_cast<std::size_t>(c.cohort.subjects);
  r.outer_folds = c.outer_folds;
  r.inner_folds = c.inner_folds;
  r.grid = c.grid;
  r.results = out.results;
  r.hygiene_checks = out.hygiene.checks;
  r.hygiene_violations = out.hygiene.violations;
  return r;
}

}  // namespace milq
