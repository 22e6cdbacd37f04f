#include <ostream>

#include "milq/pipeline.hpp"
#include "milq/rng.hpp"

namespace milq {

using nlohmann::json;

namespace {

double mask_percentage(const Mask& m, const Mask& lung) {
  const auto vm = m.values();
  const auto vl = lung.values();
  std::size_t inside = 0, set = 0;
  for (std::size_t i = 0; i < vm.size(); ++i) {
    if (!vl[i]) continue;
    ++inside;
    set += vm[i] != 0;
  }
  if (inside == 0) throw DataError("empty lung mask");
  return 100.0 * static_cast<double>(set) / static_cast<double>(inside);
}

std::vector<double> column(const DenseMapStats& s, const std::string& name) {
  std::vector<double> out;
  for (const auto& r : s.subjects) {
    if (name == "classifier") out.push_back(r.classifier_percentage);
    else if (name == "laa") out.push_back(r.laa_percentage);
    else if (name == "observer_a") out.push_back(r.observer_a_percentage);
    else if (name == "observer_b") out.push_back(r.observer_b_percentage);
    else out.push_back(100.0 * r.lesion_fraction);
  }
  return out;
}

}  // namespace

void compute_statistics(DenseMapStats& stats) {
  stats.correlations.clear();
  stats.comparisons.clear();
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"classifier", "lesion_fraction"}, {"classifier", "observer_a"}, {"classifier", "observer_b"},
      {"laa", "lesion_fraction"},        {"laa", "observer_a"},        {"laa", "observer_b"},
      {"observer_a", "observer_b"}};
  for (const auto& [method, reference] : pairs) {
    CorrelationRow row{method, reference, std::nullopt, "ok"};
    try {
      row.value = spearman(column(stats, method), column(stats, reference));
    } catch (const Error& e) {
      row.status = std::string("degenerate: ") + e.what();
    }
    stats.correlations.push_back(std::move(row));
  }
  const std::size_t n = stats.subjects.size();
  for (const std::string reference : {"lesion_fraction", "observer_a", "observer_b"}) {
    ComparisonRow cmp{"classifier", "laa", reference, std::nullopt, "ok"};
    const CorrelationRow* a = nullptr;
    const CorrelationRow* b = nullptr;
    for (const auto& r : stats.correlations) {
      if (r.reference != reference) continue;
      if (r.method == "classifier") a = &r;
      if (r.method == "laa") b = &r;
    }
    if (!a || !b || !a->value || !b->value) {
      cmp.status = "degenerate: a correlation is undefined";
    } else {
      try {
        cmp.value = fisher_rz(a->value->rho, n, b->value->rho, n);
      } catch (const Error& e) {
        cmp.status = std::string("degenerate: ") + e.what();
      }
    }
    stats.comparisons.push_back(std::move(cmp));
  }
}

std::vector<SubjectDenseResult> densemap_subject(const Phantom& ph, const CohortSubject& s, std::size_t index,
                                                 const PipelineConfig& c, const std::vector<ScoringModel>& models,
                                                 std::vector<LesionMap>* maps) {
  const auto& dm = c.densemap;
  const DenseMapPlan plan = plan_dense_map(ph.volume, s.id, dm.params);
  std::vector<PatchResponses> responses;
  if (!plan.centers.empty()) {
    responses = collect_patch_responses(ph.volume, plan.centers, dm.params.patch_size, dm.params.gauss, dm.params.stride);
  }
  ObserverSpec oa = dm.observer_a, ob = dm.observer_b;
  oa.seed = derive_seed(dm.observer_a.seed, index);
  ob.seed = derive_seed(dm.observer_b.seed, index);
  const Mask ma = observer_mask(ph.lesion_mask, oa);
  const Mask mb = observer_mask(ph.lesion_mask, ob);
  const Mask& lung = *ph.volume.mask();

  SubjectDenseResult base;
  base.id = s.id;
  base.lesion_fraction = s.lesion_fraction;
  base.laa_percentage = laa_percentage(ph.volume, dm.laa_threshold);
  base.observer_a_percentage = mask_percentage(ma, lung);
  base.observer_b_percentage = mask_percentage(mb, lung);
  base.observer_dice = dice(ma, mb);
  base.expected_dice = expected_observer_dice(ph.lesion_mask, oa, ob);
  base.points = plan.centers.size();
  base.skipped = plan.skipped;
  base.fallback = plan.selection.fallback;

  std::vector<SubjectDenseResult> out;
  for (const auto& sm : models) {
    const LesionMap map = score_dense_map(plan, responses, *sm.bins, model_scorer(*sm.model), dm.params.threshold);
    SubjectDenseResult r = base;
    r.classifier_percentage = lesion_percentage(map, dm.params.threshold);
    out.push_back(r);
    if (maps) maps->push_back(map);
  }
  return out;
}

json to_json(const DenseMapStats& s) {
  json subjects = json::array();
  for (const auto& r : s.subjects) {
    subjects.push_back({{"id", r.id},
                        {"lesion_fraction", r.lesion_fraction},
                        {"classifier_percentage", r.classifier_percentage},
                        {"laa_percentage", r.laa_percentage},
                        {"observer_a_percentage", r.observer_a_percentage},
                        {"observer_b_percentage", r.observer_b_percentage},
                        {"observer_dice", r.observer_dice},
                        {"expected_dice", r.expected_dice},
                        {"points", r.points},
                        {"skipped", r.skipped},
                        {"fallback", r.fallback}});
  }
  json corr = json::array();
  for (const auto& r : s.correlations) {
    corr.push_back({{"method", r.method},
                    {"reference", r.reference},
                    {"rho", r.value ? json(r.value->rho) : json(nullptr)},
                    {"p", r.value ? json(r.value->p) : json(nullptr)},
                    {"status", r.status}});
  }
  json cmp = json::array();
  for (const auto& r : s.comparisons) {
    cmp.push_back({{"first", r.first},
                   {"second", r.second},
                   {"reference", r.reference},
                   {"z", r.value ? json(r.value->z) : json(nullptr)},
                   {"p", r.value ? json(r.value->p) : json(nullptr)},
                   {"status", r.status}});
  }
  return {{"variant", s.variant}, {"subjects", subjects}, {"correlations", corr}, {"comparisons", cmp}};
}

void write_correlation_csv(std::ostream& os, const DenseMapStats& s) {
  const std::vector<std::string> methods{"classifier", "laa", "observer_a"};
  const std::vector<std::string> refs{"lesion_fraction", "observer_a", "observer_b"};
  os << "method";
  for (const auto& r : refs) os << ',' << r << "_rho," << r << "_p";
  os << '\n';
  char buf[64];
  for (const auto& m : methods) {
    os << m;
    for (const auto& ref : refs) {
      const CorrelationRow* row = nullptr;
      for (const auto& r : s.correlations) {
        if (r.method == m && r.reference == ref) row = &r;
      }
      if (row && row->value) {
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6g", row->value->rho, row->value->p);
        os << buf;
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
}

}  // namespace milq
