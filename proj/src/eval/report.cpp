#include "milq/report.hpp"

namespace milq {

using nlohmann::json;

namespace {

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

Summary summary_from(const json& j) { return {j.at("mean").get<double>(), j.at("sd").get<double>(), j.at("n").get<std::size_t>()}; }

json point_json(const GridPoint& p) { return {{"kernel", kernel_to_json(p.kernel)}, {"C", p.C}, {"q", p.q}}; }

GridPoint point_from(const json& j) {
  return {kernel_from_json(j.at("kernel")), j.at("C").get<double>(), j.at("q").get<double>()};
}

json fold_json(const FoldResult& f) {
  json cells = json::array();
  for (const auto& c : f.cells) {
    json cj = point_json(c.params);
    cj["auc"] = c.auc;
    cj["separability"] = c.separability;
    cj["failed"] = c.failed;
    if (c.failed) cj["error"] = c.error;
    cells.push_back(std::move(cj));
  }
  return {{"fold", f.fold},
          {"chosen", point_json(f.chosen)},
          {"auc", f.auc},
          {"separability", f.separability},
          {"instance_auc", f.instance_auc ? json(*f.instance_auc) : json(nullptr)},
          {"converged", f.converged},
          {"failed_cells", f.failed_cells},
          {"test_subjects", f.test_subjects},
          {"bag_posteriors", f.bag_posteriors},
          {"bag_labels", f.bag_labels},
          {"cells", std::move(cells)}};
}

FoldResult fold_from(const json& j) {
  FoldResult f;
  f.fold = j.at("fold").get<int>();
  f.chosen = point_from(j.at("chosen"));
  f.auc = j.at("auc").get<double>();
  f.separability = j.at("separability").get<double>();
  if (!j.at("instance_auc").is_null()) f.instance_auc = j.at("instance_auc").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.failed_cells = j.at("failed_cells").get<std::size_t>();
  f.test_subjects = j.at("test_subjects").get<std::vector<std::string>>();
  f.bag_posteriors = j.at("bag_posteriors").get<std::vector<double>>();
  f.bag_labels = j.at("bag_labels").get<std::vector<int>>();
  for (const auto& cj : j.at("cells")) {
    CellScore c;
    c.params = point_from(cj);
    c.auc = cj.at("auc").get<double>();
    c.separability = cj.at("separability").get<double>();
    c.failed = cj.at("failed").get<bool>();
    if (c.failed) c.error = cj.at("error").get<std::string>();
    f.cells.push_back(std::move(c));
  }
  return f;
}

}  // namespace

json kernel_to_json(const Kernel& k) {
  if (k.kind == Kernel::Kind::Polynomial) return {{"kind", "polynomial"}, {"degree", k.degree}};
  return {{"kind", "rbf"}, {"sigma", k.sigma}};
}

Kernel kernel_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "polynomial") return Kernel::polynomial(j.at("degree").get<int>());
  if (kind == "rbf") return Kernel::rbf(j.at("sigma").get<double>());
  throw InvalidArgument("unknown kernel kind '" + kind + "'");
}

json to_json(const EvaluationReport& r) {
  json results = json::array();
  for (const auto& res : r.results) {
    json folds = json::array();
    for (const auto& f : res.folds) folds.push_back(fold_json(f));
    results.push_back({{"variant", to_string(res.variant)},
                       {"auc", summary_json(res.auc)},
                       {"separability", summary_json(res.separability)},
                       {"instance_auc", res.instance_auc ? summary_json(*res.instance_auc) : json(nullptr)},
                       {"folds", std::move(folds)}});
  }
  return {{"version", r.version},
          {"schema", r.schema},
          {"cohort_seed", r.cohort_seed},
          {"cv_seed", r.cv_seed},
          {"subjects", r.subjects},
          {"outer_folds", r.outer_folds},
          {"inner_folds", r.inner_folds},
          {"grid", {{"degrees", r.grid.degrees}, {"sigmas", r.grid.sigmas}, {"C", r.grid.Cs}, {"q", r.grid.qs}}},
          {"results", std::move(results)},
          {"hygiene", {{"checks", r.hygiene_checks}, {"violations", r.hygiene_violations}}}};
}

EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  r.version = j.at("version").get<int>();
  if (r.version != 1) throw DataError("unsupported report version " + std::to_string(r.version));
  r.schema = j.at("schema").get<std::string>();
  r.cohort_seed = j.at("cohort_seed").get<std::uint64_t>();
  r.cv_seed = j.at("cv_seed").get<std::uint64_t>();
  r.subjects = j.at("subjects").get<std::size_t>();
  r.outer_folds = j.at("outer_folds").get<int>();
  r.inner_folds = j.at("inner_folds").get<int>();
  const auto& g = j.at("grid");
  r.grid.degrees = g.at("degrees").get<std::vector<int>>();
  r.grid.sigmas = g.at("sigmas").get<std::vector<double>>();
  r.grid.Cs = g.at("C").get<std::vector<double>>();
  r.grid.qs = g.at("q").get<std::vector<double>>();
  for (const auto& rj : j.at("results")) {
    CvResult res;
    res.variant = parse_variant(rj.at("variant").get<std::string>());
    res.auc = summary_from(rj.at("auc"));
    res.separability = summary_from(rj.at("separability"));
    if (!rj.at("instance_auc").is_null()) res.instance_auc = summary_from(rj.at("instance_auc"));
    for (const auto& fj : rj.at("folds")) res.folds.push_back(fold_from(fj));
    r.results.push_back(std::move(res));
  }
  r.hygiene_checks = j.at("hygiene").at("checks").get<std::size_t>();
  r.hygiene_violations = j.at("hygiene").at("violations").get<std::vector<std::string>>();
  return r;
}

std::string dump_report(const EvaluationReport& r) { return to_json(r).dump(2) + "\n"; }

}  // namespace milq
