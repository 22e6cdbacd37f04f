#include <fstream>
#include <map>
#include <ostream>

#include "milq/pipeline.hpp"

namespace milq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

fs::path ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create directory " + p.string() + ": " + ec.message());
  return p;
}

Cohort load_cohort(const PipelineConfig& c) {
  const fs::path manifest = fs::path(c.data_dir) / "manifest.csv";
  if (!fs::exists(manifest)) throw DataError("no cohort at " + c.data_dir + " (run phantom-cohort first)");
  return read_manifest(manifest);
}

Phantom load_subject(const PipelineConfig& c, const CohortSubject& s) {
  const fs::path dir(c.data_dir);
  Phantom ph;
  ph.volume = load_volume(dir / (s.id + ".hdr"));
  if (!ph.volume.mask()) throw DataError("subject " + s.id + " has no lung mask");
  ph.lesion_mask = load_mask(dir / (s.id + "_lesion.hdr"));
  ph.lesion_fraction = s.lesion_fraction;
  return ph;
}

std::vector<SubjectResponses> prepare_all(const PipelineConfig& c, const Cohort& cohort, std::ostream& log) {
  std::vector<SubjectResponses> out;
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const Phantom ph = load_subject(c, cohort.subjects[i]);
    out.push_back(prepare_subject(ph, cohort.subjects[i], c.features, c.cohort.seed, i));
    log << "features " << cohort.subjects[i].id << '\n';
  }
  return out;
}

std::string fold_name(Variant v, int fold) { return to_string(v) + "_fold" + std::to_string(fold); }

}  // namespace

PipelineConfig resolve_config(const CommandOptions& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) c.cohort.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.schema) c.features.schema = *o.schema;
  if (o.variant) c.variants = {*o.variant};
  c.validate();
  return c;
}

void cmd_phantom_cohort(const PipelineConfig& c, std::ostream& log) {
  const fs::path dir = ensure_dir(c.data_dir);
  std::vector<Phantom> phantoms;
  const Cohort cohort = generate_cohort(c.cohort, &phantoms);
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    const auto& id = cohort.subjects[i].id;
    save_volume(phantoms[i].volume, dir / (id + ".hdr"));
    save_mask(phantoms[i].lesion_mask, dir / (id + "_lesion.hdr"));
    log << "phantom " << id << " lesions=" << phantoms[i].lesions.size() << '\n';
  }
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest in " + dir.string());
  write_manifest(manifest, cohort);
}

void cmd_extract(const PipelineConfig& c, std::ostream& log) {
  const Cohort cohort = load_cohort(c);
  const fs::path dir = ensure_dir(fs::path(c.output_dir) / "features");
  auto data = std::make_shared<std::vector<SubjectResponses>>(prepare_all(c, cohort, log));
  const ResponseBagSource source(data, c.features.bin_samples);
  std::optional<BinningScheme> bins;
  if (source.has_responses()) {
    std::vector<std::size_t> all(data->size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    bins = source.fit_bins(all, "exploratory whole-cohort fit; evaluation refits bins inside each training fold");
    json edges = json::array();
    for (const auto& e : bins->edges) edges.push_back(std::vector<double>(e.begin() + 1, e.end() - 1));
    write_text(dir / "bins_exploratory.json",
               json{{"provenance", bins->provenance}, {"fit_subjects", bins->fit_subjects}, {"edges", edges}}.dump(2) + "\n");
  }
  std::ofstream instances(dir / "instances.csv", std::ios::binary);
  instances << "subject_id,patch_index,lesion_label\n";
  for (std::size_t i = 0; i < data->size(); ++i) {
    const Bag bag = source.make_bag(i, bins ? &*bins : nullptr);
    std::ofstream out(dir / (bag.id + ".csv"), std::ios::binary);
    if (!out) throw DataError("cannot write features for " + bag.id);
    for (Eigen::Index col = 0; col < bag.instances.cols(); ++col) out << (col ? "," : "") << 'f' << col;
    out << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < bag.instances.rows(); ++r) {
      for (Eigen::Index col = 0; col < bag.instances.cols(); ++col) {
        std::snprintf(buf, sizeof(buf), "%.17g", bag.instances(r, col));
        out << (col ? "," : "") << buf;
      }
      out << '\n';
      instances << bag.id << ',' << r << ',' << bag.instance_labels[static_cast<std::size_t>(r)] << '\n';
    }
  }
  log << "extracted " << data->size() << " subjects, schema " << to_string(c.features.schema) << '\n';
}

void cmd_evaluate(const PipelineConfig& c, std::ostream& log) {
  const Cohort cohort = load_cohort(c);
  const fs::path out_dir = ensure_dir(c.output_dir);
  const fs::path model_dir = ensure_dir(out_dir / "models");
  const fs::path plot_dir = ensure_dir(out_dir / "plots");
  auto data = std::make_shared<std::vector<SubjectResponses>>(prepare_all(c, cohort, log));
  const ResponseBagSource source(data, c.features.bin_samples);
  const CvPlan plan = cohort_plan(cohort, c.outer_folds, c.cv_seed);
  const NestedCvOutput out = nested_cv(source, plan, cv_options(c));
  const EvaluationReport report = make_report(c, out);
  write_text(out_dir / "report.json", dump_report(report));

  std::ofstream folds(out_dir / "folds.csv", std::ios::binary);
  folds << "variant,fold,kernel,C,q,auc,separability,instance_auc,converged,failed_cells\n";
  for (const auto& res : report.results) {
    for (const auto& f : res.folds) {
      folds << to_string(res.variant) << ',' << f.fold << ',' << f.chosen.kernel.label() << ',' << f.chosen.C << ','
            << f.chosen.q << ',' << f.auc << ',' << f.separability << ',';
      if (f.instance_auc) folds << *f.instance_auc;
      folds << ',' << (f.converged ? 1 : 0) << ',' << f.failed_cells << '\n';
      try {
        write_text(plot_dir / ("roc_" + fold_name(res.variant, f.fold) + ".svg"),
                   roc_svg(f.bag_posteriors, f.bag_labels, "ROC " + to_string(res.variant) + " fold " + std::to_string(f.fold)));
      } catch (const DataError&) {
        log << "skipping ROC for single-class fold " << f.fold << '\n';
      }
    }
    log << to_string(res.variant) << " bag AUC " << res.auc.mean << " +- " << res.auc.sd << ", S "
        << res.separability.mean << '\n';
  }

  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < data->size(); ++i) index_of[(*data)[i].id] = i;
  std::ofstream post(out_dir / "instance_posteriors.csv", std::ios::binary);
  post << "variant,subject_id,patch_index,posterior,hard_label\n";
  for (const auto& fm : out.models) {
    save_model(model_dir / (fold_name(fm.variant, fm.fold) + ".json"), fm.model, fm.bins.get(), fm.test_subjects, fm.fold);
    for (const auto& id : fm.test_subjects) {
      const Bag bag = source.make_bag(index_of.at(id), fm.bins.get());
      const Eigen::VectorXd p = fm.model.predict_instances(bag.instances);
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        post << to_string(fm.variant) << ',' << id << ',' << k << ',' << p[k] << ',' << (p[k] >= 0.5 ? 1 : 0) << '\n';
      }
    }
  }
  log << "hygiene checks " << out.hygiene.checks << ", violations " << out.hygiene.violations.size() << '\n';
}

void cmd_densemap(const PipelineConfig& c, const fs::path& model_dir_opt, std::ostream& log) {
  const Cohort cohort = load_cohort(c);
  const fs::path model_dir = model_dir_opt.empty() ? fs::path(c.output_dir) / "models" : model_dir_opt;
  if (!fs::is_directory(model_dir)) throw DataError("no model directory " + model_dir.string() + " (run evaluate first)");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(model_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LoadedModel> models;
  for (const auto& f : files) models.push_back(load_model(f));
  if (models.empty()) throw DataError("no models in " + model_dir.string());

  std::vector<Variant> variants;
  for (const auto& m : models) {
    if (std::find(variants.begin(), variants.end(), m.model.variant) == variants.end()) variants.push_back(m.model.variant);
  }
  const fs::path dir = ensure_dir(fs::path(c.output_dir) / "densemap");
  const fs::path pgm_dir = ensure_dir(dir / "overlays");
  std::vector<DenseMapStats> stats(variants.size());
  std::vector<std::vector<LesionMap>> all_maps(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) stats[v].variant = to_string(variants[v]);

  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& s = cohort.subjects[i];
    std::vector<ScoringModel> scoring;
    for (Variant var : variants) {
      const LoadedModel* chosen = nullptr;
      for (const auto& m : models) {
        if (m.model.variant == var &&
            std::find(m.test_subjects.begin(), m.test_subjects.end(), s.id) != m.test_subjects.end()) {
          chosen = &m;
        }
      }
      if (!chosen) throw DataError("no held-out model covers subject " + s.id);
      if (!chosen->bins) throw DataError("dense maps need a model with filter-response bins");
      scoring.push_back({&chosen->model, &*chosen->bins});
    }
    const Phantom ph = load_subject(c, s);
    std::vector<LesionMap> maps;
    const auto results = densemap_subject(ph, s, i, c, scoring, &maps);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      stats[v].subjects.push_back(results[v]);
      for (int z : maps[v].slices) {
        std::ofstream pgm(pgm_dir / (stats[v].variant + "_" + s.id + "_z" + std::to_string(z) + ".pgm"), std::ios::binary);
        write_slice_pgm(pgm, maps[v], z, ph.volume.dims());
      }
      all_maps[v].push_back(std::move(maps[v]));
    }
    log << "densemap " << s.id << '\n';
  }

  for (std::size_t v = 0; v < variants.size(); ++v) {
    compute_statistics(stats[v]);
    const std::string& name = stats[v].variant;
    std::ofstream csv(dir / (name + "_map.csv"), std::ios::binary);
    write_map_csv(csv, all_maps[v]);
    write_text(dir / (name + "_stats.json"), to_json(stats[v]).dump(2) + "\n");
    std::ofstream corr(dir / (name + "_correlations.csv"), std::ios::binary);
    write_correlation_csv(corr, stats[v]);
    std::vector<double> x, y;
    for (const auto& r : stats[v].subjects) {
      x.push_back(r.lesion_fraction);
      y.push_back(r.classifier_percentage);
    }
    write_text(dir / (name + "_scatter.svg"),
               scatter_svg(x, y, name + " lesion percentage", "true lesion fraction", "classifier lesion %"));
    for (const auto& row : stats[v].correlations) {
      log << name << ' ' << row.method << " vs " << row.reference << ": ";
      if (row.value) {
        log << "rho " << row.value->rho << " p " << row.value->p << '\n';
      } else {
        log << row.status << '\n';
      }
    }
  }
}

void cmd_report(const PipelineConfig& c, std::ostream& out) {
  const fs::path path = fs::path(c.output_dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw DataError("no report at " + path.string() + " (run evaluate first)");
  EvaluationReport r;
  try {
    r = report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("report " + path.string() + " is malformed: " + e.what());
  }
  char line[256];
  out << "schema " << r.schema << ", " << r.subjects << " subjects, " << r.outer_folds << "/" << r.inner_folds
      << " folds, grid " << r.grid.size() << " cells\n";
  out << "variant    AUC (x100)       S (x100)         instance AUC (x100)\n";
  for (const auto& res : r.results) {
    std::snprintf(line, sizeof(line), "%-10s %5.1f +- %-5.1f    %5.1f +- %-5.1f", to_string(res.variant).c_str(),
                  100 * res.auc.mean, 100 * res.auc.sd, 100 * res.separability.mean, 100 * res.separability.sd);
    out << line;
    if (res.instance_auc) {
      std::snprintf(line, sizeof(line), "    %5.1f +- %-5.1f", 100 * res.instance_auc->mean, 100 * res.instance_auc->sd);
      out << line;
    }
    out << '\n';
  }
  out << "hygiene: " << r.hygiene_checks << " checks, " << r.hygiene_violations.size() << " violations\n";
  for (const auto& v : std::vector<std::string>{"misvm_q", "miles_q"}) {
    const fs::path stats = fs::path(c.output_dir) / "densemap" / (v + "_stats.json");
    std::ifstream sin(stats);
    if (!sin) continue;
    const json j = json::parse(sin);
    out << "dense map " << v << ":\n";
    for (const auto& row : j.at("correlations")) {
      out << "  " << row.at("method").get<std::string>() << " vs " << row.at("reference").get<std::string>() << ": ";
      if (row.at("rho").is_null()) {
        out << row.at("status").get<std::string>() << '\n';
      } else {
        std::snprintf(line, sizeof(line), "rho %.3f (p %.3g)", row.at("rho").get<double>(), row.at("p").get<double>());
        out << line << '\n';
      }
    }
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const json::exception*>(&e)) return 2;
  return 2;
}

}  // namespace milq
