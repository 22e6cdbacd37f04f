#include <fstream>
#include <set>

#include "milq/pipeline.hpp"

namespace milq {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw InvalidArgument("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config: '" + where + "." + key + "' has the wrong type");
  }
}

ObserverSpec read_observer(const json& j, ObserverSpec spec, const std::string& where) {
  check_keys(j, {"radius", "keep", "seed"}, where);
  read(j, "radius", spec.radius, where);
  read(j, "keep", spec.keep, where);
  read(j, "seed", spec.seed, where);
  return spec;
}

json observer_json(const ObserverSpec& o) { return {{"radius", o.radius}, {"keep", o.keep}, {"seed", o.seed}}; }

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  check_keys(j, {"paths", "cohort", "features", "classifier", "grid", "cv", "densemap", "workers"}, "config");
  read(j, "workers", c.workers, "config");
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, {"data_dir", "output_dir"}, "paths");
    read(p, "data_dir", c.data_dir, "paths");
    read(p, "output_dir", c.output_dir, "paths");
  }
  if (j.contains("cohort")) {
    const auto& k = j["cohort"];
    const std::string w = "cohort";
    check_keys(k, {"subjects", "seed", "dims", "spacing", "healthy_lesions", "diseased_lesions", "lesion_radius_mm",
                   "background_mean", "background_sd", "lesion_mean", "lesion_sd", "smoothing_mm", "label_threshold"},
               w);
    auto& co = c.cohort;
    read(k, "subjects", co.subjects, w);
    read(k, "seed", co.seed, w);
    std::array<int, 3> dims{co.dims.nx, co.dims.ny, co.dims.nz};
    read(k, "dims", dims, w);
    co.dims = {dims[0], dims[1], dims[2]};
    std::array<double, 3> sp{co.spacing.sx, co.spacing.sy, co.spacing.sz};
    read(k, "spacing", sp, w);
    co.spacing = {sp[0], sp[1], sp[2]};
    read(k, "healthy_lesions", co.healthy_lesions, w);
    read(k, "diseased_lesions", co.diseased_lesions, w);
    std::array<double, 2> radius{co.lesion_radius_min_mm, co.lesion_radius_max_mm};
    read(k, "lesion_radius_mm", radius, w);
    co.lesion_radius_min_mm = radius[0];
    co.lesion_radius_max_mm = radius[1];
    read(k, "background_mean", co.background_mean, w);
    read(k, "background_sd", co.background_sd, w);
    read(k, "lesion_mean", co.lesion_mean, w);
    read(k, "lesion_sd", co.lesion_sd, w);
    read(k, "smoothing_mm", co.smoothing_mm, w);
    if (k.contains("label_threshold")) {
      const auto& t = k["label_threshold"];
      if (t.is_string() && t.get<std::string>() == "median") {
        co.label_threshold.reset();
      } else if (t.is_number()) {
        co.label_threshold = t.get<double>();
      } else {
        throw InvalidArgument("config: 'cohort.label_threshold' must be \"median\" or a number");
      }
    }
  }
  if (j.contains("features")) {
    const auto& f = j["features"];
    const std::string w = "features";
    check_keys(f, {"schema", "patches", "patch_size", "sublattice_stride", "bin_samples", "instance_lesion_fraction",
                   "scales_mm", "cooc_levels", "cooc_distances", "cooc_window"},
               w);
    auto& fe = c.features;
    std::string schema = to_string(fe.schema);
    read(f, "schema", schema, w);
    fe.schema = parse_schema(schema);
    read(f, "patches", fe.patches, w);
    read(f, "patch_size", fe.patch_size, w);
    read(f, "sublattice_stride", fe.stride, w);
    read(f, "bin_samples", fe.bin_samples, w);
    read(f, "instance_lesion_fraction", fe.instance_lesion_fraction, w);
    read(f, "scales_mm", fe.texture.gauss.scales_mm, w);
    read(f, "cooc_levels", fe.texture.cooc.levels, w);
    read(f, "cooc_distances", fe.texture.cooc.distances, w);
    std::array<double, 2> window{fe.texture.cooc.window_lo, fe.texture.cooc.window_hi};
    read(f, "cooc_window", window, w);
    fe.texture.cooc.window_lo = window[0];
    fe.texture.cooc.window_hi = window[1];
  }
  if (j.contains("classifier")) {
    const auto& k = j["classifier"];
    const std::string w = "classifier";
    check_keys(k, {"variants", "max_iters", "smo_tol"}, w);
    if (k.contains("variants")) {
      std::vector<std::string> names;
      read(k, "variants", names, w);
      c.variants.clear();
      for (const auto& n : names) c.variants.push_back(parse_variant(n));
    }
    read(k, "max_iters", c.train.max_iters, w);
    read(k, "smo_tol", c.train.smo.tol, w);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, {"degrees", "sigmas", "C", "q"}, "grid");
    read(g, "degrees", c.grid.degrees, "grid");
    read(g, "sigmas", c.grid.sigmas, "grid");
    read(g, "C", c.grid.Cs, "grid");
    read(g, "q", c.grid.qs, "grid");
  }
  if (j.contains("cv")) {
    const auto& k = j["cv"];
    check_keys(k, {"outer_folds", "inner_folds", "seed"}, "cv");
    read(k, "outer_folds", c.outer_folds, "cv");
    read(k, "inner_folds", c.inner_folds, "cv");
    read(k, "seed", c.cv_seed, "cv");
  }
  if (j.contains("densemap")) {
    const auto& d = j["densemap"];
    const std::string w = "densemap";
    check_keys(d, {"slices", "slice_spacing", "step", "threshold", "laa_threshold", "observer_a", "observer_b"}, w);
    auto& dm = c.densemap;
    read(d, "slices", dm.params.count, w);
    read(d, "slice_spacing", dm.params.spacing, w);
    read(d, "step", dm.params.step, w);
    read(d, "threshold", dm.params.threshold, w);
    read(d, "laa_threshold", dm.laa_threshold, w);
    if (d.contains("observer_a")) dm.observer_a = read_observer(d["observer_a"], dm.observer_a, "densemap.observer_a");
    if (d.contains("observer_b")) dm.observer_b = read_observer(d["observer_b"], dm.observer_b, "densemap.observer_b");
  }
  c.densemap.params.patch_size = c.features.patch_size;
  c.densemap.params.stride = c.features.stride;
  c.densemap.params.gauss = c.features.texture.gauss;
  c.validate();
  return c;
}

json config_to_json(const PipelineConfig& c) {
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.push_back(to_string(v));
  const auto& co = c.cohort;
  const auto& fe = c.features;
  const auto& dm = c.densemap;
  return {
      {"paths", {{"data_dir", c.data_dir}, {"output_dir", c.output_dir}}},
      {"cohort",
       {{"subjects", co.subjects},
        {"seed", co.seed},
        {"dims", {co.dims.nx, co.dims.ny, co.dims.nz}},
        {"spacing", {co.spacing.sx, co.spacing.sy, co.spacing.sz}},
        {"healthy_lesions", co.healthy_lesions},
        {"diseased_lesions", co.diseased_lesions},
        {"lesion_radius_mm", {co.lesion_radius_min_mm, co.lesion_radius_max_mm}},
        {"background_mean", co.background_mean},
        {"background_sd", co.background_sd},
        {"lesion_mean", co.lesion_mean},
        {"lesion_sd", co.lesion_sd},
        {"smoothing_mm", co.smoothing_mm},
        {"label_threshold", co.label_threshold ? json(*co.label_threshold) : json("median")}}},
      {"features",
       {{"schema", to_string(fe.schema)},
        {"patches", fe.patches},
        {"patch_size", fe.patch_size},
        {"sublattice_stride", fe.stride},
        {"bin_samples", fe.bin_samples},
        {"instance_lesion_fraction", fe.instance_lesion_fraction},
        {"scales_mm", fe.texture.gauss.scales_mm},
        {"cooc_levels", fe.texture.cooc.levels},
        {"cooc_distances", fe.texture.cooc.distances},
        {"cooc_window", {fe.texture.cooc.window_lo, fe.texture.cooc.window_hi}}}},
      {"classifier", {{"variants", variants}, {"max_iters", c.train.max_iters}, {"smo_tol", c.train.smo.tol}}},
      {"grid", {{"degrees", c.grid.degrees}, {"sigmas", c.grid.sigmas}, {"C", c.grid.Cs}, {"q", c.grid.qs}}},
      {"cv", {{"outer_folds", c.outer_folds}, {"inner_folds", c.inner_folds}, {"seed", c.cv_seed}}},
      {"densemap",
       {{"slices", dm.params.count},
        {"slice_spacing", dm.params.spacing},
        {"step", dm.params.step},
        {"threshold", dm.params.threshold},
        {"laa_threshold", dm.laa_threshold},
        {"observer_a", observer_json(dm.observer_a)},
        {"observer_b", observer_json(dm.observer_b)}}},
      {"workers", c.workers}};
}

void PipelineConfig::validate() const {
  const auto& co = cohort;
  if (co.subjects < outer_folds) throw InvalidArgument("config: fewer subjects than outer folds");
  if (co.healthy_lesions[0] < 0 || co.healthy_lesions[1] < co.healthy_lesions[0] || co.diseased_lesions[0] < 0 ||
      co.diseased_lesions[1] < co.diseased_lesions[0]) {
    throw InvalidArgument("config: lesion count ranges must be ordered and non-negative");
  }
  if (co.label_threshold && !(*co.label_threshold >= 0.0 && *co.label_threshold < 1.0)) {
    throw InvalidArgument("config: label_threshold must lie in [0, 1)");
  }
  phantom_spec(co, 0).validate();
  if (features.patches < 1) throw InvalidArgument("config: patches must be >= 1");
  if (features.patch_size < 3) throw InvalidArgument("config: patch_size must be >= 3");
  if (features.stride < 1) throw InvalidArgument("config: sublattice_stride must be >= 1");
  if (features.bin_samples < 100) throw InvalidArgument("config: bin_samples must be >= 100");
  if (!(features.instance_lesion_fraction >= 0.0 && features.instance_lesion_fraction < 1.0)) {
    throw InvalidArgument("config: instance_lesion_fraction must lie in [0, 1)");
  }
  if (features.texture.gauss.scales_mm.empty()) throw InvalidArgument("config: scales_mm must not be empty");
  for (double s : features.texture.gauss.scales_mm) {
    if (!(s > 0)) throw InvalidArgument("config: scales must be > 0");
  }
  if (features.texture.cooc.levels < 2) throw InvalidArgument("config: cooc_levels must be >= 2");
  if (!(features.texture.cooc.window_lo < features.texture.cooc.window_hi)) {
    throw InvalidArgument("config: cooc_window must be increasing");
  }
  if (variants.empty()) throw InvalidArgument("config: at least one classifier variant required");
  if (train.max_iters < 1) throw InvalidArgument("config: max_iters must be >= 1");
  if (!(train.smo.tol > 0)) throw InvalidArgument("config: smo_tol must be > 0");
  grid.validate();
  if (outer_folds < 2 || inner_folds < 2) throw InvalidArgument("config: fold counts must be >= 2");
  const auto& dm = densemap.params;
  if (dm.count < 1 || dm.spacing < 1 || dm.step < 1) throw InvalidArgument("config: densemap counts must be >= 1");
  if (!(dm.threshold > 0.0 && dm.threshold < 1.0)) throw InvalidArgument("config: densemap threshold must lie in (0, 1)");
  for (const auto* o : {&densemap.observer_a, &densemap.observer_b}) {
    if (!(o->keep > 0.0 && o->keep <= 1.0)) throw InvalidArgument("config: observer keep must lie in (0, 1]");
  }
  if (workers < 1) throw InvalidArgument("config: workers must be >= 1");
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig c = config_from_json(j);
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.data_dir);
  resolve(c.output_dir);
  return c;
}

}  // namespace milq
