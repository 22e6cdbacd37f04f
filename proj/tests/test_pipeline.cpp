#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "milq/pipeline.hpp"

using namespace milq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("milq_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CohortConfig small_cohort(int subjects) {
  CohortConfig c;
  c.subjects = subjects;
  c.dims = {40, 40, 40};
  c.lesion_radius_min_mm = 3;
  c.lesion_radius_max_mm = 5;
  return c;
}

json tiny_config() {
  return json::parse(R"({
    "paths": {"data_dir": "cohort", "output_dir": "out"},
    "cohort": {"subjects": 8, "dims": [40, 40, 40], "lesion_radius_mm": [3, 5]},
    "features": {"patches": 6, "patch_size": 15, "scales_mm": [0.6, 1.2], "bin_samples": 5000},
    "grid": {"degrees": [], "sigmas": [8], "C": [1], "q": [0.5]},
    "cv": {"outer_folds": 2, "inner_folds": 2},
    "densemap": {"slices": 2, "slice_spacing": 4, "step": 6}
  })");
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("MILQ_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "MILQ_CLI is not set");
  const int status = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const PipelineConfig d;
  CHECK(d.features.patches == 50);
  CHECK(d.features.patch_size == 41);
  CHECK(d.grid.size() == 280);
  CHECK(d.outer_folds == 4);
  CHECK(d.inner_folds == 3);
  CHECK(d.densemap.params.count == 10);
  CHECK(d.densemap.params.spacing == 25);
  CHECK(d.densemap.params.step == 10);
  CHECK(d.densemap.laa_threshold == -950.0);
  CHECK(d.densemap.params.threshold == 0.5);
  const auto c = config_from_json(tiny_config());
  CHECK(c.cohort.subjects == 8);
  CHECK(c.grid.size() == 1);
  CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("config parsing is strict") {
  auto j = tiny_config();
  j["cohort"]["subjectz"] = 3;
  CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  j = tiny_config();
  j["cv"]["outer_folds"] = "four";
  CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  j = tiny_config();
  j["extra"] = json::object();
  CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  j = tiny_config();
  j["features"]["schema"] = "wavelet";
  CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  j = tiny_config();
  j["grid"]["q"] = json::array({1.5});
  CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
}

TEST_CASE("load_config resolves paths next to the file") {
  const auto dir = scratch("load");
  std::ofstream(dir / "c.json") << tiny_config().dump();
  const auto c = load_config(dir / "c.json");
  CHECK(fs::path(c.data_dir) == dir / "cohort");
  CHECK(fs::path(c.output_dir) == dir / "out");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), Error);
}

TEST_CASE("median split labels half the cohort positive") {
  std::vector<Phantom> phantoms;
  const auto cohort = generate_cohort(small_cohort(16), &phantoms);
  REQUIRE(cohort.subjects.size() == 16);
  REQUIRE(phantoms.size() == 16);
  int pos = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    const auto& s = cohort.subjects[i];
    pos += s.label > 0;
    CHECK(s.lesion_fraction == phantoms[i].lesion_fraction);
    CHECK(s.label == (s.lesion_fraction > cohort.threshold ? 1 : -1));
  }
  CHECK(pos == 8);
  CHECK(cohort.subjects[0].id == "P001");
  CHECK(cohort.subjects[15].id == "P016");
}

TEST_CASE("a zero threshold labels every subject with lesions positive") {
  auto c = small_cohort(6);
  c.label_threshold = 0.0;
  const auto cohort = generate_cohort(c);
  for (const auto& s : cohort.subjects) CHECK(s.label == (s.lesion_fraction > 0 ? 1 : -1));
  CHECK(label_threshold({0.1, 0.3, 0.2, 0.4}, std::nullopt) == doctest::Approx(0.25));
}

TEST_CASE("manifest is deterministic and reads back") {
  const auto dir = scratch("manifest");
  const auto a = generate_cohort(small_cohort(6));
  const auto b = generate_cohort(small_cohort(6));
  std::ostringstream sa, sb;
  write_manifest(sa, a);
  write_manifest(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("subject_id,seed,lesion_fraction,label,stratum\n", 0) == 0);
  std::ofstream(dir / "manifest.csv") << sa.str();
  const auto back = read_manifest(dir / "manifest.csv");
  REQUIRE(back.subjects.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.subjects[i].id == a.subjects[i].id);
    CHECK(back.subjects[i].seed == a.subjects[i].seed);
    CHECK(back.subjects[i].lesion_fraction == a.subjects[i].lesion_fraction);
    CHECK(back.subjects[i].label == a.subjects[i].label);
    CHECK(back.subjects[i].stratum == a.subjects[i].stratum);
  }
}

TEST_CASE("per-subject feature matrices have the schema dimension") {
  std::vector<Phantom> phantoms;
  auto cc = small_cohort(2);
  cc.dims = {56, 56, 56};
  const auto cohort = generate_cohort(cc, &phantoms);
  FeatureConfig f;
  for (Schema schema : {Schema::Cooc, Schema::Gauss}) {
    f.schema = schema;
    const auto subject = prepare_subject(phantoms[1], cohort.subjects[1], f, cc.seed, 1);
    CHECK(subject.num_instances() == 50);
    CHECK(subject.instance_labels.size() == 50);
    auto shared = std::make_shared<std::vector<SubjectResponses>>();
    shared->push_back(subject);
    ResponseBagSource source(shared, 20000);
    const auto bins = source.has_responses() ? std::optional(source.fit_bins({0}, "unit")) : std::nullopt;
    const Bag bag = source.make_bag(0, bins ? &*bins : nullptr);
    CHECK(bag.instances.rows() == 50);
    CHECK(static_cast<std::size_t>(bag.instances.cols()) == feature_dim(schema));
    const auto again = prepare_subject(phantoms[1], cohort.subjects[1], f, cc.seed, 1);
    CHECK(source.make_bag(0, bins ? &*bins : nullptr).instances == bag.instances);
    CHECK(again.instance_labels == subject.instance_labels);
  }
}

TEST_CASE("roc svg is well formed with a monotone path") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.6, 0.5, 0.3, 0.3, 0.1};
  const std::vector<int> y{1, 1, -1, 1, -1, 1, -1, -1};
  const auto svg = roc_svg(s, y, "fold <1> & more");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  CHECK(svg.find("<1>") == std::string::npos);
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("<path d=\"([^\"]*)\"")));
  std::istringstream path(m[1].str());
  std::string cmd;
  double x, yv, px = -1e9, py = 1e9;
  int points = 0;
  while (path >> cmd >> x >> yv) {
    CHECK(x >= px);
    CHECK(yv <= py);
    px = x;
    py = yv;
    ++points;
  }
  CHECK(points == 7);
  const auto sc = scatter_svg({0.0, 0.01, 0.1}, {1, 2, 3}, "t", "x", "y");
  CHECK(sc.find("<circle") != std::string::npos);
}

TEST_CASE("statistics report degenerate correlations with a status") {
  DenseMapStats stats;
  stats.variant = "misvm_q";
  for (int i = 0; i < 6; ++i) {
    SubjectDenseResult r;
    r.id = "P" + std::to_string(i);
    r.lesion_fraction = 0.01 * i;
    r.classifier_percentage = 0.0;
    r.laa_percentage = i * 2.0;
    r.observer_a_percentage = i * 1.5;
    r.observer_b_percentage = i * 1.2 + (i == 3);
    stats.subjects.push_back(r);
  }
  compute_statistics(stats);
  REQUIRE(stats.correlations.size() == 7);
  CHECK_FALSE(stats.correlations[0].value.has_value());
  CHECK(stats.correlations[0].status.rfind("degenerate", 0) == 0);
  CHECK(stats.correlations[3].status == "ok");
  CHECK(stats.correlations[3].value->rho == doctest::Approx(1.0));
  REQUIRE(stats.comparisons.size() == 3);
  CHECK(stats.comparisons[0].status.rfind("degenerate", 0) == 0);
  std::ostringstream csv;
  write_correlation_csv(csv, stats);
  CHECK(csv.str().find("classifier") != std::string::npos);
  CHECK(to_json(stats)["correlations"].size() == 7);
}

TEST_CASE("exit codes follow the error class") {
  CHECK(exit_code_for(InvalidArgument("x")) == 1);
  CHECK(exit_code_for(DataError("x")) == 2);
  CHECK(exit_code_for(PayloadSizeMismatch("x")) == 2);
  CHECK(exit_code_for(NumericalError("x")) == 3);
  CHECK(exit_code_for(NonConvergence("x", 1.0)) == 3);
}

TEST_CASE("command line end to end") {
  const auto dir = scratch("cli");
  std::ofstream(dir / "c.json") << tiny_config().dump(2);
  const std::string cfg = "--config " + (dir / "c.json").string();

  CHECK(run_cli("evaluate " + cfg) == 2);
  CHECK(run_cli("bogus") == 1);
  CHECK(run_cli("evaluate --config " + (dir / "none.json").string()) != 0);

  REQUIRE(run_cli("phantom-cohort " + cfg) == 0);
  CHECK(fs::exists(dir / "cohort" / "manifest.csv"));
  CHECK(fs::exists(dir / "cohort" / "P001.hdr"));
  const auto manifest = slurp(dir / "cohort" / "manifest.csv");
  REQUIRE(run_cli("phantom-cohort " + cfg) == 0);
  CHECK(slurp(dir / "cohort" / "manifest.csv") == manifest);

  REQUIRE(run_cli("extract " + cfg) == 0);
  REQUIRE(run_cli("evaluate " + cfg) == 0);
  const auto report = json::parse(slurp(dir / "out" / "report.json"));
  for (const auto& r : report["results"]) {
    const double auc = r["auc"]["mean"];
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);
  }
  CHECK(report.at("hygiene").at("violations").empty());
  CHECK(report.at("hygiene").at("checks").get<int>() > 0);
  CHECK(fs::exists(dir / "out" / "run.log"));
  CHECK(slurp(dir / "out" / "folds.csv").rfind("variant,", 0) == 0);
  CHECK(fs::exists(dir / "out" / "models" / "misvm_q_fold0.json"));

  const auto first = slurp(dir / "out" / "report.json");
  REQUIRE(run_cli("evaluate " + cfg) == 0);
  CHECK(slurp(dir / "out" / "report.json") == first);

  REQUIRE(run_cli("densemap " + cfg) == 0);
  const auto map = slurp(dir / "out" / "densemap" / "misvm_q_map.csv");
  CHECK(map.rfind("subject,z,x,y,posterior,label\n", 0) == 0);
  CHECK(fs::exists(dir / "out" / "densemap" / "misvm_q_stats.json"));
  REQUIRE(run_cli("report " + cfg) == 0);
}

TEST_CASE("saved models reload with identical predictions") {
  const auto dir = scratch("model");
  MilDataset data;
  for (int b = 0; b < 6; ++b) {
    Bag bag;
    bag.id = "B" + std::to_string(b);
    bag.label = b % 2 ? -1 : 1;
    bag.instances = Eigen::MatrixXd::Random(4, 3);
    if (bag.label > 0) bag.instances(0, 0) += 3.0;
    data.bags.push_back(bag);
  }
  for (Variant v : {Variant::MisvmQ, Variant::MilesQ}) {
    MilTrainer trainer(data);
    const auto m = trainer.train(v, Kernel::rbf(1.0), 1.0, 0.5);
    BinningScheme bins;
    bins.edges.assign(2, {-1e300, 1, 2, 3, 4, 5, 6, 7, 8, 9, 1e300});
    bins.provenance = "unit";
    bins.fit_subjects = {"B0", "B1"};
    save_model(dir / (to_string(v) + ".json"), m, &bins, {"B5"}, 2);
    const auto back = load_model(dir / (to_string(v) + ".json"));
    CHECK(back.fold == 2);
    CHECK(back.test_subjects == std::vector<std::string>{"B5"});
    REQUIRE(back.bins.has_value());
    CHECK(back.bins->fit_subjects == bins.fit_subjects);
    for (const auto& bag : data.bags) CHECK(back.model.predict_bag(bag) == m.predict_bag(bag));
  }
}
