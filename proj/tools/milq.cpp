#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "milq/pipeline.hpp"

namespace {

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Progress lines go to stderr; a timestamped copy is appended to <output_dir>/run.log.
class RunLog : public std::stringbuf {
 public:
  explicit RunLog(std::string path) : path_(std::move(path)) {}
  int sync() override {
    const std::string text = str();
    str("");
    std::cerr << text;
    std::ofstream out(path_, std::ios::app);
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) out << timestamp() << ' ' << line << '\n';
    return 0;
  }

 private:
  std::string path_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised lesion detection with quantile multiple-instance learning"};
  app.require_subcommand(1);

  milq::CommandOptions opts;
  std::string schema, variant;
  std::uint64_t seed = 0;
  int workers = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "cohort seed override");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--schema", schema, "feature schema")->check(CLI::IsMember({"cooc", "gauss", "both"}));
    sub->add_option("--variant", variant, "classifier variant")->check(CLI::IsMember({"misvm-q", "miles-q", "misvm_q", "miles_q"}));
  };
  auto* cohort = app.add_subcommand("phantom-cohort", "generate the synthetic phantom cohort and manifest");
  auto* extract = app.add_subcommand("extract", "extract per-subject patch features");
  auto* evaluate = app.add_subcommand("evaluate", "nested cross-validation, report and plots");
  auto* densemap = app.add_subcommand("densemap", "dense lesion maps and agreement statistics");
  auto* report = app.add_subcommand("report", "print the evaluation summary");
  for (auto* sub : {cohort, extract, evaluate, densemap, report}) add_common(sub);
  densemap->add_option("--models", opts.model_dir, "directory of fold models (default <output_dir>/models)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--workers")) opts.workers = workers;
    if (!schema.empty()) opts.schema = milq::parse_schema(schema);
    if (!variant.empty()) opts.variant = milq::parse_variant(variant);
    const milq::PipelineConfig config = milq::resolve_config(opts);

    if (sub == report) {
      milq::cmd_report(config, std::cout);
      return 0;
    }
    std::filesystem::create_directories(config.output_dir);
    RunLog buf((std::filesystem::path(config.output_dir) / "run.log").string());
    std::ostream log(&buf);
    log << sub->get_name() << " started" << std::endl;
    if (sub == cohort) milq::cmd_phantom_cohort(config, log);
    if (sub == extract) milq::cmd_extract(config, log);
    if (sub == evaluate) milq::cmd_evaluate(config, log);
    if (sub == densemap) milq::cmd_densemap(config, opts.model_dir, log);
    log << sub->get_name() << " finished" << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return milq::exit_code_for(e);
  }
}
