// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "milq/densemap.hpp"
#include "milq/eval.hpp"
#include "milq/filtering.hpp"
#include "milq/pipeline.hpp"
#include "milq/report.hpp"
#include "milq/rng.hpp"
#include "oracles.hpp"

using namespace milq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::cout << "CRITERION " << id << ' ' << (ok ? "PASS" : "FAIL") << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const double s1 = separability({{0.51, 0.49}}, {{0.49, 0.49}});
  const double s2 = separability({{0.9, 0.1}}, {{0.1, 0.1}});
  const bool ok = std::abs(s1 - 0.01) <= 1e-12 && std::abs(s2 - 0.40) <= 1e-12;
  std::ostringstream os;
  os.precision(17);
  os << "separability examples S=" << s1 << " (want 0.01), S=" << s2 << " (want 0.40)";
  verdict(1, ok, os.str());
}

void criterion2() {
  Rng rng(2);
  const Patch p = oracle::random_patch(rng, 41);
  const auto cooc = cooc_features(p);
  const auto bank = gauss_filter_bank(p, {}, {});
  const auto bins = fit_adaptive_bins(bank.channels);
  const auto gauss = gauss_features(p, {}, {}, bins);
  const auto both = extract(p, {}, Schema::Both, {}, &bins);
  bool dims = cooc.dim() == 780 && gauss.dim() == 320 && both.dim() == 1100 && feature_dim(Schema::Cooc) == 780 &&
              feature_dim(Schema::Gauss) == 320 && feature_dim(Schema::Both) == 1100;

  Patch flat;
  flat.size = 41;
  flat.values.assign(41 * 41 * 41, -760);
  const auto f = cooc_features(flat);
  std::size_t trivial = 0;
  for (std::size_t k = 0; k < 65; ++k) {
    const double* s = &f.values[k * kNumHaralick];
    trivial += s[static_cast<int>(Haralick::Energy)] == 1.0 && s[static_cast<int>(Haralick::Entropy)] == 0.0 &&
               s[static_cast<int>(Haralick::Contrast)] == 0.0;
  }
  verdict(2, dims && trivial == 65,
          "dims cooc=" + std::to_string(cooc.dim()) + " gauss=" + std::to_string(gauss.dim()) +
              " both=" + std::to_string(both.dim()) + "; constant patch trivial on " + std::to_string(trivial) +
              "/65 direction-distance pairs");
}

void criterion3() {
  const auto t0 = Clock::now();
  Rng rng(3);
  std::vector<std::string> notes;
  bool ok = true;

  // GLCM features against pair enumeration.
  {
    CoocParams params;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int size = static_cast<int>(rng.uniform_int(6, 9));
      const Patch p = oracle::random_patch(rng, size);
      const auto got = cooc_features(p, params).values;
      const auto want = oracle::cooc_features(p, params);
      for (std::size_t k = 0; k < want.size(); ++k) {
        worst = std::max(worst, std::abs(got[k] - want[k]) / std::max(1.0, std::abs(want[k])));
      }
    }
    ok &= worst <= 1e-10;
    notes.push_back(fmt("glcm rel err %.2e", worst));
  }

  // Separable filtering against dense 3D convolution.
  {
    double worst = 0.0;
    const std::vector<double> scales{0.6, 1.2, 2.4};
    const std::array<std::array<int, 3>, kNumDerivs> orders{{
        {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2},
    }};
    for (int i = 0; i < 5; ++i) {
      const int size = static_cast<int>(rng.uniform_int(11, 13));
      const Patch p = oracle::random_patch(rng, size);
      const Dims d{size, size, size};
      const std::vector<double> img(p.values.begin(), p.values.end());
      GaussParams gp;
      gp.scales_mm = scales;
      const auto bank = gauss_filter_bank(p, {}, gp);
      for (std::size_t s = 0; s < scales.size(); ++s) {
        const auto k = make_gaussian_kernel(scales[s]);
        std::array<std::vector<double>, kNumDerivs> dense;
        for (int o = 0; o < kNumDerivs; ++o) {
          const auto& ord = orders[static_cast<std::size_t>(o)];
          dense[static_cast<std::size_t>(o)] = oracle::convolve_dense(img, d, k.taps(ord[0]), k.taps(ord[1]), k.taps(ord[2]));
        }
        const auto sep = gaussian_derivatives(img, d, {&k, &k, &k}, Boundary::Mirror);
        for (int o = 0; o < kNumDerivs; ++o) {
          const auto& a = sep[static_cast<std::size_t>(o)];
          const auto& b = dense[static_cast<std::size_t>(o)];
          double scale = 1.0;
          for (double v : b) scale = std::max(scale, std::abs(v));
          for (std::size_t v = 0; v < a.size(); ++v) worst = std::max(worst, std::abs(a[v] - b[v]) / scale);
        }
        // Linear channels of the filter bank from the dense derivatives.
        const auto& smooth = bank.channels[channel_index(s, Filter::Smoothed)];
        const auto& lap = bank.channels[channel_index(s, Filter::Laplacian)];
        const auto& grad = bank.channels[channel_index(s, Filter::GradientMagnitude)];
        double ss = 1.0, sl = 1.0, sg = 1.0;
        for (std::size_t v = 0; v < img.size(); ++v) {
          ss = std::max(ss, std::abs(dense[kL][v]));
          sl = std::max(sl, std::abs(dense[kLxx][v] + dense[kLyy][v] + dense[kLzz][v]));
          sg = std::max(sg, std::hypot(dense[kLx][v], dense[kLy][v], dense[kLz][v]));
        }
        for (std::size_t v = 0; v < img.size(); ++v) {
          worst = std::max(worst, std::abs(smooth[v] - dense[kL][v]) / ss);
          worst = std::max(worst, std::abs(lap[v] - (dense[kLxx][v] + dense[kLyy][v] + dense[kLzz][v])) / sl);
          worst = std::max(worst, std::abs(grad[v] - std::hypot(dense[kLx][v], dense[kLy][v], dense[kLz][v])) / sg);
        }
      }
    }
    ok &= worst <= 1e-10;
    notes.push_back(fmt("convolution rel err %.2e", worst));
  }

  // SMO against a projected-gradient QP solver.
  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      Eigen::MatrixXd X(20, 2);
      std::vector<int> y(20);
      for (int r = 0; r < 20; ++r) {
        y[static_cast<std::size_t>(r)] = r % 2 == 0 ? 1 : -1;
        X(r, 0) = rng.normal() + 0.7 * y[static_cast<std::size_t>(r)];
        X(r, 1) = rng.normal();
      }
      const Kernel k = i % 3 == 0 ? Kernel::polynomial(1 + i % 2) : Kernel::rbf(0.5 + 0.25 * (i % 4));
      const double C = std::pow(10.0, static_cast<double>(i % 4) - 1.0);
      const Eigen::MatrixXd K = kernel_matrix(k, X, X);
      const auto sol = smo_solve(K, y, C);
      worst = std::max(worst, std::abs(dual_objective(K, y, sol.alpha) - oracle::qp_dual(K, y, C)));
    }
    ok &= worst <= 1e-4;
    notes.push_back(fmt("smo dual gap %.2e", worst));
  }

  // AUC and Spearman against pair counting and rank-then-Pearson.
  {
    double auc_err = 0.0, rho_err = 0.0;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> s, x, z;
      std::vector<int> y;
      for (int r = 0; r < 30; ++r) {
        s.push_back(static_cast<double>(rng.uniform_int(0, 12)));
        y.push_back(rng.uniform() < 0.4 ? 1 : -1);
        x.push_back(static_cast<double>(rng.uniform_int(0, 8)));
        z.push_back(x.back() + rng.normal() * 3.0);
      }
      y[0] = 1;
      y[1] = -1;
      auc_err = std::max(auc_err, std::abs(bag_auc(s, y) - oracle::auc_pairs(s, y)));
      rho_err = std::max(rho_err, std::abs(spearman(x, z).rho - oracle::spearman(x, z)));
    }
    ok &= auc_err <= 1e-12 && rho_err <= 1e-12;
    notes.push_back(fmt("auc err %.1e", auc_err));
    notes.push_back(fmt("spearman err %.1e", rho_err));
  }

  const double elapsed = seconds_since(t0);
  ok &= elapsed < 60.0;
  std::string detail;
  for (const auto& n : notes) detail += n + "; ";
  verdict(3, ok, detail + fmt("runtime %.1f s (limit 60 s)", elapsed));
}

MilDataset random_bags(Rng& rng, int bags, int dim) {
  MilDataset data;
  for (int b = 0; b < bags; ++b) {
    Bag bag;
    bag.id = "B" + std::to_string(b);
    bag.label = b % 2 == 0 ? 1 : -1;
    const int size = static_cast<int>(rng.uniform_int(3, 8));
    bag.instances.resize(size, dim);
    for (int i = 0; i < size; ++i)
      for (int d = 0; d < dim; ++d) bag.instances(i, d) = rng.normal() + (bag.label > 0 && i == 0 && d == 0 ? 4.0 : 0.0);
    data.bags.push_back(std::move(bag));
  }
  return data;
}

void criterion4() {
  Rng rng(4);
  int checked = 0, exact = 0, prototypes = 0;
  for (int m = 0; m < 10; ++m) {
    const auto data = random_bags(rng, 10, 3);
    const Kernel k = m % 2 == 0 ? Kernel::rbf(1.0 + m) : Kernel::polynomial(1 + m % 3 / 2);
    const auto mi = misvmq_train(data, k, 1.0, 1.0);
    const auto miles = milesq_train(data, k, 100.0, 1.0);
    prototypes += miles.prototypes.rows() > 0;
    for (const auto& b : data.bags) {
      ++checked;
      const Eigen::VectorXd p = mi.predict_instances(b.instances);
      bool ok = mi.predict_bag(b) == p.maxCoeff();
      if (miles.prototypes.rows() > 0) {
        const Eigen::MatrixXd sim = kernel_matrix(miles.kernel, miles.standardizer.apply(b.instances), miles.prototypes);
        const Eigen::VectorXd e = quantile_embedding(sim, 1.0);
        const Eigen::VectorXd mx = sim.colwise().maxCoeff().transpose();
        ok &= e == mx;
        ok &= miles.predict_bag(b) == sigmoid(miles.weights.dot(mx) + miles.bias);
      }
      exact += ok;
    }
  }
  verdict(4, exact == checked && prototypes == 10,
          std::to_string(exact) + "/" + std::to_string(checked) + " bags exact over 10 miSVM-Q and 10 MILES-Q models (" +
              std::to_string(prototypes) + " with prototypes)");
}

// ---------------------------------------------------------------------------
// Phantom pipeline

PipelineConfig phantom_config() {
  PipelineConfig c;
  c.cohort.subjects = 24;
  c.features.schema = Schema::Gauss;
  c.features.patches = 50;
  c.features.patch_size = 41;
  c.grid.degrees = {};
  c.grid.sigmas = {8, 16};
  c.grid.Cs = {0.01, 0.1, 1};
  c.grid.qs = {0.5, 1};
  c.outer_folds = 4;
  c.inner_folds = 3;
  c.densemap.params.count = 5;
  c.densemap.params.spacing = 8;
  c.densemap.params.patch_size = c.features.patch_size;
  c.densemap.params.stride = c.features.stride;
  c.densemap.params.gauss = c.features.texture.gauss;
  c.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  c.validate();
  return c;
}

struct PipelineRun {
  Cohort cohort;
  std::vector<Phantom> phantoms;
  NestedCvOutput out;
  std::string report;
  double seconds = 0.0;
};

PipelineRun run_pipeline(const PipelineConfig& c) {
  const auto t0 = Clock::now();
  PipelineRun run;
  run.cohort = generate_cohort(c.cohort, &run.phantoms);
  auto data = std::make_shared<std::vector<SubjectResponses>>();
  for (std::size_t i = 0; i < run.cohort.subjects.size(); ++i) {
    data->push_back(prepare_subject(run.phantoms[i], run.cohort.subjects[i], c.features, c.cohort.seed, i));
  }
  const ResponseBagSource source(data, c.features.bin_samples);
  run.out = nested_cv(source, cohort_plan(run.cohort, c.outer_folds, c.cv_seed), cv_options(c));
  run.report = dump_report(make_report(c, run.out));
  run.seconds = seconds_since(t0);
  return run;
}

const CvResult* result_for(const NestedCvOutput& out, Variant v) {
  for (const auto& r : out.results)
    if (r.variant == v) return &r;
  return nullptr;
}

void criterion5(const PipelineRun& run) {
  int pos = 0;
  for (const auto& s : run.cohort.subjects) pos += s.label > 0;
  const auto* mi = result_for(run.out, Variant::MisvmQ);
  const auto* miles = result_for(run.out, Variant::MilesQ);
  if (!mi || !miles || !mi->instance_auc) {
    verdict(5, false, "missing results");
    return;
  }
  const bool ok = pos == 12 && mi->auc.mean >= 0.90 && mi->separability.mean >= 0.10 && mi->instance_auc->mean >= 0.80 &&
                  mi->auc.mean >= miles->auc.mean;
  std::ostringstream os;
  os.precision(4);
  os << "split " << pos << "/" << 24 - pos << "; miSVM-Q AUC " << mi->auc.mean << " +/- " << mi->auc.sd << " (>= 0.90), S "
     << mi->separability.mean << " (>= 0.10), instance AUC " << mi->instance_auc->mean << " (>= 0.80); MILES-Q AUC "
     << miles->auc.mean << " (miSVM-Q >= MILES-Q); runtime " << std::fixed << std::setprecision(0) << run.seconds << " s";
  verdict(5, ok, os.str());
}

void criterion6(const PipelineRun& run, const PipelineConfig& c) {
  // Classifier lesion percentage against the true lesion fraction, using each subject's held-out model.
  std::vector<double> pct, lf;
  double worst_dice = 0.0;
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < run.cohort.subjects.size(); ++i) {
    const auto& s = run.cohort.subjects[i];
    const FoldModel* chosen = nullptr;
    for (const auto& fm : run.out.models) {
      if (fm.variant == Variant::MisvmQ &&
          std::find(fm.test_subjects.begin(), fm.test_subjects.end(), s.id) != fm.test_subjects.end()) {
        chosen = &fm;
      }
    }
    if (!chosen || !chosen->bins) {
      verdict(6, false, "no held-out model for " + s.id);
      return;
    }
    const auto r = densemap_subject(run.phantoms[i], s, i, c, {{&chosen->model, chosen->bins.get()}}).front();
    pct.push_back(r.classifier_percentage);
    lf.push_back(r.lesion_fraction);
    worst_dice = std::max(worst_dice, std::abs(r.observer_dice - r.expected_dice));
    fallbacks += r.fallback;
  }
  const auto rho = spearman(pct, lf);

  // LAA on constructed volumes with a known number of sub-threshold voxels.
  bool laa_exact = true;
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Dims d{30, 30, 30};
    Image img(d, {}, std::int16_t{-900});
    Mask m(d, {}, 0);
    std::size_t inside = 0, low = 0;
    for (std::size_t v = 0; v < img.size(); ++v) {
      m[v] = rng.uniform() < 0.6;
      const bool below = rng.uniform() < 0.1 * (trial + 1);
      img[v] = static_cast<std::int16_t>(below ? -951 - rng.uniform_int(0, 60) : -950 + rng.uniform_int(0, 300));
      if (m[v]) {
        ++inside;
        low += below;
      }
    }
    laa_exact &= laa_percentage(Volume(img, m), -950.0) == 100.0 * static_cast<double>(low) / static_cast<double>(inside);
  }

  const bool ok = rho.rho >= 0.7 && laa_exact && worst_dice <= 0.05;
  std::ostringstream os;
  os.precision(4);
  os << "Spearman(classifier %, lesion fraction) = " << rho.rho << " (>= 0.7, p " << rho.p << "); LAA exact on 5 volumes: "
     << (laa_exact ? "yes" : "no") << "; max |observer Dice - expected| = " << worst_dice << " (<= 0.05); slice fallbacks "
     << fallbacks;
  verdict(6, ok, os.str());
}

void criterion7(const PipelineRun& run) {
  // Re-derive the artifact audit independently of the run's own log.
  std::size_t audited = 0, leaks = 0;
  for (const auto& fm : run.out.models) {
    const std::set<std::string> test(fm.test_subjects.begin(), fm.test_subjects.end());
    for (const auto& id : fm.model.standardizer.fit_subjects) leaks += test.count(id);
    ++audited;
    if (fm.bins) {
      for (const auto& id : fm.bins->fit_subjects) leaks += test.count(id);
      ++audited;
    }
  }
  const auto& h = run.out.hygiene;
  const bool ok = h.checks > 0 && h.violations.empty() && leaks == 0;
  verdict(7, ok,
          std::to_string(h.checks) + " fit checks with " + std::to_string(h.violations.size()) +
              " violations; independent audit of " + std::to_string(audited) + " outer-fold artifacts found " +
              std::to_string(leaks) + " leaks");
}

void criterion8(const PipelineRun& a, const PipelineRun& b) {
  verdict(8, a.report == b.report && !a.report.empty(),
          "two seeded runs produce " + std::string(a.report == b.report ? "byte-identical" : "different") + " reports (" +
              std::to_string(a.report.size()) + " bytes)");
}

}  // namespace

int main() {
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    const PipelineConfig c = phantom_config();
    const PipelineRun first = run_pipeline(c);
    criterion5(first);
    criterion6(first, c);
    criterion7(first);
    const PipelineRun second = run_pipeline(c);
    criterion8(first, second);
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
