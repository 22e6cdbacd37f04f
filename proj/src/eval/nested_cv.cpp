#include <atomic>
#include <cmath>
#include <thread>

#include "milq/eval.hpp"
#include "milq/rng.hpp"

namespace milq {

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto nthreads = static_cast<std::size_t>(std::max(1, workers));
  if (nthreads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(nthreads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<double> bag_posteriors(const MilModel& m, const MilDataset& d) {
  std::vector<double> out;
  for (const auto& b : d.bags) out.push_back(m.predict_bag(b));
  return out;
}

std::vector<int> bag_labels(const MilDataset& d) {
  std::vector<int> out;
  for (const auto& b : d.bags) out.push_back(b.label);
  return out;
}

std::optional<double> instance_auc(const MilModel& m, const MilDataset& d) {
  std::vector<double> scores;
  std::vector<int> labels;
  bool pos = false, neg = false;
  for (const auto& b : d.bags) {
    if (b.instance_labels.size() != static_cast<std::size_t>(b.size())) return std::nullopt;
    const Eigen::VectorXd p = m.predict_instances(b.instances);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      scores.push_back(p[i]);
      const int l = b.instance_labels[static_cast<std::size_t>(i)] > 0 ? 1 : -1;
      labels.push_back(l);
      (l > 0 ? pos : neg) = true;
    }
  }
  if (!pos || !neg) return std::nullopt;
  return bag_auc(scores, labels);
}

void check_fold(HygieneLog& log, const std::string& where, const FoldData& fd, const MilTrainer& trainer) {
  const auto eval_ids = fd.eval.ids();
  if (fd.bins) log.check(where + " binning", fd.bins->fit_subjects, eval_ids);
  log.check(where + " standardization", trainer.standardizer().fit_subjects, eval_ids);
  log.check(where + " model", fd.train.ids(), eval_ids);
}

std::vector<std::size_t> map_indices(const std::vector<std::size_t>& local, const std::vector<std::size_t>& parent) {
  std::vector<std::size_t> out;
  for (std::size_t i : local) out.push_back(parent.at(i));
  return out;
}

}  // namespace

std::size_t select_cell(const std::vector<CellScore>& cells, double tol) {
  std::size_t best = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.failed) continue;
    if (best == cells.size()) {
      best = i;
      continue;
    }
    const auto& b = cells[best];
    bool better;
    if (std::abs(c.auc - b.auc) > tol) {
      better = c.auc > b.auc;
    } else if (c.separability != b.separability) {
      better = c.separability > b.separability;
    } else if (c.params.C != b.params.C) {
      better = c.params.C < b.params.C;
    } else {
      better = c.params.q < b.params.q;
    }
    if (better) best = i;
  }
  if (best == cells.size()) throw NumericalError("every grid cell failed during model selection");
  return best;
}

NestedCvOutput nested_cv(const BagSource& source, const CvPlan& plan, const NestedCvOptions& opts) {
  opts.grid.validate();
  if (opts.variants.empty()) throw InvalidArgument("no classifier variant requested");
  if (plan.subjects != source.subjects()) throw InvalidArgument("CV plan subjects do not match the bag source");
  const auto points = opts.grid.points();
  const auto kernels = opts.grid.kernels();
  const std::size_t nv = opts.variants.size(), nc = points.size();

  NestedCvOutput out;
  out.results.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) out.results[v].variant = opts.variants[v];

  for (int f = 0; f < plan.folds; ++f) {
    const auto outer_train = plan.train_indices(f);
    const auto outer_test = plan.test_indices(f);
    const CvPlan inner = sub_plan(plan, outer_train, opts.inner_folds, derive_seed(plan.seed, static_cast<std::uint64_t>(f) + 1));

    // [variant][cell] accumulated over inner folds
    std::vector<std::vector<CellScore>> scores(nv, std::vector<CellScore>(nc));
    for (std::size_t v = 0; v < nv; ++v) {
      for (std::size_t c = 0; c < nc; ++c) scores[v][c].params = points[c];
    }
    for (int g = 0; g < inner.folds; ++g) {
      const auto itrain = map_indices(inner.train_indices(g), outer_train);
      const auto ival = map_indices(inner.test_indices(g), outer_train);
      const FoldData fd = source.prepare(itrain, ival);
      MilTrainer trainer(fd.train);
      check_fold(out.hygiene, "outer " + std::to_string(f) + " inner " + std::to_string(g), fd, trainer);
      trainer.precompute(kernels);
      const auto labels = bag_labels(fd.eval);
      std::vector<CellScore> fold_scores(nv * nc);
      parallel_for(nv * nc, opts.workers, [&](std::size_t job) {
        const std::size_t v = job / nc, c = job % nc;
        CellScore& s = fold_scores[job];
        try {
          const MilModel m = trainer.train(opts.variants[v], points[c].kernel, points[c].C, points[c].q, opts.train);
          s.auc = bag_auc(bag_posteriors(m, fd.eval), labels);
          s.separability = separability(m, fd.eval);
        } catch (const Error& e) {
          s.failed = true;
          s.error = e.what();
        }
      });
      for (std::size_t job = 0; job < nv * nc; ++job) {
        CellScore& acc = scores[job / nc][job % nc];
        const CellScore& s = fold_scores[job];
        if (s.failed) {
          if (!acc.failed) acc.error = s.error;
          acc.failed = true;
        }
        acc.auc += s.auc / inner.folds;
        acc.separability += s.separability / inner.folds;
      }
    }

    const FoldData fd = source.prepare(outer_train, outer_test);
    MilTrainer trainer(fd.train);
    check_fold(out.hygiene, "outer " + std::to_string(f), fd, trainer);
    const auto labels = bag_labels(fd.eval);
    for (std::size_t v = 0; v < nv; ++v) {
      FoldResult r;
      r.fold = f;
      r.cells = scores[v];
      for (const auto& c : r.cells) r.failed_cells += c.failed;
      r.chosen = r.cells[select_cell(r.cells, opts.tie_tolerance)].params;
      MilModel m = trainer.train(opts.variants[v], r.chosen.kernel, r.chosen.C, r.chosen.q, opts.train);
      r.converged = m.converged;
      r.test_subjects = fd.eval.ids();
      r.bag_posteriors = bag_posteriors(m, fd.eval);
      r.bag_labels = labels;
      r.auc = bag_auc(r.bag_posteriors, labels);
      r.separability = separability(m, fd.eval);
      r.instance_auc = instance_auc(m, fd.eval);
      out.results[v].folds.push_back(std::move(r));
      out.models.push_back({opts.variants[v], f, std::move(m), fd.bins, fd.eval.ids()});
    }
  }

  for (auto& res : out.results) {
    std::vector<double> aucs, ss, iaucs;
    for (const auto& r : res.folds) {
      aucs.push_back(r.auc);
      ss.push_back(r.separability);
      if (r.instance_auc) iaucs.push_back(*r.instance_auc);
    }
    res.auc = summarize(aucs);
    res.separability = summarize(ss);
    if (iaucs.size() == res.folds.size() && !iaucs.empty()) res.instance_auc = summarize(iaucs);
  }
  return out;
}

}  // namespace milq
